"""Regularised Dirichlet problems on planar domains."""
from .mesh import Domain2D, Mesh, annulus, convex_polygon, disk, generate_mesh
from .fem import (DiscreteField, EpsSweepReport, SweepRecord, classify_sweep, diagnostics,
                  energy, eps_sweep, harmonic_extension, solve_eps)

__all__ = [
    "Domain2D", "Mesh", "annulus", "convex_polygon", "disk", "generate_mesh",
    "DiscreteField", "EpsSweepReport", "SweepRecord", "classify_sweep", "diagnostics",
    "energy", "eps_sweep", "harmonic_extension", "solve_eps",
]
