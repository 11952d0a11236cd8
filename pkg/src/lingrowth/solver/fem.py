"""P1 finite elements for the regularised problem

    minimise  sum_T |T| ( eps/2 |grad w|^2 + F(|grad w|) )

over continuous piecewise-linear w with prescribed boundary values, whose
Euler-Lagrange equation is -eps Lap u - div(a(|grad u|) grad u) = 0.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import InvalidParameter, NewtonStalled
from .mesh import Mesh, generate_mesh

__all__ = [
    "DiscreteField",
    "SolveInfo",
    "SweepRecord",
    "EpsSweepReport",
    "energy",
    "solve_eps",
    "harmonic_extension",
    "diagnostics",
    "eps_sweep",
    "classify_sweep",
]

DYAD_CUTOFF = 1e-10
MAX_LS_FAILURES = 50


@dataclass
class DiscreteField:
    mesh: Mesh
    values: np.ndarray

    def gradients(self):
        return self.mesh.gradients(self.values)

    def to_dict(self):
        return {"mesh_hash": self.mesh.hash(), "values": self.values.tolist()}


@dataclass
class SolveInfo:
    iterations: int
    residual: float
    converged: bool
    energies: list = field(default_factory=list)
    gradient_steps: int = 0


def _element_terms(mesh, I, eps, u):
    G = mesh.gradients(u)
    s = np.linalg.norm(G, axis=1)
    return G, s


def energy(mesh, I, eps, u):
    G, s = _element_terms(mesh, I, eps, u)
    return float(math.fsum(mesh.areas * (0.5 * eps * s * s + I.F(s))))


def _residual(mesh, I, eps, u):
    G, s = _element_terms(mesh, I, eps, u)
    coef = (eps + I.a(s)) * mesh.areas
    loc = np.einsum("td,tkd->tk", coef[:, None] * G, mesh.basis_grad)
    return np.bincount(mesh.triangles.ravel(), loc.ravel(), minlength=len(u))


def _hessian(mesh, I, eps, u):
    G, s = _element_terms(mesh, I, eps, u)
    a = I.a(s)
    B = mesh.basis_grad
    # (eps + a) I + (F'' - a) g g^T, the dyad dropped at vanishing gradient
    loc = (eps + a)[:, None, None] * np.einsum("tid,tjd->tij", B, B)
    big = s > DYAD_CUTOFF
    if np.any(big):
        ghat = G[big] / s[big, None]
        Bg = np.einsum("tid,td->ti", B[big], ghat)
        loc[big] += (I.ddF(s[big]) - a[big])[:, None, None] * Bg[:, :, None] * Bg[:, None, :]
    loc *= mesh.areas[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = len(u)
    return sp.csr_matrix((loc.ravel(), (rows, cols)), shape=(n, n))


def harmonic_extension(mesh, u_boundary):
    """Discrete harmonic function with the given boundary values."""
    B = mesh.basis_grad
    loc = np.einsum("tid,tjd->tij", B, B) * mesh.areas[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = len(mesh.vertices)
    K = sp.csr_matrix((loc.ravel(), (rows, cols)), shape=(n, n))
    bd = mesh.boundary
    fi = mesh.interior
    # extend the deviation from the mean so constant data stay exactly constant
    level = float(np.mean(u_boundary[bd]))
    w = np.zeros(n)
    w[bd] = u_boundary[bd] - level
    w[fi] = spla.spsolve(K[fi][:, fi].tocsc(), -(K[fi][:, bd] @ w[bd]))
    u = w + level
    u[bd] = u_boundary[bd]
    return u


def solve_eps(I, mesh, u0, eps, newton_tol=1e-10, u_init=None, max_iter=200):
    """Damped Newton on the discrete energy.

    ``u0`` holds vertex values; only boundary entries are used.  Returns
    (DiscreteField, SolveInfo).  Raises NewtonStalled (with ``field`` and
    ``info`` attached) when the line search fails 50 times in one step.
    """
    if not eps > 0:
        raise InvalidParameter("eps must be positive")
    u0 = np.asarray(u0, dtype=float)
    if not np.all(np.isfinite(u0[mesh.boundary])):
        raise InvalidParameter("boundary data must be finite")
    bd = mesh.boundary
    fi = mesh.interior
    if u_init is None:
        u = harmonic_extension(mesh, u0)
    else:
        u = np.array(u_init, dtype=float)
    u[bd] = u0[bd]

    E = energy(mesh, I, eps, u)
    r = _residual(mesh, I, eps, u)[fi]
    res = float(np.linalg.norm(r))
    info = SolveInfo(iterations=0, residual=res, converged=res <= newton_tol, energies=[E])
    while not info.converged and info.iterations < max_iter:
        H = _hessian(mesh, I, eps, u)[fi][:, fi].tocsc()
        try:
            du = spla.spsolve(H, -r)
            if not np.all(np.isfinite(du)) or du @ r >= 0:
                raise RuntimeError("not a descent direction")
        except RuntimeError:
            # singular or indefinite system: fall back to a gradient step
            du = -r / max(np.max(np.abs(r)), 1e-300) * mesh.h
            info.gradient_steps += 1
        slope = float(du @ r)
        alpha = 1.0
        failures = 0
        while True:
            trial = u.copy()
            trial[fi] += alpha * du
            E_new = energy(mesh, I, eps, trial)
            r_new = _residual(mesh, I, eps, trial)[fi]
            res_new = float(np.linalg.norm(r_new))
            sufficient = E_new <= E + 1e-4 * alpha * slope
            # at round-off level the energy cannot resolve progress; the residual can
            roundoff = E_new <= E + 1e-14 * abs(E) and res_new < res
            if (sufficient or roundoff) and np.isfinite(E_new):
                break
            failures += 1
            alpha *= 0.5
            if failures >= MAX_LS_FAILURES:
                info.residual = res
                err = NewtonStalled(
                    f"line search failed {failures} times at Newton step "
                    f"{info.iterations + 1} (residual {res:.3e}, eps = {eps:g})")
                err.field = DiscreteField(mesh, u)
                err.info = info
                raise err
        u, E, r, res = trial, E_new, r_new, res_new
        info.iterations += 1
        info.energies.append(E)
        info.residual = res
        info.converged = res <= newton_tol
    return DiscreteField(mesh, u), info


def diagnostics(field_, I, eps):
    mesh = field_.mesh
    G = field_.gradients()
    s = np.linalg.norm(G, axis=1)
    sup_grad = float(np.max(s)) if len(s) else 0.0
    near = mesh.boundary_triangles()
    bmax = float(np.max(s[near])) if np.any(near) else 0.0
    imax = float(np.max(s[~near])) if np.any(~near) else 0.0
    if sup_grad == 0.0:
        ratio = 1.0
    elif imax == 0.0:
        ratio = math.inf
    else:
        ratio = bmax / imax
    A = mesh.areas
    return {
        "sup_u": float(np.max(np.abs(field_.values))),
        "sup_grad": sup_grad,
        "boundary_layer_ratio": ratio,
        "energy": float(math.fsum(A * (0.5 * eps * s * s + I.F(s)))),
        "ae1": float(math.fsum(A * (eps * s * s + s))),
    }


@dataclass
class SweepRecord:
    eps: float
    energy: float
    sup_u: float
    sup_grad: float
    boundary_layer_ratio: float
    newton_iters: int
    converged: bool
    ae1: float
    residual: float = 0.0
    seconds: float = 0.0

    COLUMNS = ("eps", "energy", "sup_u", "sup_grad", "boundary_layer_ratio",
               "newton_iters", "converged", "ae1")

    def row(self):
        return [getattr(self, c) for c in self.COLUMNS]


@dataclass
class EpsSweepReport:
    records: list
    classification: str
    mesh: Mesh = None
    fields: list = field(default_factory=list)

    def to_dict(self):
        return {"classification": self.classification,
                "records": [{c: getattr(r, c) for c in SweepRecord.COLUMNS} for r in self.records]}


def classify_sweep(sup_grads, growth=10.0, band=0.10):
    """'blow-up' if the last sup_grad is >= growth x the first, 'uniform' if
    it varies by at most ``band`` over the last three, else 'undetermined'
    (also for fewer than three values)."""
    g = [float(x) for x in sup_grads]
    if len(g) < 3 or not all(np.isfinite(g)):
        return "undetermined"
    if g[0] > 0 and g[-1] >= growth * g[0]:
        return "blow-up"
    last = g[-3:]
    lo, hi = min(last), max(last)
    if hi == 0.0 or (lo > 0 and hi / lo - 1.0 <= band):
        return "uniform"
    return "undetermined"


def eps_sweep(I, D, u0, h, eps_list, newton_tol=1e-10, grading=1.0, mesh=None,
              keep_fields=False, on_record=None):
    """Solve for each eps in the decreasing list, warm-starting each solve
    from the previous solution.  Non-converged solves are recorded and the
    sweep goes on.  ``on_record(record, field)`` is called after each solve."""
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list[:-1], eps_list[1:])):
        raise InvalidParameter("eps_list must be strictly decreasing")
    if mesh is None:
        mesh = generate_mesh(D, h, grading=grading)
    u0v = u0(mesh.vertices) if callable(u0) else np.asarray(u0, dtype=float)
    records, fields = [], []
    u_prev = None
    for eps in eps_list:
        t0 = time.perf_counter()
        try:
            fld, info = solve_eps(I, mesh, u0v, eps, newton_tol=newton_tol, u_init=u_prev)
        except NewtonStalled as err:
            fld, info = err.field, err.info
        diag = diagnostics(fld, I, eps)
        records.append(SweepRecord(eps=eps, newton_iters=info.iterations, converged=info.converged,
                                   residual=info.residual, seconds=time.perf_counter() - t0,
                                   **diag))
        fields.append(fld)
        if on_record is not None:
            on_record(records[-1], fld)
        u_prev = fld.values
    cls = classify_sweep([r.sup_grad for r in records])
    return EpsSweepReport(records=records, classification=cls, mesh=mesh,
                          fields=fields if keep_fields else [fields[-1]])
