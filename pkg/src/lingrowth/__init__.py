"""Linear-growth variational problems: solvability criterion, radial
obstruction, barrier construction and regularised finite-element solves."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .calculus import Verdict, DivergenceVerdict, classify_divergence, integrate, invert_monotone  # noqa: E402
from .integrand import (  # noqa: E402
    Integrand,
    PrototypeIntegrand,
    check_hypotheses,
    conjugate_blowup_test,
    from_table,
    make_custom,
    make_prototype,
)
from .radial import RadialProblem, RadialSolution, Unattainable, max_gap, paper_bound, solve_radial  # noqa: E402
from .barrier import BarrierParams, build_weight, certify, select_M  # noqa: E402
from .solver import Domain2D, eps_sweep, generate_mesh, solve_eps  # noqa: E402
