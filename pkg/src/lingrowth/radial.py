"""Radially symmetric solutions on the annulus r_in < |x| < r_out.

A radial minimiser with u = 0 on the inner sphere and u = M on the outer one
satisfies the first integral F'(U'(r)) r^{d-1} = c r_in^{d-1}, so

    U(r) = int_{r_in}^r (F')^{-1}(c (r_in/s)^{d-1}) ds,   0 < c < 1.

The supremum of U(r_out; c) over c is the largest gap M that a radial
solution can bridge; it is finite exactly when int t F'' converges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calculus import Verdict, integrate, invert_monotone
from .errors import CriterionDiverges, InconsistentWithCriterion, InvalidParameter
from .integrand import Integrand

__all__ = [
    "RadialProblem",
    "RadialSolution",
    "Unattainable",
    "profile",
    "max_gap",
    "solve_radial",
    "paper_bound",
    "C0",
]

GAP_CEILING = 1e6
C_BRACKET = (1e-8, 1.0 - 1e-12)
_QUAD_TOL = 1e-12


@dataclass(frozen=True)
class RadialProblem:
    I: Integrand
    d: int = 2
    r_in: float = 1.0
    r_out: float = 2.0
    M: float = 0.0

    def __post_init__(self):
        if not (0 < self.r_in < self.r_out):
            raise InvalidParameter(f"need 0 < r_in < r_out, got {self.r_in}, {self.r_out}")
        if int(self.d) != self.d or self.d < 2:
            raise InvalidParameter(f"dimension must be an integer >= 2, got {self.d}")


def _slope(P, c, x, q=None):
    """U'(r_in + x) for flux constant c; x may be an array.  When given,
    q = 1 - c carries the digits that c itself cannot hold near 1."""
    x = np.asarray(x, dtype=float)
    if c == 0 and q is None:
        return np.zeros_like(x)
    logc = math.log1p(-q) if q is not None else math.log(c)
    # 1 - c (r_in / r)^{d-1}, formed in log space so c -> 1 keeps its digits
    tau = -np.expm1(logc - (P.d - 1) * np.log1p(x / P.r_in))
    return P.I.inverse_dF(complement=tau)


def _U_between(P, c, x0, x1, rel_tol=_QUAD_TOL, q=None):
    return integrate(lambda x: _slope(P, c, x, q), x0, x1, rel_tol=rel_tol, abs_tol=1e-15,
                     max_subdivisions=20000).value


def _U_out(P, c, rel_tol=_QUAD_TOL, q=None):
    return _U_between(P, c, 0.0, P.r_out - P.r_in, rel_tol, q)


def _dU_out_dc(P, c):
    def f(x):
        w = np.exp(-(P.d - 1) * np.log1p(x / P.r_in))
        return w / P.I.ddF(_slope(P, c, x))
    return integrate(f, 0.0, P.r_out - P.r_in, rel_tol=1e-8).value


@dataclass
class RadialSolution:
    """Profile U with flux constant c.  ``sign = -1`` for the mirrored
    problem with a negative gap."""

    problem: RadialProblem
    c: float
    M_attained: float
    M_max: float
    C0: float
    sign: float = 1.0
    one_minus_c: float = None

    def dU(self, r):
        r = np.asarray(r, dtype=float)
        return self.sign * _slope(self.problem, self.c, r - self.problem.r_in, self.one_minus_c)

    def U(self, r):
        """Profile at radii ``r`` (array), by cumulative quadrature over the
        sorted distinct radii."""
        P = self.problem
        r = np.asarray(r, dtype=float)
        if np.any(r < P.r_in * (1 - 1e-12)):
            raise InvalidParameter("profile is defined for r >= r_in only")
        # round-off below r_in (e.g. mesh vertices on the inner circle) maps to r_in
        flat = np.maximum(r.ravel(), P.r_in)
        uniq, inv = np.unique(flat, return_inverse=True)
        x = uniq - P.r_in
        pieces = np.array([_U_between(P, self.c, a, b, q=self.one_minus_c)
                           for a, b in zip(np.r_[0.0, x[:-1]], x)])
        vals = np.cumsum(pieces)
        return self.sign * vals[inv].reshape(r.shape)

    def to_dict(self):
        P = self.problem
        return {"label": P.I.label, "d": P.d, "r_in": P.r_in, "r_out": P.r_out,
                "c": self.c, "one_minus_c": 1.0 - self.c if self.one_minus_c is None else self.one_minus_c,
                "M_attained": self.sign * self.M_attained,
                "M_max": _num(self.M_max), "C0": _num(self.C0)}


@dataclass(frozen=True)
class Unattainable:
    """Requested gap is at or beyond the supremum of radial gaps."""

    M: float
    M_max: float

    def to_dict(self):
        return {"M": self.M, "M_max": _num(self.M_max), "attainable": False}


def _num(x):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def C0(I):
    """int_1^inf t F''(t) dt (+inf when the criterion integral diverges)."""
    if I.criterion.verdict is Verdict.DIVERGES:
        return math.inf
    return integrate(lambda t: t * I.ddF(t), 1.0, math.inf, rel_tol=1e-12).value


def _limit_at_one(P):
    # U(r_out; 1): integrable singularity of U' at r_in
    return integrate(lambda x: _slope(P, 1.0, x), 0.0, P.r_out - P.r_in,
                     rel_tol=1e-10, abs_tol=1e-13, max_subdivisions=20000).value


def max_gap_sequence(P, k_max=40):
    """(c_k, U(r_out; c_k)) for c_k = 1 - 2^{-k}, k = 1..k_max."""
    cs = 1.0 - 2.0 ** -np.arange(1, k_max + 1)
    return cs, np.array([_U_out(P, float(c)) for c in cs])


def max_gap(P, ceiling=GAP_CEILING):
    """Supremum of U(r_out; c) over c in (0, 1); ``math.inf`` when divergent."""
    cs, vals = max_gap_sequence(P)
    late = vals[39] - vals[29]
    prev = vals[29] - vals[19]
    divergent = bool(vals[-1] > ceiling or late >= 0.5 * prev)
    verdict = P.I.criterion.verdict
    if verdict is not Verdict.INCONCLUSIVE and divergent != (verdict is Verdict.DIVERGES):
        raise InconsistentWithCriterion(
            f"radial gap sequence looks {'divergent' if divergent else 'bounded'} "
            f"(increments {late:.3g} vs {prev:.3g}) but criterion is {verdict.value}")
    if divergent:
        return math.inf
    return max(_limit_at_one(P), float(vals[-1]))


def profile(P, c, M_max=None):
    """Radial profile for flux constant c in (0, 1)."""
    if not (0.0 < c < 1.0):
        raise InvalidParameter(f"flux constant must lie in (0, 1), got {c!r}")
    if M_max is None:
        M_max = max_gap(P)
    return RadialSolution(problem=P, c=float(c), M_attained=_U_out(P, c),
                          M_max=M_max, C0=C0(P.I))


def solve_radial(P, tol=1e-10, M_max=None):
    """Flux constant reaching U(r_out) = P.M, or :class:`Unattainable`."""
    if M_max is None:
        M_max = max_gap(P)
    M = abs(P.M)
    sign = -1.0 if P.M < 0 else 1.0
    c0 = C0(P.I)
    if M == 0:
        return RadialSolution(problem=P, c=0.0, M_attained=0.0, M_max=M_max, C0=c0)
    if M >= M_max:
        return Unattainable(M=P.M, M_max=M_max)
    lo, hi = C_BRACKET
    if M > _U_out(P, hi):
        # beyond the reach of c in double precision: solve for t = -log(1 - c)
        t = invert_monotone(lambda t: _U_out(P, 0.0, q=math.exp(-t)), M,
                            bracket=(-math.log1p(-hi), -math.log(1e-300)), tol=tol)
        q = math.exp(-t)
        return RadialSolution(problem=P, c=1.0 - q, M_attained=_U_out(P, 0.0, q=q), M_max=M_max,
                              C0=c0, sign=sign, one_minus_c=q)
    if M < _U_out(P, lo):
        lo = 0.0
    c = invert_monotone(lambda c: _U_out(P, c), M, bracket=(lo, hi), tol=tol,
                        df=lambda c: _dU_out_dc(P, c))
    return RadialSolution(problem=P, c=float(c), M_attained=_U_out(P, c), M_max=M_max,
                          C0=c0, sign=sign)


def paper_bound(P):
    """(2^d / (d-1)) (1 + C0 / F'(1)); an upper bound for the radial gap on
    the annulus 1 < |x| < 2."""
    if P.I.criterion.verdict is Verdict.DIVERGES:
        raise CriterionDiverges("int t F'' diverges; the bound is vacuous")
    c0 = C0(P.I)
    return (2.0 ** P.d / (P.d - 1)) * (1.0 + c0 / float(P.I.dF(np.array(1.0))))
