"""Linear-growth integrands F(s) of the gradient modulus.

An :class:`Integrand` carries F, F', F'' and the coefficient a(s) = F'(s)/s,
normalised so that F(0) = 0 and F'(s) -> 1.  The complement 1 - F'(s) is kept
as a first-class quantity (:meth:`Integrand.tail`) because most constructions
downstream live where F' is within a few ulps of one.
"""
from __future__ import annotations

import math
from functools import cached_property
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .calculus import (DivergenceVerdict, Verdict, classify_divergence,
                       integrate, invert_monotone)
from .errors import (BracketInvalid, InvalidParameter, NotLinearGrowth,
                     NotStrictlyConvex)

__all__ = [
    "Integrand",
    "PrototypeIntegrand",
    "HypothesisReport",
    "ConjugateReport",
    "make_prototype",
    "make_custom",
    "from_table",
    "check_hypotheses",
    "conjugate_blowup_test",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_GL_U = 0.5 * (_GL_X + 1.0)   # nodes mapped to [0, 1]
_GL_W = 0.5 * _GL_W


def _geometric_knots(t_min, t_max, per_decade):
    n = int(round(per_decade * math.log10(t_max / t_min)))
    return np.concatenate([[0.0], np.logspace(math.log10(t_min), math.log10(t_max), n + 1)])


def _gl(f, a, b):
    """Gauss-Legendre integral of ``f`` over [a, b], elementwise in a and b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    h = b - a
    nodes = a[..., None] + h[..., None] * _GL_U
    return h * (f(nodes) @ _GL_W)


class _Cumulative:
    """Running integral of a non-negative function on [0, inf).

    Integrals over each knot interval are computed once; evaluation adds a
    20-point Gauss-Legendre piece from the nearest knot.  ``tail`` gives
    the integral from s to infinity with full relative accuracy.
    """

    def __init__(self, f, t_min=1e-8, t_max=1e100, per_decade=8, with_tail=True):
        self.f = f
        self.knots = _geometric_knots(t_min, t_max, per_decade)
        self.t_max = float(self.knots[-1])
        pieces = _gl(f, self.knots[:-1], self.knots[1:])
        if not np.all(np.isfinite(pieces)):
            raise NotStrictlyConvex("integrand not finite on the tabulation grid")
        self.head_knots = np.concatenate([[0.0], np.cumsum(pieces)])
        self.with_tail = with_tail
        if with_tail:
            far = self._far_tail(self.t_max)
            rev = np.cumsum(pieces[::-1])[::-1]
            self.tail_knots = np.concatenate([rev + far, [far]])
            self.total = float(self.head_knots[-1] + far)
        else:
            self.total = math.inf

    def _index(self, s):
        i = np.searchsorted(self.knots, s, side="right") - 1
        return np.clip(i, 0, len(self.knots) - 2)

    def head(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        inside = s <= self.t_max
        si = s[inside]
        i = self._index(si)
        out[inside] = self.head_knots[i] + _gl(self.f, self.knots[i], si)
        for k in np.flatnonzero(~inside.ravel()):
            sk = s.flat[k]
            out.flat[k] = self.head_knots[-1] + integrate(self.f, self.t_max, sk, rel_tol=1e-12).value
        return out

    def tail(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        inside = s <= self.t_max
        si = s[inside]
        i = self._index(si)
        out[inside] = self.tail_knots[i + 1] + _gl(self.f, si, self.knots[i + 1])
        for k in np.flatnonzero(~inside.ravel()):
            out.flat[k] = self._far_tail(s.flat[k])
        return out

    def _far_tail(self, lo):
        # rescale so the semi-infinite map sees the tail on unit scale
        return lo * integrate(lambda w: self.f(lo * w), 1.0, math.inf, rel_tol=1e-12).value


class Integrand:
    """Normalised strictly convex integrand of linear growth.

    Built from F'' alone: F'(s) = (1/L) * int_0^s F'' with L = int_0^inf F'',
    and F(s) = s F'(s) - int_0^s t F''(t) dt (integration by parts).
    """

    def __init__(self, ddF_raw, label="custom", far_grid_max=1e8, t_max=1e100):
        self.label = label
        self.far_grid_max = float(far_grid_max)
        self.normalized = True
        self._raw = ddF_raw
        self._cum = _Cumulative(ddF_raw, t_max=t_max)
        self.L = self._cum.total
        if not (self.L > 0 and math.isfinite(self.L)):
            raise NotLinearGrowth(f"int_0^inf F'' = {self.L!r}")
        self.t_max = self._cum.t_max
        self._moment = _Cumulative(lambda t: t * self.ddF(t), t_max=t_max, with_tail=False)
        self.s_half = invert_monotone(lambda s: float(self._cum.head(np.array(s))) / self.L,
                                      0.5, tol=1e-15)

    # -- derivatives -----------------------------------------------------
    def ddF(self, s):
        return self._raw(np.asarray(s, dtype=float)) / self.L

    def dF(self, s):
        s = np.asarray(s, dtype=float)
        low = s < self.s_half
        out = np.empty_like(s)
        out[low] = self._cum.head(s[low]) / self.L
        out[~low] = 1.0 - self._cum.tail(s[~low]) / self.L
        return out

    def tail(self, s):
        """1 - F'(s), accurate also when F'(s) rounds to one."""
        s = np.asarray(s, dtype=float)
        low = s < self.s_half
        out = np.empty_like(s)
        out[low] = 1.0 - self._cum.head(s[low]) / self.L
        out[~low] = self._cum.tail(s[~low]) / self.L
        return out

    def moment(self, s):
        """int_0^s t F''(t) dt."""
        return self._moment.head(np.asarray(s, dtype=float))

    def F(self, s):
        s = np.asarray(s, dtype=float)
        return s * self.dF(s) - self.moment(s)

    def a(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.dF(s) / s
        return np.where(s > 0, out, self.ddF(np.zeros_like(s)))

    def da(self, s):
        """a'(s) = (F''(s) - a(s)) / s."""
        s = np.asarray(s, dtype=float)
        safe = np.where(s > 0, s, 1e-12)
        return (self.ddF(safe) - self.a(safe)) / safe

    def s2_da(self, s):
        """s^2 a'(s) = s F''(s) - F'(s)."""
        s = np.asarray(s, dtype=float)
        return s * self.ddF(s) - self.dF(s)

    def r3_defect(self, s):
        """1 + s^2 a'(s) = s F''(s) + (1 - F'(s)); tends to 0 as s grows."""
        s = np.asarray(s, dtype=float)
        return s * self.ddF(s) + self.tail(s)

    # -- inverse of F' ---------------------------------------------------
    def inverse_dF(self, y=None, complement=None):
        """Solve F'(s) = y.  Pass ``complement = 1 - y`` instead of ``y`` to
        keep precision when y is within rounding of one."""
        if complement is None:
            y = np.asarray(y, dtype=float)
            tau = 1.0 - y
        else:
            tau = np.asarray(complement, dtype=float)
            y = 1.0 - tau
        scalar = y.ndim == 0
        y = np.atleast_1d(y).astype(float)
        tau = np.atleast_1d(tau).astype(float)
        if np.any(y < 0) or np.any(tau <= 0):
            raise BracketInvalid("F' maps onto [0, 1); target outside that range")
        out = self._inverse(y, tau)
        return float(out[0]) if scalar else out

    def _inverse(self, y, tau):
        out = np.zeros_like(y)
        direct = (y <= 0.5) & (y > 0)
        if np.any(direct):
            out[direct] = invert_monotone(
                self.dF, y[direct], bracket=(0.0, self.s_half), tol=1e-15, df=self.ddF)
        far = y > 0.5
        if np.any(far):
            out[far] = self._inverse_tail(tau[far])
        return out

    def _inverse_tail(self, tau):
        # solve -log tail(e^u) = -log tau, increasing in u
        target = -np.log(tau)

        def phi(u):
            with np.errstate(divide="ignore"):
                return -np.log(self.tail(np.exp(u)))

        def dphi(u):
            t = np.exp(u)
            return t * self.ddF(t) / self.tail(t)

        u_lo = np.full_like(tau, math.log(self.s_half))
        u_max = math.log(self.t_max)
        u_hi = np.minimum(u_lo + 2.0, u_max)
        for _ in range(64):
            short = phi(u_hi) < target
            if not np.any(short):
                break
            if np.any(short & (u_hi >= u_max)):
                raise BracketInvalid(
                    f"1 - F'(s) = {tau.min():.3g} is not reached below s = {self.t_max:.3g}")
            u_hi = np.where(short, np.minimum(u_lo + 2.0 * (u_hi - u_lo), u_max), u_hi)
        u = invert_monotone(phi, target, bracket=(u_lo, u_hi), tol=1e-13, df=dphi)
        return np.exp(u)

    @cached_property
    def criterion(self):
        """Verdict on int_0^inf t F''(t) dt with the default classifier settings."""
        return classify_divergence(lambda t: t * self.ddF(t), lo=0.0)

    def __repr__(self):
        return f"{type(self).__name__}({self.label!r})"


class PrototypeIntegrand(Integrand):
    """a_p(s) = (1 + s^p)^(-1/p): closed forms for every derivative and for
    the inverse of F'; F itself by quadrature."""

    def __init__(self, p, far_grid_max=1e8):
        p = float(p)
        if not p > 0:
            raise InvalidParameter(f"p must be positive, got {p!r}")
        self.p = p
        self.label = f"prototype{{p={p:g}}}"
        self.far_grid_max = float(far_grid_max)
        self.normalized = True
        self.L = 1.0
        self.t_max = 1e300
        self.s_half = 1.0 / (2.0 ** p - 1.0) ** (1.0 / p)
        self._moment = _Cumulative(lambda t: t * self.ddF(t), t_max=self.t_max, with_tail=False)

    def _logs(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            ls = np.log(s)
        return s, ls, np.logaddexp(0.0, self.p * ls)   # log(1 + s^p)

    def ddF(self, s):
        _, _, l1 = self._logs(s)
        return np.exp(-(1.0 + 1.0 / self.p) * l1)

    def a(self, s):
        _, _, l1 = self._logs(s)
        return np.exp(-l1 / self.p)

    def dF(self, s):
        _, ls, l1 = self._logs(s)
        return np.exp(ls - l1 / self.p)

    def tail(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            inv = np.power(s, -self.p)
        return -np.expm1(-np.log1p(inv) / self.p)

    def da(self, s):
        s, ls, l1 = self._logs(s)
        with np.errstate(invalid="ignore"):
            out = -np.exp((self.p - 1.0) * ls - (1.0 + 1.0 / self.p) * l1)
        if self.p > 1:
            limit = 0.0
        elif self.p == 1:
            limit = -1.0
        else:
            limit = -math.inf
        return np.where(s > 0, out, limit)

    def s2_da(self, s):
        s, ls, l1 = self._logs(s)
        return -np.exp((self.p + 1.0) * ls - (1.0 + 1.0 / self.p) * l1)

    def r3_defect(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            inv = np.power(s, -self.p)
        return -np.expm1(-(1.0 + 1.0 / self.p) * np.log1p(inv))

    def moment(self, s):
        s = np.asarray(s, dtype=float)
        if self.p == 2.0:
            # 1 - (1+s^2)^{-1/2}
            q = np.sqrt(1.0 + s * s)
            return np.where(np.isinf(s), 1.0, s * s / (q * (1.0 + q)))
        if self.p == 1.0:
            # log(1+s) - s/(1+s); power series below 1e-2 avoids the cancellation
            out = np.empty_like(s)
            small = s < 1e-2
            x = s[small]
            coef = [(-1) ** n * (n - 1) / n for n in range(2, 12)]
            out[small] = x * x * np.polynomial.polynomial.polyval(x, coef)
            x = s[~small]
            with np.errstate(invalid="ignore"):
                out[~small] = np.where(np.isinf(x), np.inf, np.log1p(x) - x / (1.0 + x))
            return out
        return super().moment(s)

    def _inverse(self, y, tau):
        # F'(s) = y  <=>  s^p = y^p / (1 - y^p)
        p = self.p
        with np.errstate(divide="ignore"):
            one_minus_yp = np.where(y > 0.5, -np.expm1(p * np.log1p(-tau)), 1.0 - y ** p)
            ls = np.log(y) - np.log(one_minus_yp) / p
        return np.exp(ls)


def make_prototype(p, far_grid_max=1e8):
    """The integrand with coefficient a_p(s) = (1 + s^p)^(-1/p); p = 2 is the
    minimal surface integrand sqrt(1 + s^2) - 1."""
    return PrototypeIntegrand(p, far_grid_max=far_grid_max)


def make_custom(ddF, far_grid_max=1e8, label="custom", t_max=1e100):
    """Integrand defined by its second derivative.

    ``ddF`` must accept arrays.  It is checked for strict positivity on a
    sampling grid and for integrability on the half line; the result is
    rescaled so that F'(inf) = 1.
    """
    grid = np.logspace(-6, math.log10(far_grid_max), 400)
    vals = np.asarray(ddF(grid), dtype=float)
    # far-field values may underflow to zero (e.g. exponential decay)
    if not np.all(np.isfinite(vals)) or np.any(vals[grid <= 10.0] <= 0) or np.any(vals < 0):
        raise NotStrictlyConvex("F'' must be positive on the sampling grid")
    verdict = classify_divergence(ddF, lo=1.0)
    if verdict.verdict is not Verdict.CONVERGES:
        raise NotLinearGrowth(
            f"int F'' classified {verdict.verdict.value} (tail exponent "
            f"{verdict.tail_exponent_estimate:.3g}); F is not of linear growth")
    return Integrand(ddF, label=label, far_grid_max=far_grid_max, t_max=t_max)


def from_table(t, ddF_values, far_grid_max=1e8, label="custom{table}"):
    """Custom integrand from tabulated F''.

    Interpolation is monotone cubic in log-log coordinates; outside the
    table the end segments are continued as power laws.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(ddF_values, dtype=float)
    order = np.argsort(t)
    t, v = t[order], v[order]
    if np.any(t <= 0) or np.any(v <= 0) or len(t) < 3:
        raise NotStrictlyConvex("tabulated F'' needs >= 3 rows with t > 0 and F''(t) > 0")
    lt, lv = np.log(t), np.log(v)
    interp = PchipInterpolator(lt, lv, extrapolate=False)
    slope_hi = (lv[-1] - lv[-2]) / (lt[-1] - lt[-2])
    v0 = v[0]

    def ddF(s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        lo = s <= t[0]
        hi = s >= t[-1]
        mid = ~(lo | hi)
        out[lo] = v0
        with np.errstate(divide="ignore", over="ignore"):
            out[hi] = np.exp(lv[-1] + slope_hi * (np.log(s[hi]) - lt[-1]))
        out[mid] = np.exp(interp(np.log(s[mid])))
        return out

    return make_custom(ddF, far_grid_max=far_grid_max, label=label)


# --------------------------------------------------------------------------
# hypothesis checks

@dataclass
class HypothesisReport:
    label: str
    linear_growth: bool
    C1: float
    C2_growth: float
    oscillation_bound: bool
    C2_oscillation: float
    criterion_A2: DivergenceVerdict
    normalization_A3: bool
    R1_gap: float
    R2_residual: float
    R3_residual: float
    bernstein_genre: float
    regularly_elliptic: bool
    regular_ellipticity_test: DivergenceVerdict
    grid_points: int
    far_grid_max: float
    notes: list = field(default_factory=list)

    @property
    def C2(self):
        return max(self.C2_growth, self.C2_oscillation)

    def to_dict(self):
        return {
            "label": self.label,
            "linear_growth": {"holds": self.linear_growth, "C1": self.C1, "C2": self.C2_growth},
            "oscillation_bound": {"holds": self.oscillation_bound, "C2": self.C2_oscillation,
                                  "status": "verified on grid"},
            "criterion_A2": self.criterion_A2.to_dict(),
            "normalization_A3": self.normalization_A3,
            "R1_gap": self.R1_gap,
            "R2_residual": self.R2_residual,
            "R3_residual": self.R3_residual,
            "bernstein_genre": self.bernstein_genre,
            "regularly_elliptic": self.regularly_elliptic,
            "regular_ellipticity_test": self.regular_ellipticity_test.to_dict(),
            "grid_points": self.grid_points,
            "far_grid_max": self.far_grid_max,
            "notes": list(self.notes),
        }


def check_hypotheses(I, d=2, grid_points=400, margin=0.05):
    """Evaluate the structural hypotheses on a geometric grid over
    [1e-6, I.far_grid_max] and classify the solvability integral
    int t F''(t) dt.  Flags record what the grid could verify; a finite grid
    can refute the universally quantified bounds but never prove them.
    """
    s_far = I.far_grid_max
    grid = np.logspace(-6, math.log10(s_far), grid_points)
    F = I.F(grid)
    dF = I.dF(grid)
    ddF = I.ddF(grid)
    notes = []

    far = grid >= 1.0
    C1 = float(np.min(dF[far]))
    C2_growth = float(max(np.max(C1 * grid - F), np.max(F / (1.0 + grid)), 0.0))
    last_decade = grid >= s_far / 10.0
    ratio = F / (1.0 + grid)
    linear_growth = bool(C1 > 0 and C2_growth > 0 and np.all(np.isfinite(F))
                         and np.max(ratio[last_decade]) <= 1.0 + 1e-9)
    R1_gap = float(np.max(F - grid * dF))     # F(s) - s F'(s) <= 0

    s_osc = grid[far]
    factors = np.linspace(0.5, 2.0, 41)
    t = s_osc[:, None] * factors[None, :]
    osc = I.ddF(s_osc)[:, None] / I.ddF(t)
    sup_by_s = np.max(osc, axis=1)
    C2_osc = float(np.max(sup_by_s))
    last = s_osc >= s_far / 100.0
    oscillation_bound = bool(np.isfinite(C2_osc)
                             and np.max(sup_by_s[last]) <= 1.1 * np.max(sup_by_s[~last]))

    if margin == 0.05:
        crit = I.criterion
    else:
        crit = classify_divergence(lambda x: x * I.ddF(x), lo=0.0, margin=margin)

    S_norm = 1e12
    normalization = bool(abs(float(I.F(np.array(0.0)))) <= 1e-14
                         and float(I.tail(np.array(S_norm))) <= 1e-3)
    if not normalization:
        notes.append("F'(s) has not approached 1 within 1e-3 at s = 1e12")

    R2 = float(np.max(grid[last_decade] * ddF[last_decade]))
    R3 = float(np.max(np.abs(I.r3_defect(grid[last_decade]))))

    sel = grid >= 1e2
    lhs = grid[sel] ** 2 * ddF[sel] / ((d - 1) * I.a(grid[sel]) + ddF[sel])
    slope = np.polyfit(np.log(grid[sel]), np.log(lhs), 1)[0]
    genre = float(2.0 - slope)

    reg = classify_divergence(
        lambda x: I.ddF(x) / (I.ddF(x) + (d - 1) * I.a(x)), lo=1.0, margin=margin)

    return HypothesisReport(
        label=I.label, linear_growth=linear_growth, C1=C1, C2_growth=C2_growth,
        oscillation_bound=oscillation_bound, C2_oscillation=C2_osc,
        criterion_A2=crit, normalization_A3=normalization, R1_gap=R1_gap,
        R2_residual=R2, R3_residual=R3, bernstein_genre=genre,
        regularly_elliptic=reg.verdict is Verdict.DIVERGES,
        regular_ellipticity_test=reg, grid_points=grid_points, far_grid_max=s_far,
        notes=notes)


@dataclass
class ConjugateReport:
    points: list
    threshold: float
    exceeds_threshold: bool
    limit_estimate: float

    def to_dict(self):
        return {"points": [[y, v] for y, v in self.points], "threshold": self.threshold,
                "exceeds_threshold": self.exceeds_threshold,
                "limit_estimate": self.limit_estimate}


def conjugate_blowup_test(I, y_grid, threshold=10.0):
    """Evaluate F*(y) = sup_s (s y - F(s)) along ``y_grid``.

    The supremum is attained at s = (F')^{-1}(y).  F* stays bounded as y -> 1
    exactly when int t F''(t) dt converges.
    """
    y = np.atleast_1d(np.asarray(y_grid, dtype=float))
    tau = 1.0 - y
    s = np.atleast_1d(I.inverse_dF(complement=tau))
    # y s - F(s) = int_0^s t F'' - s (F'(s) - y); written without cancellation
    vals = I.moment(s) + s * (I.tail(s) - tau)
    points = [(float(a), float(b)) for a, b in zip(y, vals)]
    return ConjugateReport(points=points, threshold=float(threshold),
                           exceeds_threshold=bool(np.max(vals) > threshold),
                           limit_estimate=float(vals[np.argmax(y)]))
