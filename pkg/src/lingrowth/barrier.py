"""Barrier functions for the boundary gradient estimate.

Starting from an integrand F satisfying the solvability criterion, a
decreasing weight g produces a weakened integrand F_g (F_g'' = F'' g) that
still satisfies the criterion.  The radial profile

    b(r) = (F_g')^{-1}((1 - delta)^{d-1} r0^{d-1} / r^{d-1}),   r >= r0,

integrates to omega(x) = int_{r0}^{|x|} b, an exact solution of the F_g
equation outside B_{r0}.  Tilted by an affine function, v = omega + k.x + c
becomes a super-solution of the F equation wherever b(|x|) >= M.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import Verdict, integrate
from .errors import (BudgetExhausted, CriterionConverges,
                     DegenerateGradient, InvalidParameter, NotFound)
from .integrand import Integrand, check_hypotheses, make_custom

__all__ = [
    "WeightedIntegrand",
    "BarrierParams",
    "BarrierEval",
    "ExteriorBallGeometry",
    "CertificationReport",
    "build_weight",
    "profile_b",
    "profile_b_prime",
    "omega",
    "eval_barrier",
    "select_M",
    "select_delta_max",
    "select_delta_for_height",
    "height",
    "height_lower_bound",
    "normal_derivative_bound",
    "flux_defect",
    "certify",
    "region_radius",
    "smallest_resolvable_delta",
    "require_criterion",
]


@dataclass
class WeightedIntegrand:
    base: Integrand
    A: float
    Fg: Integrand

    def g_tilde(self, s):
        return 1.0 / (1.0 + self.base.moment(s))

    def g(self, s):
        return self.g_tilde(s) / self.A

    def ag(self, s):
        return self.Fg.a(s)

    def dag(self, s):
        return self.Fg.da(s)


def build_weight(I, t_max=1e150):
    """g~(s) = 1 / (1 + int_0^s t F''), A = int_0^inf F'' g~, g = g~ / A,
    and the weakened integrand with F_g'' = F'' g."""
    def ddF_weighted(t):
        return I.ddF(t) / (1.0 + I.moment(t))

    Fg = make_custom(ddF_weighted, far_grid_max=I.far_grid_max,
                     label=f"weighted[{I.label}]", t_max=t_max)
    return WeightedIntegrand(base=I, A=Fg.L, Fg=Fg)


@dataclass
class BarrierParams:
    r0: float
    delta: float
    k: np.ndarray = None
    c_affine: float = 0.0
    K: float = 0.0
    M: float = 0.0
    delta_max: float = 0.5
    d: int = 2

    def __post_init__(self):
        if self.k is None:
            self.k = np.zeros(self.d)
        self.k = np.asarray(self.k, dtype=float)
        if not self.r0 > 0:
            raise InvalidParameter("r0 must be positive")
        if not (0 < self.delta < 1):
            raise InvalidParameter(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.k.shape != (self.d,):
            raise InvalidParameter(f"k must have {self.d} components")

    @property
    def r_max(self):
        dm = self.delta_max
        return (1.0 - dm) * self.r0 / (1.0 - 2.0 * dm)

    @property
    def flux(self):
        """(1 - delta)^{d-1} r0^{d-1}."""
        return ((1.0 - self.delta) * self.r0) ** (self.d - 1)


def _complement(P, r):
    # 1 - (1-delta)^{d-1} (r0/r)^{d-1}, without cancellation near r = r0
    rho = np.asarray(r, dtype=float) - P.r0
    return -np.expm1((P.d - 1) * (math.log1p(-P.delta) - np.log1p(rho / P.r0)))


def _b_offset(W, P, rho):
    """b(r0 + rho)."""
    rho = np.asarray(rho, dtype=float)
    tau = -np.expm1((P.d - 1) * (math.log1p(-P.delta) - np.log1p(rho / P.r0)))
    return W.Fg.inverse_dF(complement=tau)


def profile_b(W, P, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < P.r0):
        raise InvalidParameter("b is defined for r >= r0")
    return W.Fg.inverse_dF(complement=_complement(P, r))


def profile_b_prime(W, P, r, b=None):
    """b'(r) = -(d-1) (1-delta)^{d-1} r0^{d-1} / (r^d F_g''(b(r)))."""
    r = np.asarray(r, dtype=float)
    if b is None:
        b = profile_b(W, P, r)
    return -(P.d - 1) * P.flux / (r ** P.d * W.Fg.ddF(b))


def flux_defect(W, P, r):
    """F_g'(b(r)) r^{d-1} - (1-delta)^{d-1} r0^{d-1}."""
    r = np.asarray(r, dtype=float)
    return W.Fg.dF(profile_b(W, P, r)) * r ** (P.d - 1) - P.flux


def _omega_radius(W, P, r):
    return integrate(lambda rho: _b_offset(W, P, rho), 0.0, r - P.r0,
                     rel_tol=1e-10, abs_tol=1e-14).value


def omega(W, P, x):
    """omega(x) = int_{r0}^{|x|} b(r) dr for a point or an (n, d) array."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r < P.r0 * (1 - 1e-15)):
        raise InvalidParameter("omega is defined outside B_{r0}")
    r = np.maximum(r, P.r0)
    if r.ndim == 0:
        return _omega_radius(W, P, float(r))
    return np.array([_omega_radius(W, P, float(ri)) for ri in r.ravel()]).reshape(r.shape)


def _residuals(W, P, x, r, b, bp, k):
    """L~1, L~2 and Laplacian of omega; ``k`` has one row per point."""
    I, Fg = W.base, W.Fg
    grad = b[:, None] * x / r[:, None] + k
    s = np.linalg.norm(grad, axis=1)
    if np.any(s < 1e-12):
        raise DegenerateGradient("|grad v| vanishes; L~1 divides by it")
    kx = np.sum(k * x, axis=1)
    kk = np.sum(k * k, axis=1)
    transverse = (kk * r ** 2 - kx ** 2) / r ** 3      # |k|^2/r - (k.x)^2/r^3
    lt1 = I.da(s) / s * bp * (r - b / bp) * transverse
    # a(s) [a'(s)s/a(s) - a_g'(b)b/a_g(b)] = F''(s) - (F'(s)/s) b F_g''(b)/F_g'(b)
    lt2 = -bp * (I.ddF(s) - I.dF(s) / s * b * Fg.ddF(b) / Fg.dF(b))
    lap = bp + (P.d - 1) * b / r
    return grad, kx, lt1, lt2, lap


@dataclass
class BarrierEval:
    b: np.ndarray
    b_prime: np.ndarray
    omega: np.ndarray
    v: np.ndarray
    grad_v: np.ndarray
    L_residual: np.ndarray
    Ltilde1: np.ndarray
    Ltilde2: np.ndarray
    laplacian_omega: np.ndarray


def eval_barrier(W, P, x, with_omega=True):
    """Evaluate b, omega, v, grad v and the divergence expression
    L = -div(a(|grad v|) grad v) split as L~1 + L~2 at points ``x``
    (shape (d,) or (n, d)).  ``with_omega=False`` skips the quadrature for
    omega and v (they are then NaN)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != P.d:
        raise InvalidParameter(f"points must have {P.d} coordinates")
    r = np.linalg.norm(x, axis=1)
    if np.any(r <= P.r0):
        raise InvalidParameter("barrier evaluation requires |x| > r0")
    b = profile_b(W, P, r)
    bp = profile_b_prime(W, P, r, b)
    k = np.broadcast_to(P.k, x.shape)
    grad, kx, lt1, lt2, lap = _residuals(W, P, x, r, b, bp, k)

    if with_omega:
        om = np.array([_omega_radius(W, P, float(ri)) for ri in r])
        v = om + kx + P.c_affine
    else:
        om = np.full_like(r, np.nan)
        v = np.full_like(r, np.nan)
    out = BarrierEval(b=b, b_prime=bp, omega=om, v=v, grad_v=grad,
                      L_residual=lt1 + lt2, Ltilde1=lt1, Ltilde2=lt2, laplacian_omega=lap)
    if single:
        out = BarrierEval(**{f: (getattr(out, f)[0]) for f in out.__dataclass_fields__})
    return out


# --------------------------------------------------------------------------
# constant selection

@dataclass
class MSelection:
    M: float
    M1: float
    M2: float
    M3: float
    M2_base: float
    M2_weighted: float
    C2: float
    binding: str

    def to_dict(self):
        return dict(self.__dict__)


def _first_from(grid, ok):
    """Smallest grid value from which ``ok`` holds at every larger grid value."""
    bad = np.flatnonzero(~ok)
    if len(bad) == 0:
        return float(grid[0])
    if bad[-1] == len(grid) - 1:
        return math.nan
    return float(grid[bad[-1] + 1])


def select_M(W, P=None, K=1.0, C2=None, per_decade=64, s_min=1e-3, s_max=1e12):
    """M = max(M1, M2, M3) on a geometric grid.

    M1 = 2K.  M2: s^2 a_g'(s) <= -1/2 for s >= M2, and s^2 a'(s) <= -1/2 for
    s >= M2 - K (because |grad v| >= b - |k|).  M3: 2 C2 g(M3) <= 1 with C2
    the oscillation constant of F''.
    """
    I = W.base
    if C2 is None:
        C2 = check_hypotheses(I).C2_oscillation
    n = int(round(per_decade * math.log10(s_max / s_min))) + 1
    grid = np.logspace(math.log10(s_min), math.log10(s_max), n)
    M1 = 2.0 * K
    t_base = _first_from(grid, I.s2_da(grid) <= -0.5)
    t_g = _first_from(grid, W.Fg.s2_da(grid) <= -0.5)
    t_osc = _first_from(grid, 2.0 * C2 * W.g(grid) <= 1.0)
    if any(math.isnan(t) for t in (t_base, t_g, t_osc)):
        raise NotFound(f"no M <= {s_max:g} satisfies the barrier conditions")
    M2 = max(M1, t_g, t_base + K)
    M3 = t_osc
    cand = max(M1, M2, M3)
    M = float(grid[np.searchsorted(grid, cand * (1 - 1e-12))]) if cand > grid[0] else float(grid[0])
    binding = "M1" if M1 >= max(M2, M3) else ("M2" if M2 >= M3 else "M3")
    return MSelection(M=M, M1=M1, M2=M2, M3=M3, M2_base=t_base, M2_weighted=t_g,
                      C2=float(C2), binding=binding)


def select_delta_max(W, M, Mstar_u0, d=2):
    """Largest delta_max with (F_g')^{-1}(s) >= max(M, Mstar_u0) on
    [(1 - 2 delta_max)^{d-1}, 1).  Returns (delta_max, T)."""
    T = max(float(M), float(Mstar_u0))
    tail = float(W.Fg.tail(np.array(T)))
    # 1 - F_g'(T)^{1/(d-1)} computed from the tail
    dm = -math.expm1(math.log1p(-tail) / (d - 1)) / 2.0
    return dm, T


def r_max(r0, delta_max):
    return (1.0 - delta_max) * r0 / (1.0 - 2.0 * delta_max)


def height(W, P, eta):
    """int_{r0}^{r0+eta} b(r) dr, integrated in the offset variable with
    breakpoints at r0 * delta * 10^j (b varies on that scale near r0)."""
    pts = [0.0]
    x = P.delta * P.r0
    while x < eta:
        pts.append(x)
        x *= 10.0
    pts.append(eta)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        total += integrate(lambda rho: _b_offset(W, P, rho), lo, hi,
                           rel_tol=1e-9, abs_tol=1e-14).value
    return total


def height_lower_bound(W, P, eta):
    """alpha * int_{(F_g')^{-1}(1-alpha)}^{b(r0)} t F_g''(t) dt, with
    alpha = min(r0/(d-1), 1 - r0^{d-1}/(r0+eta)^{d-1})."""
    d, r0 = P.d, P.r0
    alpha = min(r0 / (d - 1), 1.0 - (r0 / (r0 + eta)) ** (d - 1))
    if alpha >= 1.0:
        lo = math.inf
    else:
        lo = W.Fg.inverse_dF(complement=alpha)
    hi = float(profile_b(W, P, np.array(r0)))
    if not math.isfinite(lo):
        return alpha, -math.inf
    return alpha, alpha * float(W.Fg.moment(np.array(hi)) - W.Fg.moment(np.array(lo)))


def smallest_resolvable_delta(W, d=2):
    """Below this delta the complement 1 - (1-delta)^{d-1} drops under the
    smallest tail 1 - F_g' that the tabulated F_g can invert."""
    return 2.0 * float(W.Fg.tail(np.array(W.Fg.t_max))) / (d - 1)


def select_delta_for_height(W, P, eta, target):
    """First delta = delta_max / 2^j whose barrier height over [r0, r0+eta]
    reaches ``target``.  The height increases as delta decreases, so j is
    located by doubling and bisection instead of a linear scan; the result
    is the same.

    Returns (delta, achieved height).  Raises BudgetExhausted when even the
    smallest resolvable delta falls short.
    """
    dmax = P.delta_max
    j_max = max(0, int(math.floor(math.log2(dmax / smallest_resolvable_delta(W, P.d)))))
    cache = {}

    def h(j):
        if j not in cache:
            Q = BarrierParams(r0=P.r0, delta=dmax / 2.0 ** j, k=P.k, c_affine=P.c_affine,
                              K=P.K, M=P.M, delta_max=dmax, d=P.d)
            cache[j] = height(W, Q, eta)
        return cache[j]

    if target <= 0 or h(0) >= target:
        return dmax, h(0)
    lo, hi = 0, 1
    while h(hi) < target:
        if hi == j_max:
            raise BudgetExhausted(
                f"barrier height {h(hi):.6g} < target {target:.6g} at delta = "
                f"{dmax / 2.0 ** hi:.3g}, the smallest delta resolvable in double precision",
                achieved=h(hi), delta=dmax / 2.0 ** hi)
        lo, hi = hi, min(2 * hi, j_max)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if h(mid) >= target:
            hi = mid
        else:
            lo = mid
    return dmax / 2.0 ** hi, h(hi)


def normal_derivative_bound(W, P, u0_norm_1inf):
    """b(r0) + ||u0||_{1,inf}: the Lipschitz constant of the barrier on the
    certified neighbourhood, bounding the normal derivative of the solution."""
    tau = -math.expm1((P.d - 1) * math.log1p(-P.delta))
    return float(W.Fg.inverse_dF(complement=tau)) + float(u0_norm_1inf)


# --------------------------------------------------------------------------
# geometry

@dataclass
class ExteriorBallGeometry:
    """Exterior ball radius r0 and the constant M* with
    M* (|x - c| - r0) >= |x - x0|^2 for boundary points x, where the ball
    B_{r0}(c) touches the boundary at x0."""

    kind: str
    r0: float
    Mstar: float
    diameter: float
    eta: float

    @classmethod
    def from_domain(cls, D, r0=None, samples=400):
        r0 = float(D.exterior_ball_radius if r0 is None else r0)
        pts, normals = D.boundary_samples(samples)
        if D.kind == "disk":
            Mstar = 2.0 * D.params["radius"]
        else:
            Mstar = _mstar_numeric(pts, normals, r0)
        return cls(kind=D.kind, r0=r0, Mstar=float(Mstar), diameter=float(D.diameter),
                   eta=r0 / 2.0)

    def to_dict(self):
        return dict(self.__dict__)


def _mstar_numeric(pts, normals, r0):
    best = 0.0
    for x0, n in zip(pts, normals):
        c = x0 + r0 * n
        dist = np.linalg.norm(pts - c, axis=1) - r0
        chord = np.sum((pts - x0) ** 2, axis=1)
        mask = chord > 1e-24
        with np.errstate(divide="ignore"):
            ratio = chord[mask] / np.maximum(dist[mask], 0.0)
        best = max(best, float(np.max(ratio)))
    return best


# --------------------------------------------------------------------------
# certification

@dataclass
class CertificationReport:
    samples: int
    min_L_residual: float
    min_Ltilde1: float
    max_laplacian_omega: float
    max_flux_defect: float
    r_region: float
    min_b: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return dict(self.__dict__)


def region_radius(W, P):
    """Largest r with b(r) >= P.M."""
    tail = float(W.Fg.tail(np.array(P.M)))
    # (1-delta) r0 / F_g'(M)^{1/(d-1)}
    return (1.0 - P.delta) * P.r0 * math.exp(-math.log1p(-tail) / (P.d - 1))


def certify(W, P, n=10_000, seed=0):
    """Sample n points with r0 < |x| and b(|x|) >= M, random directions and
    random k with |k| <= K, and report the extreme residuals."""
    rng = np.random.default_rng(seed)
    r_hi = region_radius(W, P)
    span = r_hi - P.r0
    half = n // 2
    # half uniform in r, half log-uniform in the offset to resolve the layer at r0
    rho_u = span * (1.0 - rng.random(half))
    rho_l = span * np.exp(rng.uniform(math.log(1e-9), 0.0, n - half))
    rho = np.concatenate([rho_u, rho_l])
    r = P.r0 + rho
    theta = rng.normal(size=(n, P.d))
    theta /= np.linalg.norm(theta, axis=1)[:, None]
    x = r[:, None] * theta
    kdir = rng.normal(size=(n, P.d))
    kdir /= np.linalg.norm(kdir, axis=1)[:, None]
    kmag = P.K * rng.random(n) ** (1.0 / P.d)
    ks = kdir * kmag[:, None]

    b = profile_b(W, P, r)
    inside = b >= P.M * (1 - 1e-12)
    bp = profile_b_prime(W, P, r, b)
    _, _, lt1, lt2, lap = _residuals(W, P, x, r, b, bp, ks)
    L = lt1 + lt2
    min_L = float(np.min(L[inside]))
    min_l1 = float(np.min(lt1[inside]))
    max_lap = float(np.max(lap[inside]))
    rr = P.r0 * np.logspace(0, 1, 200)
    flux = float(np.max(np.abs(flux_defect(W, P, rr))))
    return CertificationReport(samples=int(np.count_nonzero(inside)), min_L_residual=min_L,
                               min_Ltilde1=min_l1, max_laplacian_omega=max_lap,
                               max_flux_defect=flux, r_region=r_hi, min_b=float(np.min(b[inside])))


def require_criterion(I):
    v = I.criterion.verdict
    if v is not Verdict.DIVERGES:
        raise CriterionConverges(
            f"int t F'' classified {v.value}; the barrier construction needs it to diverge")
