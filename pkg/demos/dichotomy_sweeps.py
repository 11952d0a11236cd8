"""eps -> 0 sweeps on both sides of the dichotomy: bounded gradients for p <= 1
or below the radial threshold, boundary blow-up above it."""
import numpy as np

from lingrowth.integrand import make_prototype
from lingrowth.solver import annulus, disk, eps_sweep

EPS = [1e-1, 1e-2, 1e-3, 1e-4]


def gap(M):
    return lambda x: np.where(np.linalg.norm(x, axis=1) > 1.5, M, 0.0)


demos = [
    ("disk, p = 0.5, u0 = x1", make_prototype(0.5), disk(1.0), lambda x: x[:, 0], 0.05),
    ("annulus, p = 1, M = 1.5", make_prototype(1.0), annulus(1, 2), gap(1.5), 0.04),
    ("annulus, p = 2, M = 0.5", make_prototype(2.0), annulus(1, 2), gap(0.5), 0.04),
    ("annulus, p = 2, M = 3", make_prototype(2.0), annulus(1, 2), gap(3.0), 0.02),
]
for name, I, D, u0, h in demos:
    rep = eps_sweep(I, D, u0, h, EPS)
    print(f"{name}: {rep.classification}")
    for r in rep.records:
        print(f"  eps = {r.eps:7.0e}  sup|grad u| = {r.sup_grad:9.4f}  boundary/interior = "
              f"{r.boundary_layer_ratio:6.3f}  energy = {r.energy:.6f}  newton = {r.newton_iters}")
