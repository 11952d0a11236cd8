"""Build the weighted integrand, select the barrier constants and certify the
super-solution inequality by sampling, for p = 1 on the unit disk."""
import math

import numpy as np

from lingrowth.barrier import (BarrierParams, ExteriorBallGeometry, build_weight, certify, height,
                               select_delta_for_height, select_delta_max, select_M)
from lingrowth.errors import BudgetExhausted
from lingrowth.integrand import make_prototype
from lingrowth.solver import disk

I = make_prototype(1.0)
W = build_weight(I)
print(f"A = {W.A:.12f}, g(0) = 1/A = {float(W.g(np.array(0.0))):.6f}")
for T in (1.0, 1e3, 1e6):
    lhs = float(W.Fg.moment(np.array(T)))
    print(f"  int_0^{T:g} t F'' g = {lhs:.12f}   (1/A) ln(1 + int r F'') = "
          f"{math.log1p(float(I.moment(np.array(T)))) / W.A:.12f}")

sel = select_M(W, K=1.0)
print(f"\nselect_M: M1 = {sel.M1}, M2 = {sel.M2:.4f}, M3 = {sel.M3:.2f} -> M = {sel.M:.2f} ({sel.binding})")
geo = ExteriorBallGeometry.from_domain(disk(1.0))
dm, T = select_delta_max(W, sel.M, geo.Mstar * 1.0)
print(f"delta_max = {dm:.4e} (threshold T = {T:.2f})")
base = BarrierParams(r0=1.0, delta=dm, K=1.0, M=sel.M, delta_max=dm)
delta, h = select_delta_for_height(W, base, geo.eta, 3.0)
print(f"height target 3 over [1, 1.5]: delta = {delta:.4e}, height = {h:.4f}")

P = BarrierParams(r0=1.0, delta=delta, K=1.0, M=sel.M, delta_max=dm)
rep = certify(W, P, n=10_000)
print(f"certified {rep.samples} points: min L = {rep.min_L_residual:.4f}, min L~1 = {rep.min_Ltilde1:.2e}, "
      f"max Lap omega = {rep.max_laplacian_omega:.3e}, flux defect = {rep.max_flux_defect:.1e}")

# the height grows only like log log(1/delta) / A, so large targets leave double precision
for d in (1e-10, 1e-50, 1e-100, 1e-140):
    print(f"  height at delta = {d:g}: {height(W, BarrierParams(r0=1.0, delta=d), 0.5):.4f}")
try:
    select_delta_for_height(W, BarrierParams(r0=1.0, delta=0.2, delta_max=0.2), 0.5, 10.0)
except BudgetExhausted as exc:
    print(f"target 10: {exc}")
