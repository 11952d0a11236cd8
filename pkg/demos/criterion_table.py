"""Classify the prototype family a_p(s) = (1 + s^p)^(-1/p) by the solvability
integral int t F''(t) dt, and show the conjugate F*(y) as y -> 1."""
import numpy as np

from lingrowth.integrand import check_hypotheses, conjugate_blowup_test, make_prototype

ys = [0.9, 1 - 1e-3, 1 - 1e-6, 1 - 1e-9, 1 - 1e-12]

print(f"{'p':>5} {'verdict':>10} {'exponent':>9} {'genre':>6} {'C2 osc':>7}   F*(y) for 1-y = 1e-1 .. 1e-12")
for p in (0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0):
    I = make_prototype(p)
    rep = check_hypotheses(I)
    conj = conjugate_blowup_test(I, ys)
    vals = " ".join(f"{v:8.4f}" for _, v in conj.points)
    print(f"{p:5.2f} {rep.criterion_A2.verdict.value:>10} {rep.criterion_A2.tail_exponent_estimate:9.4f} "
          f"{rep.bernstein_genre:6.3f} {rep.C2_oscillation:7.3f}   {vals}")

# the conjugate grows without bound exactly when the integral diverges
I = make_prototype(1.0)
y = 1 - 1e-12
(_, v), = conjugate_blowup_test(I, [y]).points
print(f"\np = 1: F*(1 - 1e-12) = {v:.6f}, closed form ln(1/(1-y)) - y = {np.log(1 / (1 - y)) - y:.6f}")
