"""Radial gaps on the annulus 1 < |x| < 2: the attainable boundary jump is
bounded when int t F'' converges and unbounded otherwise."""
import math

from lingrowth.integrand import make_prototype
from lingrowth.radial import RadialProblem, Unattainable, max_gap, max_gap_sequence, paper_bound, solve_radial

P2 = RadialProblem(make_prototype(2.0))
cs, vals = max_gap_sequence(P2)
print("p = 2: U(2; c) as c -> 1")
for k in (0, 4, 9, 19, 39):
    print(f"  c = 1 - 2^-{k + 1:<2d}  U(2) = {vals[k]:.10f}")
print(f"  sup = {max_gap(P2):.10f}   ln(2 + sqrt 3) = {math.log(2 + math.sqrt(3)):.10f}")
print(f"  explicit bound (2^d/(d-1)) (1 + C0/F'(1)) = {paper_bound(P2):.6f}")

for M in (0.5, 1.0, 1.3, 2.0):
    res = solve_radial(RadialProblem(make_prototype(2.0), M=M), M_max=max_gap(P2))
    print(f"  M = {M}: " + ("unattainable" if isinstance(res, Unattainable) else f"c = {res.c:.12f}"))

P1 = RadialProblem(make_prototype(1.0))
cs, vals = max_gap_sequence(P1)
print("\np = 1: U(2; c) = c ln((2 - c)/(1 - c)) grows like ln(1/(1-c))")
for k in (9, 19, 29, 39):
    c = cs[k]
    print(f"  c = 1 - 2^-{k + 1}  U(2) = {vals[k]:.6f}  closed form {c * math.log((2 - c) / (1 - c)):.6f}")
for M in (10.0, 30.0):
    res = solve_radial(RadialProblem(make_prototype(1.0), M=M))
    print(f"  M = {M}: 1 - c = {res.to_dict()['one_minus_c']:.3e}")
