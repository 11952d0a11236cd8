"""Acceptance criteria 1-10.  Each check prints one PASS/FAIL line.

Run ``python3 tests/test_acceptance.py`` for the bare report, or
``pytest tests/test_acceptance.py -s`` for the same lines under pytest.
"""
import functools
import json
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from lingrowth import cli
from lingrowth.barrier import (
    BarrierParams,
    ExteriorBallGeometry,
    build_weight,
    certify,
    select_delta_for_height,
    select_delta_max,
    select_M,
)
from lingrowth.calculus import integrate
from lingrowth.integrand import check_hypotheses, make_prototype
from lingrowth.radial import C0, RadialProblem, max_gap, paper_bound, solve_radial
from lingrowth.solver import annulus, disk, eps_sweep, generate_mesh, solve_eps

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
EPS = [1e-1, 1e-2, 1e-3, 1e-4]
LINES = []


def report(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    LINES.append(line)
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()
    return ok


def gap(M):
    return lambda x: np.where(np.linalg.norm(x, axis=1) > 1.5, M, 0.0)


# --------------------------------------------------------------------------
# shared demo runs

@functools.lru_cache(maxsize=None)
def demo_sweeps():
    t0 = time.perf_counter()
    out = {
        "disk p=0.5, u0=x1": (eps_sweep(make_prototype(0.5), disk(1.0), lambda x: x[:, 0], 0.05, EPS),
                              1.0),
        "annulus p=2, M=3": (eps_sweep(make_prototype(2.0), annulus(1, 2), gap(3.0), 0.02, EPS), 3.0),
        "annulus p=2, M=0.5": (eps_sweep(make_prototype(2.0), annulus(1, 2), gap(0.5), 0.04, EPS), 0.5),
    }
    return out, time.perf_counter() - t0


@functools.lru_cache(maxsize=None)
def radial_refinement():
    I = make_prototype(2.0)
    sol = solve_radial(RadialProblem(I, M=1.0))
    rows = []
    t0 = time.perf_counter()
    for h in (0.08, 0.04, 0.02):
        mesh = generate_mesh(annulus(1, 2), h)
        u0 = gap(1.0)(mesh.vertices)
        u = None
        for eps in EPS:
            fld, info = solve_eps(I, mesh, u0, eps, u_init=u)
            u = fld.values
        ref = sol.U(np.linalg.norm(mesh.vertices, axis=1))
        rows.append((h, float(np.max(np.abs(u - ref))), float(np.max(np.abs(u))), info.converged))
    return rows, time.perf_counter() - t0


# --------------------------------------------------------------------------
# criteria

def check_1():
    t0 = time.perf_counter()
    got = {}
    with tempfile.TemporaryDirectory() as tmp:
        for p in (0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0):
            cfg = Path(tmp) / f"p{p}.json"
            cfg.write_text(json.dumps({"integrand": {"family": "prototype", "p": p}}))
            out = Path(tmp) / f"out{p}"
            code = cli.main(["check-integrand", "--config", str(cfg), "--out", str(out)])
            payload = json.loads((out / "hypotheses.json").read_text())
            got[p] = (code, payload["criterion_A2"], payload["tail_exponent_estimate"])
    dt = time.perf_counter() - t0
    ok = all(c == 0 for c, _, _ in got.values())
    ok &= all(got[p][1] == "Diverges" for p in (0.5, 0.75, 1.0))
    ok &= all(got[p][1] == "Converges" for p in (1.25, 1.5, 2.0, 3.0))
    worst = max(abs(e - p) for p, (_, _, e) in got.items())
    ok &= worst <= 0.1 and dt < 5
    return ok, f"verdicts {[v for _, v, _ in got.values()]}, max |exponent - p| = {worst:.3g}, {dt:.2f} s"


def check_2():
    t0 = time.perf_counter()
    M_max = max_gap(RadialProblem(make_prototype(2.0)))
    dt = time.perf_counter() - t0
    oracle = math.acosh(2.0)       # int_1^2 ds / sqrt(s^2 - 1)
    err = abs(M_max - oracle)
    return err <= 1e-5 and dt < 1, f"M_max = {M_max:.10f}, |M_max - arccosh 2| = {err:.2e}, {dt:.2f} s"


def check_3():
    t0 = time.perf_counter()
    I = make_prototype(2.0)
    c0 = C0(I)
    dF1 = integrate(I.ddF, 0.0, 1.0, rel_tol=1e-12).value
    P = RadialProblem(I)
    bound = paper_bound(P)
    ok = abs(c0 - 2 ** -0.5) <= 1e-8 and abs(dF1 - 2 ** -0.5) <= 1e-8 and bound == pytest.approx(8.0, abs=1e-8)
    ok &= max_gap(P) <= bound
    pairs = []
    for p in (1.5, 3.0):
        for d in (2, 3):
            Q = RadialProblem(make_prototype(p), d=d)
            m, b = max_gap(Q), paper_bound(Q)
            pairs.append(f"p={p},d={d}: {m:.4f}<={b:.4f}")
            ok &= m <= b
    dt = time.perf_counter() - t0
    ok &= dt < 5
    return ok, f"C0 = {c0:.10f}, F'(1) = {dF1:.10f}, bound = {bound:.10f}; {'; '.join(pairs)}; {dt:.2f} s"


def check_4():
    t0 = time.perf_counter()
    I = make_prototype(1.0)
    W = build_weight(I)
    worst = 0.0
    for T in (1.0, 10.0, 1e3, 1e6):
        lhs = integrate(lambda t: t * I.ddF(t) * W.g(t), 0.0, T, rel_tol=1e-12).value
        inner = integrate(lambda r: r * I.ddF(r), 0.0, T, rel_tol=1e-13).value
        rhs = math.log1p(inner) / W.A
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    dt = time.perf_counter() - t0
    return worst <= 1e-6 and dt < 2, f"max relative defect {worst:.2e} over T in {{1, 10, 1e3, 1e6}}, {dt:.2f} s"


def check_5():
    t0 = time.perf_counter()
    W = build_weight(make_prototype(1.0))
    K = 1.0
    sel = select_M(W, K=K)
    geo = ExteriorBallGeometry.from_domain(disk(1.0))
    norm_1inf, sup_u0 = 1.0, 1.0        # u0 = x1 on the unit disk
    dm, _ = select_delta_max(W, sel.M, geo.Mstar * norm_1inf, d=2)
    base = BarrierParams(r0=geo.r0, delta=dm, K=K, M=sel.M, delta_max=dm, d=2)
    delta, _ = select_delta_for_height(W, base, geo.eta, geo.diameter * norm_1inf + sup_u0)
    P = BarrierParams(r0=geo.r0, delta=delta, K=K, M=sel.M, delta_max=dm, d=2)
    rep = certify(W, P, n=10_000, seed=0)
    dt = time.perf_counter() - t0
    ok = (rep.samples == 10_000 and rep.min_L_residual >= -1e-8 and rep.min_Ltilde1 >= -1e-10
          and rep.max_laplacian_omega <= 1e-10 and rep.max_flux_defect <= 1e-10 and dt < 30)
    return ok, (f"M = {sel.M:.6g}, delta = {delta:.3g}, {rep.samples} points: min L = {rep.min_L_residual:.3g}, "
                f"min L~1 = {rep.min_Ltilde1:.3g}, max Lap omega = {rep.max_laplacian_omega:.3g}, "
                f"flux defect = {rep.max_flux_defect:.2e}, {dt:.2f} s")


def check_6():
    sweeps, _ = demo_sweeps()
    worst = -math.inf
    n = 0
    for rep, sup0 in sweeps.values():
        for r in rep.records:
            if r.converged:
                worst = max(worst, r.sup_u - sup0)
                n += 1
    rows, _ = radial_refinement()
    for _, _, sup_u, conv in rows:
        if conv:
            worst = max(worst, sup_u - 1.0)
            n += 1
    return worst <= 1e-10, f"{n} converged demo solves, max(sup|u_h| - sup|u0|) = {worst:.2e}"


def check_7():
    rows, dt = radial_refinement()
    errs = [e for _, e, _, _ in rows]
    orders = [math.log(errs[i] / errs[i + 1]) / math.log(2) for i in range(2)]
    ok = errs[-1] <= 5e-2 and min(orders) >= 0.8 and dt < 180
    return ok, (f"L_inf errors {', '.join(f'{e:.3e}' for e in errs)} at h = 0.08, 0.04, 0.02; "
                f"orders {orders[0]:.2f}, {orders[1]:.2f}; {dt:.1f} s")


def check_8():
    sweeps, dt = demo_sweeps()
    uni, _ = sweeps["disk p=0.5, u0=x1"]
    blow, _ = sweeps["annulus p=2, M=3"]
    g_uni = [r.sup_grad for r in uni.records][-3:]
    g_blow = [r.sup_grad for r in blow.records]
    ratio = blow.records[-1].boundary_layer_ratio
    ok = (uni.classification == "uniform" and max(g_uni) / min(g_uni) - 1 <= 0.10
          and blow.classification == "blow-up" and g_blow[-1] >= 10 * g_blow[0]
          and ratio >= 0.9 and dt < 300)
    return ok, (f"disk: {uni.classification} (variation {max(g_uni) / min(g_uni) - 1:.2e}); "
                f"annulus M=3: {blow.classification} (growth x{g_blow[-1] / g_blow[0]:.1f}, "
                f"boundary ratio {ratio:.2f}); {dt:.1f} s")


def check_9():
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        code = cli.main(["dichotomy", "--config", str(CONFIGS / "dichotomy.json"), "--out", tmp])
        rows = json.loads((Path(tmp) / "dichotomy.json").read_text())["rows"]
    dt = time.perf_counter() - t0
    table = "; ".join(f"p={r['p']} M={r['M']}: {r['regime']}" for r in rows)
    return code == 0 and all(r["agree"] for r in rows), f"exit {code}; {table}; {dt:.1f} s"


def check_10():
    s = np.logspace(-2, 3, 80)
    h = 1e-5 * s
    worst = 0.0
    families = [make_prototype(p) for p in (0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0)]
    families.append(build_weight(make_prototype(1.0)).Fg)
    for I in families:
        fd1 = (I.F(s + h) - I.F(s - h)) / (2 * h)
        # F'' from the complement 1 - F', which keeps full relative precision
        fd2 = (I.tail(s - h) - I.tail(s + h)) / (2 * h)
        worst = max(worst, np.max(np.abs(fd1 / I.dF(s) - 1)), np.max(np.abs(fd2 / I.ddF(s) - 1)))
    return worst <= 1e-5, f"{len(families)} integrands, max relative FD defect {worst:.2e} on [1e-2, 1e3]"


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9, check_10]


@pytest.mark.slow
@pytest.mark.parametrize("n", range(1, 11))
def test_criterion(n):
    ok, detail = CHECKS[n - 1]()
    assert report(n, ok, detail), detail


if __name__ == "__main__":
    results = [report(n, *check()) for n, check in enumerate(CHECKS, start=1)]
    sys.exit(0 if all(results) else 1)
