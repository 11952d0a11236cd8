"""Command-line entry point: ``lingrowth <command> --config PATH --out DIR``.

Exit status: 0 on success (mathematical verdicts are reported in the
payload), 2 on a configuration error, 1 when a pipeline step fails, 3 when
the dichotomy components disagree.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .barrier import (
    BarrierParams,
    ExteriorBallGeometry,
    build_weight,
    certify,
    normal_derivative_bound,
    require_criterion,
    select_delta_for_height,
    select_delta_max,
    select_M,
)
from .config import load_config
from .errors import ConfigError, CriterionConverges, CriterionDiverges, LinGrowthError
from .integrand import check_hypotheses
from .radial import RadialProblem, Unattainable, max_gap_sequence, paper_bound, solve_radial
from .solver import SweepRecord, eps_sweep, generate_mesh

__all__ = ["main", "COMMANDS", "StepFailed", "to_jsonable", "write_json", "write_csv"]

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_DISAGREE = 0, 1, 2, 3

SOLVABLE = "solvable regime"
OBSTRUCTED = "obstructed regime"
CONDITIONAL = "conditionally solvable"


class StepFailed(Exception):
    def __init__(self, step, exc):
        super().__init__(f"step '{step}' failed: {type(exc).__name__}: {exc}")
        self.step = step


def _step(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ConfigError, StepFailed):
        raise
    except (LinGrowthError, ArithmeticError, ValueError) as exc:
        raise StepFailed(name, exc) from exc


# --------------------------------------------------------------------------
# output

def to_jsonable(x):
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [to_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if hasattr(x, "to_dict"):
        return to_jsonable(x.to_dict())
    if hasattr(x, "value") and isinstance(x.value, str):
        return x.value
    return x


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    return path


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


class _CsvWriter:
    """Row-at-a-time CSV so partial results survive a failure."""

    def __init__(self, path, header):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="", encoding="utf-8")
        self._w = csv.writer(self._fh, lineterminator="\r\n")
        self._w.writerow(header)
        self._fh.flush()

    def row(self, values):
        self._w.writerow([_cell(v) for v in values])
        self._fh.flush()

    def close(self):
        self._fh.close()


def write_csv(path, header, rows):
    w = _CsvWriter(path, header)
    try:
        for r in rows:
            w.row(r)
    finally:
        w.close()
    return w.path


# --------------------------------------------------------------------------
# commands

def cmd_check_integrand(cfg, out):
    I = _step("build_integrand", cfg.build_integrand)
    rep = _step("check_hypotheses", check_hypotheses, I)
    payload = {"criterion_A2": rep.criterion_A2.verdict.value,
               "tail_exponent_estimate": rep.criterion_A2.tail_exponent_estimate,
               "report": rep.to_dict()}
    path = write_json(out / "hypotheses.json", payload)
    return {"files": [path], "verdict": payload["criterion_A2"], "payload": payload}


def _radial_problem(cfg, I, M):
    p = cfg.domain["params"]
    return RadialProblem(I=I, d=int(cfg.radial.get("d", 2)), r_in=float(p["r_in"]),
                         r_out=float(p["r_out"]), M=float(M))


def _radial_summary(cfg, I, M):
    P = _radial_problem(cfg, I, M)
    sol = _step("solve_radial", solve_radial, P, tol=cfg.tol["radial"])
    try:
        bound = paper_bound(P)
    except CriterionDiverges:
        bound = None
    attainable = not isinstance(sol, Unattainable)
    summary = {"M": P.M, "d": P.d, "r_in": P.r_in, "r_out": P.r_out,
               "M_max": sol.M_max, "paper_bound": bound,
               "attainable": attainable,
               "c": getattr(sol, "c", None),
               "criterion_verdict": I.criterion.verdict.value}
    return P, summary


def cmd_radial(cfg, out):
    I = _step("build_integrand", cfg.build_integrand)
    P, summary = _radial_summary(cfg, I, cfg.boundary["M"])
    cs, vals = _step("max_gap_sequence", max_gap_sequence, P)
    csv_path = write_csv(out / "radial_sweep.csv", ["c", "U_at_r_out"], zip(cs, vals))
    js = write_json(out / "radial_summary.json", summary)
    verdict = "attainable" if summary["attainable"] else "unattainable"
    return {"files": [csv_path, js], "verdict": verdict, "payload": summary}


def cmd_barrier_verify(cfg, out):
    I = _step("build_integrand", cfg.build_integrand)
    try:
        require_criterion(I)
    except CriterionConverges as exc:
        raise ConfigError(f"CriterionConverges: {exc}") from None
    D = cfg.build_domain()
    bar = cfg.barrier
    d = int(bar.get("d", 2))
    sup_u0, grad_u0 = cfg.boundary_norms(D)
    norm_1inf = max(sup_u0, grad_u0)
    K = float(bar.get("K", grad_u0))

    W = _step("build_weight", build_weight, I)
    hyp = _step("check_hypotheses", check_hypotheses, I)
    sel = _step("select_M", select_M, W, K=K, C2=hyp.C2_oscillation)
    geo = _step("exterior_geometry", ExteriorBallGeometry.from_domain, D, r0=bar.get("r0"))
    eta = float(bar.get("eta", geo.eta))
    dmax, T = _step("select_delta_max", select_delta_max, W, sel.M, geo.Mstar * norm_1inf, d)
    target = geo.diameter * norm_1inf + sup_u0
    k = np.zeros(d)
    base = BarrierParams(r0=geo.r0, delta=dmax, k=k, K=K, M=sel.M, delta_max=dmax, d=d)
    if "delta" in bar:
        delta = min(float(bar["delta"]), dmax)
        achieved = None
    else:
        delta, achieved = _step("select_delta_for_height", select_delta_for_height,
                                W, base, eta, target)
    P = BarrierParams(r0=geo.r0, delta=delta, k=k, K=K, M=sel.M, delta_max=dmax, d=d)
    rep = _step("certify", certify, W, P, n=int(bar.get("samples", 10_000)), seed=cfg.seed)
    bound = normal_derivative_bound(W, P, norm_1inf)
    payload = {
        "M": sel.M,
        "delta_max": dmax,
        "delta": delta,
        "r_max": P.r_max,
        "min_L_residual": rep.min_L_residual,
        "min_region_sample_count": rep.samples,
        "bound": bound,
        "A": W.A,
        "selection": sel.to_dict(),
        "geometry": geo.to_dict(),
        "eta": eta,
        "height_target": target,
        "height_achieved": achieved,
        "T": T,
        "certification": rep.to_dict(),
    }
    path = write_json(out / "barrier.json", payload)
    verdict = "certified" if rep.min_L_residual >= -1e-8 else "not certified"
    return {"files": [path], "verdict": verdict, "payload": payload}


def _run_sweep(cfg, I, u0, out, tag=""):
    D = cfg.build_domain()
    mesh = _step("generate_mesh", generate_mesh, D, cfg.h_target, grading=cfg.grading)
    sol_dir = out / f"solutions{tag}"
    writer = _CsvWriter(out / f"sweep{tag}.csv", list(SweepRecord.COLUMNS))
    files = [writer.path]

    def on_record(rec, fld):
        writer.row(rec.row())
        files.append(write_json(sol_dir / f"eps_{len(files) - 1:02d}.json",
                                {"eps": rec.eps, **fld.to_dict()}))

    try:
        rep = _step("eps_sweep", eps_sweep, I, D, u0, cfg.h_target, cfg.eps_list,
                    newton_tol=cfg.tol["newton"], mesh=mesh, on_record=on_record)
    finally:
        writer.close()
    files.append(write_json(out / f"mesh{tag}.json", mesh.to_dict()))
    return rep, files


def cmd_sweep(cfg, out):
    I = _step("build_integrand", cfg.build_integrand)
    u0 = cfg.boundary_function()
    rep, files = _run_sweep(cfg, I, u0, out)
    summary = {"classification": rep.classification,
               "records": rep.to_dict()["records"]}
    return {"files": files, "verdict": rep.classification, "payload": summary}


_IMPLIES = {
    "criterion": {"Diverges": {SOLVABLE}, "Converges": {OBSTRUCTED, CONDITIONAL}},
    "sweep": {"uniform": {SOLVABLE, CONDITIONAL}, "blow-up": {OBSTRUCTED}},
}


def _radial_regime(summary):
    if summary["M_max"] == math.inf and summary["attainable"]:
        return SOLVABLE
    return CONDITIONAL if summary["attainable"] else OBSTRUCTED


def reconcile(criterion, radial, sweep):
    """Regime implied jointly by the three component verdicts, or None, and
    the names of the components inconsistent with the most supported regime."""
    sets = {"criterion": _IMPLIES["criterion"].get(criterion, set()),
            "radial": {radial},
            "sweep": _IMPLIES["sweep"].get(sweep, set())}
    common = set.intersection(*sets.values())
    if len(common) == 1:
        return common.pop(), []
    votes = {r: sum(r in s for s in sets.values()) for r in (SOLVABLE, OBSTRUCTED, CONDITIONAL)}
    best = max(votes, key=lambda r: (votes[r], r == radial))
    return None, [name for name, s in sets.items() if best not in s]


def cmd_dichotomy(cfg, out):
    rows = []
    files = []
    for i, case in enumerate(cfg.cases):
        p, M = float(case["p"]), float(case["M"])
        I = _step(f"case {i}: build_integrand", cfg.build_integrand, p)
        crit = I.criterion.verdict.value
        _, rsum = _radial_summary(cfg, I, M)
        r_regime = _radial_regime(rsum)
        rep, f = _run_sweep(cfg, I, _gap_function(cfg, M), out, tag=f"_{i:02d}")
        files += f
        regime, dissent = reconcile(crit, r_regime, rep.classification)
        rows.append({"p": p, "M": M, "criterion": crit, "M_max": rsum["M_max"],
                     "radial": r_regime, "sweep": rep.classification,
                     "sup_grad_first": rep.records[0].sup_grad,
                     "sup_grad_last": rep.records[-1].sup_grad,
                     "regime": regime if regime else "disagreement",
                     "agree": regime is not None, "dissenting": dissent})
    payload = {"rows": rows, "all_agree": all(r["agree"] for r in rows)}
    files.append(write_json(out / "dichotomy.json", payload))
    verdict = "agree" if payload["all_agree"] else "disagree"
    return {"files": files, "verdict": verdict, "payload": payload}


def _gap_function(cfg, M):
    p = cfg.domain["params"]
    mid = 0.5 * (p["r_in"] + p["r_out"])
    return lambda x: np.where(np.linalg.norm(x, axis=1) > mid, float(M), 0.0)


COMMANDS = {
    "check-integrand": cmd_check_integrand,
    "radial": cmd_radial,
    "barrier-verify": cmd_barrier_verify,
    "sweep": cmd_sweep,
    "dichotomy": cmd_dichotomy,
}


def _manifest(cfg, command, result, started, out):
    return {
        "command": command,
        "version": __version__,
        "config": cfg.echo(),
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": sorted(str(Path(p).relative_to(out)) for p in result["files"]),
        "verdict": result["verdict"],
    }


def main(argv=None):
    parser = argparse.ArgumentParser(prog="lingrowth", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, metavar="PATH")
    parser.add_argument("--out", default="out", metavar="DIR")
    args = parser.parse_args(argv)
    out = Path(args.out)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        cfg = load_config(args.config, command=args.command)
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"lingrowth: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepFailed as exc:
        print(f"lingrowth: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    write_json(out / "manifest.json", _manifest(cfg, args.command, result, started, out))
    print(f"{args.command}: {result['verdict']}")
    if args.command == "dichotomy" and not result["payload"]["all_agree"]:
        for row in result["payload"]["rows"]:
            if not row["agree"]:
                print(f"lingrowth: disagreement at p={row['p']}, M={row['M']}: "
                      f"dissenting {', '.join(row['dissenting'])}", file=sys.stderr)
        return EXIT_DISAGREE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
