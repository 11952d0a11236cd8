import csv
import json
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from lingrowth import cli
from lingrowth.errors import InvalidParameter
from lingrowth.solver import fem

ANNULUS = {"kind": "annulus", "params": {"r_in": 1.0, "r_out": 2.0}}
DISK = {"kind": "disk", "params": {"radius": 1.0}}


def run(tmp_path, command, config, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    out = tmp_path / ("out_" + command)
    return cli.main([command, "--config", str(path), "--out", str(out)]), out


def load(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def proto(p):
    return {"family": "prototype", "p": p}


def test_check_integrand_verdicts(tmp_path):
    code, out = run(tmp_path, "check-integrand", {"integrand": proto(1.0)})
    assert code == 0
    payload = load(out / "hypotheses.json")
    assert payload["criterion_A2"] == "Diverges"
    assert payload["tail_exponent_estimate"] == pytest.approx(1.0, abs=0.1)
    code, out = run(tmp_path, "check-integrand", {"integrand": proto(2.0)})
    assert code == 0 and load(out / "hypotheses.json")["criterion_A2"] == "Converges"


def test_custom_table_integrand(tmp_path):
    t = np.logspace(-4, 6, 120)
    with open(tmp_path / "ddF.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "ddF"])
        w.writerows(zip(t, (1 + t) ** -2.0))
    code, out = run(tmp_path, "check-integrand", {"integrand": {"family": "custom", "table": "ddF.csv"}})
    assert code == 0 and load(out / "hypotheses.json")["criterion_A2"] == "Diverges"


def test_missing_key_names_it(tmp_path, capsys):
    code, _ = run(tmp_path, "check-integrand", {"integrand": {"family": "prototype"}})
    assert code == 2
    assert "integrand.p" in capsys.readouterr().err


@pytest.mark.parametrize("config,needle", [
    ({"integrand": proto(1.0), "bogus": 1}, "bogus"),
    ({"integrand": proto(1.0), "domain": ANNULUS, "boundary": {"kind": "radial_gap", "M": 1},
      "eps_list": [1e-3, 1e-2]}, "eps_list"),
    ({"integrand": {"family": "custom", "table": "missing.csv"}}, "missing.csv"),
    ({"integrand": proto(-1.0)}, "integrand.p"),
    ({"integrand": proto(1.0), "tol": {"newton": 0}}, "tol.newton"),
])
def test_config_errors(tmp_path, capsys, config, needle):
    code, out = run(tmp_path, "check-integrand", config)
    assert code == 2 and needle in capsys.readouterr().err
    assert not (out / "manifest.json").exists()


def test_command_specific_validation(tmp_path, capsys):
    code, _ = run(tmp_path, "radial", {"integrand": proto(2.0), "domain": DISK,
                                       "boundary": {"kind": "constant", "value": 0}})
    assert code == 2 and "annulus" in capsys.readouterr().err
    code, _ = run(tmp_path, "sweep", {"integrand": proto(2.0), "domain": DISK})
    assert code == 2 and "boundary" in capsys.readouterr().err


def test_radial_outputs(tmp_path):
    cfg = {"integrand": proto(2.0), "domain": ANNULUS, "boundary": {"kind": "radial_gap", "M": 2.0}}
    code, out = run(tmp_path, "radial", cfg)
    assert code == 0
    s = load(out / "radial_summary.json")
    assert s["attainable"] is False and s["M_max"] == pytest.approx(1.3169579, abs=1e-7)
    assert s["paper_bound"] == pytest.approx(8.0) and s["criterion_verdict"] == "Converges"
    raw = (out / "radial_sweep.csv").read_bytes()
    assert raw.startswith(b"c,U_at_r_out\r\n")
    rows = list(csv.DictReader(open(out / "radial_sweep.csv", newline="")))
    assert len(rows) == 40 and float(rows[-1]["U_at_r_out"]) < 1.3169579


def test_radial_p1_and_zero_gap(tmp_path):
    cfg = {"integrand": proto(1.0), "domain": ANNULUS, "boundary": {"kind": "radial_gap", "M": 10}}
    code, out = run(tmp_path, "radial", cfg)
    s = load(out / "radial_summary.json")
    assert code == 0 and s["attainable"] and 0 < s["c"] < 1
    assert s["M_max"] == "inf" and s["paper_bound"] is None
    cfg = {"integrand": proto(2.0), "domain": ANNULUS, "boundary": {"kind": "radial_gap", "M": 0}}
    code, out = run(tmp_path, "radial", cfg)
    s = load(out / "radial_summary.json")
    assert code == 0 and s["attainable"] and s["c"] == 0.0


def test_barrier_requires_criterion(tmp_path, capsys):
    cfg = {"integrand": proto(2.0), "domain": DISK,
           "boundary": {"kind": "linear", "k": [1, 0]}, "barrier": {"K": 1}}
    code, _ = run(tmp_path, "barrier-verify", cfg)
    assert code == 2 and "CriterionConverges" in capsys.readouterr().err


def test_barrier_verify_p1(tmp_path):
    cfg = {"integrand": proto(1.0), "domain": DISK, "boundary": {"kind": "linear", "k": [1, 0]},
           "barrier": {"K": 1, "r0": 1.0, "samples": 500}, "seed": 3}
    code, out = run(tmp_path, "barrier-verify", cfg)
    assert code == 0
    b = load(out / "barrier.json")
    for key in ("M", "delta_max", "delta", "r_max", "min_L_residual", "min_region_sample_count", "bound"):
        assert key in b
    assert b["min_L_residual"] >= -1e-8 and b["min_region_sample_count"] == 500
    assert 0 < b["delta"] <= b["delta_max"] < 0.5 and b["r_max"] > 1.0
    assert b["height_achieved"] >= b["height_target"] == 3.0
    # the bound dominates the observed gradient of the disk demo (|grad x1| = 1)
    assert b["bound"] >= 1.0


def test_sweep_outputs_and_reproducibility(tmp_path):
    cfg = {"integrand": proto(2.0), "domain": ANNULUS, "boundary": {"kind": "radial_gap", "M": 0.5},
           "eps_list": [1e-1, 1e-2, 1e-3], "h_target": 0.1}
    code, out = run(tmp_path, "sweep", cfg)
    assert code == 0
    man = load(out / "manifest.json")
    assert man["verdict"] == "uniform" and man["config"] == cfg
    for rel in man["outputs"]:
        assert (out / rel).exists()
    rows = list(csv.DictReader(open(out / "sweep.csv", newline="")))
    assert [float(r["eps"]) for r in rows] == [1e-1, 1e-2, 1e-3]
    assert list(rows[0]) == list(fem.SweepRecord.COLUMNS)
    first = {rel: (out / rel).read_bytes() for rel in man["outputs"]}
    shutil.rmtree(out)
    run(tmp_path, "sweep", cfg)
    assert {rel: (out / rel).read_bytes() for rel in man["outputs"]} == first


def test_sweep_single_eps(tmp_path):
    cfg = {"integrand": proto(2.0), "domain": ANNULUS, "boundary": {"kind": "radial_gap", "M": 0.5},
           "eps_list": [1e-2], "h_target": 0.2}
    code, out = run(tmp_path, "sweep", cfg)
    assert code == 0 and load(out / "manifest.json")["verdict"] == "undetermined"


def test_sweep_table_boundary(tmp_path):
    th = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    with open(tmp_path / "u0.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "u"])
        w.writerows(zip(np.cos(th), np.sin(th), np.cos(th)))
    cfg = {"integrand": proto(0.5), "domain": DISK, "boundary": {"kind": "table", "path": "u0.csv"},
           "eps_list": [1e-1, 1e-2, 1e-3], "h_target": 0.2}
    code, out = run(tmp_path, "sweep", cfg)
    assert code == 0
    rows = list(csv.DictReader(open(out / "sweep.csv", newline="")))
    assert all(float(r["sup_u"]) <= 1.0 + 1e-10 for r in rows)


def test_sweep_failure_keeps_partial_results(tmp_path, monkeypatch, capsys):
    real = fem.solve_eps
    calls = []

    def flaky(*args, **kwargs):
        calls.append(1)
        if len(calls) == 2:
            raise InvalidParameter("injected failure")
        return real(*args, **kwargs)

    monkeypatch.setattr(fem, "solve_eps", flaky)
    cfg = {"integrand": proto(2.0), "domain": ANNULUS, "boundary": {"kind": "radial_gap", "M": 0.5},
           "eps_list": [1e-1, 1e-2, 1e-3], "h_target": 0.2}
    code, out = run(tmp_path, "sweep", cfg)
    assert code == 1 and "eps_sweep" in capsys.readouterr().err
    rows = list(csv.DictReader(open(out / "sweep.csv", newline="")))
    assert len(rows) == 1 and (out / "solutions" / "eps_00.json").exists()


def test_reconcile():
    assert cli.reconcile("Diverges", cli.SOLVABLE, "uniform") == (cli.SOLVABLE, [])
    assert cli.reconcile("Converges", cli.OBSTRUCTED, "blow-up") == (cli.OBSTRUCTED, [])
    assert cli.reconcile("Converges", cli.CONDITIONAL, "uniform") == (cli.CONDITIONAL, [])
    regime, dissent = cli.reconcile("Diverges", cli.SOLVABLE, "blow-up")
    assert regime is None and dissent == ["sweep"]
    regime, dissent = cli.reconcile("Converges", cli.SOLVABLE, "uniform")
    assert regime is None and dissent == ["criterion"]


def test_dichotomy_agreement(tmp_path):
    cfg = {"integrand": {"family": "prototype"}, "domain": ANNULUS,
           "cases": [{"p": 1.0, "M": 0.5}, {"p": 2.0, "M": 0.5}],
           "eps_list": [1e-1, 1e-2, 1e-3, 1e-4], "h_target": 0.1}
    code, out = run(tmp_path, "dichotomy", cfg)
    assert code == 0
    rows = load(out / "dichotomy.json")["rows"]
    assert [r["regime"] for r in rows] == [cli.SOLVABLE, cli.CONDITIONAL]


def test_dichotomy_disagreement_exit(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli, "_IMPLIES", {"criterion": {"Diverges": {cli.OBSTRUCTED}},
                                          "sweep": cli._IMPLIES["sweep"]})
    cfg = {"integrand": {"family": "prototype"}, "domain": ANNULUS, "cases": [{"p": 1.0, "M": 0.5}],
           "eps_list": [1e-1, 1e-2, 1e-3], "h_target": 0.2}
    code, out = run(tmp_path, "dichotomy", cfg)
    assert code == 3 and "criterion" in capsys.readouterr().err
    assert load(out / "dichotomy.json")["rows"][0]["dissenting"] == ["criterion"]


def test_console_script(tmp_path):
    exe = shutil.which("lingrowth")
    if exe is None:
        pytest.skip("console script not installed")
    (tmp_path / "c.json").write_text(json.dumps({"integrand": proto(0.75)}))
    res = subprocess.run([exe, "check-integrand", "--config", str(tmp_path / "c.json"),
                          "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0 and "Diverges" in res.stdout
