"""Run configuration: a JSON document validated up front.

Schema (keys not listed are rejected)::

    {
      "integrand": {"family": "prototype", "p": 1.0}
                 | {"family": "custom", "table": "ddF.csv"},     # columns t, ddF
      "domain":    {"kind": "disk" | "annulus" | "polygon", "params": {...}},
      "boundary":  {"kind": "constant", "value": c}
                 | {"kind": "linear", "k": [k1, k2], "c": c}
                 | {"kind": "radial_gap", "M": M}                 # annulus only
                 | {"kind": "table", "path": "u0.csv"},          # columns x, y, u
      "eps_list":  [1e-1, 1e-2, 1e-3, 1e-4],
      "h_target":  0.05,
      "grading":   1.0,
      "tol":       {"newton": 1e-10, "radial": 1e-10},
      "barrier":   {"K": 1.0, "r0": 1.0, "d": 2, "samples": 10000, "eta": 0.5},
      "radial":    {"d": 2},
      "cases":     [{"p": 0.5, "M": 0.5}, ...],                  # dichotomy only
      "seed":      0
    }

Relative paths resolve against the directory of the config file.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, LinGrowthError
from .integrand import from_table, make_prototype
from .solver.mesh import Domain2D

__all__ = ["RunConfig", "load_config", "parse_config"]

_TOP_KEYS = {"integrand", "domain", "boundary", "eps_list", "h_target", "grading", "tol",
             "barrier", "radial", "cases", "seed"}


def _require(d, key, where):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing key '{where}{key}'")
    return d[key]


def _number(x, where, positive=False):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ConfigError(f"'{where}' must be a finite number, got {x!r}")
    if positive and not x > 0:
        raise ConfigError(f"'{where}' must be positive, got {x!r}")
    return float(x)


def _read_csv(path, columns):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if not rows or any(c not in rows[0] for c in columns):
        raise ConfigError(f"{path} needs a header with columns {', '.join(columns)}")
    try:
        return np.array([[float(r[c]) for c in columns] for r in rows])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@dataclass
class RunConfig:
    integrand: dict
    domain: dict = None
    boundary: dict = None
    eps_list: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    h_target: float = 0.05
    grading: float = 1.0
    tol: dict = field(default_factory=lambda: {"newton": 1e-10, "radial": 1e-10})
    barrier: dict = field(default_factory=dict)
    radial: dict = field(default_factory=dict)
    cases: list = field(default_factory=list)
    seed: int = 0
    base_dir: Path = Path(".")
    raw: dict = field(default_factory=dict)

    # -- builders ------------------------------------------------------
    def build_integrand(self, p=None):
        choice = self.integrand
        try:
            if choice["family"] == "prototype":
                return make_prototype(choice["p"] if p is None else p)
            data = _read_csv(self.base_dir / choice["table"], ("t", "ddF"))
            return from_table(data[:, 0], data[:, 1])
        except LinGrowthError as exc:
            raise ConfigError(f"integrand: {type(exc).__name__}: {exc}") from None

    def build_domain(self):
        if self.domain is None:
            raise ConfigError("missing key 'domain'")
        try:
            return Domain2D(self.domain["kind"], dict(self.domain["params"]),
                            float(self.domain.get("exterior_ball_radius", 0.0)))
        except (LinGrowthError, KeyError, TypeError) as exc:
            raise ConfigError(f"domain: {exc}") from None

    def boundary_function(self, M=None):
        """Boundary data as a function of an (n, 2) array of points."""
        b = self.boundary
        if b is None:
            raise ConfigError("missing key 'boundary'")
        kind = b["kind"]
        if kind == "constant":
            v = float(b["value"])
            return lambda x: np.full(len(x), v)
        if kind == "linear":
            k = np.asarray(b["k"], dtype=float)
            c = float(b.get("c", 0.0))
            return lambda x: x @ k + c
        if kind == "radial_gap":
            gap = float(b["M"] if M is None else M)
            r_in = self.domain["params"]["r_in"]
            r_out = self.domain["params"]["r_out"]
            mid = 0.5 * (r_in + r_out)
            return lambda x: np.where(np.linalg.norm(x, axis=1) > mid, gap, 0.0)
        data = _read_csv(self.base_dir / b["path"], ("x", "y", "u"))
        tree = cKDTree(data[:, :2])
        return lambda x: data[tree.query(x)[1], 2]

    def boundary_norms(self, D):
        """(sup |u0|, sup |grad u0|) of the natural extension of the data."""
        b = self.boundary
        kind = b["kind"]
        R = 0.5 * D.diameter
        if kind == "constant":
            return abs(float(b["value"])), 0.0
        if kind == "linear":
            k = np.asarray(b["k"], dtype=float)
            if D.kind == "polygon":
                sup = float(np.max(np.abs(D.vertices @ k + float(b.get("c", 0.0)))))
            else:
                sup = float(np.linalg.norm(k)) * R + abs(float(b.get("c", 0.0)))
            return sup, float(np.linalg.norm(k))
        if kind == "radial_gap":
            p = self.domain["params"]
            return abs(float(b["M"])), abs(float(b["M"])) / (p["r_out"] - p["r_in"])
        raise ConfigError("barrier-verify needs boundary.kind constant, linear or radial_gap")

    def echo(self):
        return self.raw


def parse_config(raw, base_dir=Path("."), command=None):
    """Validate ``raw`` for ``command`` and return a RunConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(extra))}")
    integ = _require(raw, "integrand", "")
    fam = _require(integ, "family", "integrand.")
    if fam == "prototype":
        if command != "dichotomy" or "p" in integ:
            _number(_require(integ, "p", "integrand."), "integrand.p", positive=True)
    elif fam == "custom":
        path = base_dir / _require(integ, "table", "integrand.")
        if not path.is_file():
            raise ConfigError(f"integrand.table: file not found: {path}")
    else:
        raise ConfigError(f"integrand.family must be 'prototype' or 'custom', got {fam!r}")

    cfg = RunConfig(integrand=dict(integ), base_dir=base_dir, raw=raw)
    needs_domain = command in ("radial", "barrier-verify", "sweep", "dichotomy")
    if "domain" in raw or needs_domain:
        dom = _require(raw, "domain", "")
        kind = _require(dom, "kind", "domain.")
        params = _require(dom, "params", "domain.")
        need = {"disk": ["radius"], "annulus": ["r_in", "r_out"], "polygon": ["vertices"]}
        if kind not in need:
            raise ConfigError(f"domain.kind must be disk, annulus or polygon, got {kind!r}")
        for key in need[kind]:
            _require(params, key, "domain.params.")
        cfg.domain = dom
        cfg.build_domain()
        if command in ("radial", "dichotomy") and kind != "annulus":
            raise ConfigError(f"'{command}' needs domain.kind = annulus")

    needs_boundary = command in ("barrier-verify", "sweep")
    if "boundary" in raw or needs_boundary or command == "radial":
        bnd = _require(raw, "boundary", "")
        kind = _require(bnd, "kind", "boundary.")
        if kind == "constant":
            _number(_require(bnd, "value", "boundary."), "boundary.value")
        elif kind == "linear":
            k = _require(bnd, "k", "boundary.")
            if not isinstance(k, list) or len(k) != 2:
                raise ConfigError("'boundary.k' must be a list of two numbers")
            for i, ki in enumerate(k):
                _number(ki, f"boundary.k[{i}]")
            _number(bnd.get("c", 0.0), "boundary.c")
        elif kind == "radial_gap":
            _number(_require(bnd, "M", "boundary."), "boundary.M")
            if cfg.domain is None or cfg.domain["kind"] != "annulus":
                raise ConfigError("boundary.kind radial_gap needs an annulus domain")
        elif kind == "table":
            path = base_dir / _require(bnd, "path", "boundary.")
            if not path.is_file():
                raise ConfigError(f"boundary.path: file not found: {path}")
        else:
            raise ConfigError(f"unknown boundary.kind {kind!r}")
        if command == "radial" and kind != "radial_gap":
            raise ConfigError("'radial' needs boundary.kind = radial_gap")
        cfg.boundary = bnd

    if "eps_list" in raw:
        eps = raw["eps_list"]
        if not isinstance(eps, list) or not eps:
            raise ConfigError("'eps_list' must be a non-empty list")
        eps = [_number(e, "eps_list[]", positive=True) for e in eps]
        if any(b >= a for a, b in zip(eps[:-1], eps[1:])):
            raise ConfigError("'eps_list' must be strictly decreasing")
        cfg.eps_list = eps
    if "h_target" in raw:
        cfg.h_target = _number(raw["h_target"], "h_target", positive=True)
    if "grading" in raw:
        cfg.grading = _number(raw["grading"], "grading", positive=True)
        if cfg.grading < 1:
            raise ConfigError("'grading' must be >= 1")
    if "tol" in raw:
        tol = raw["tol"]
        if not isinstance(tol, dict):
            raise ConfigError("'tol' must be an object")
        merged = dict(cfg.tol)
        for key, val in tol.items():
            if key not in ("newton", "radial"):
                raise ConfigError(f"unknown key 'tol.{key}'")
            merged[key] = _number(val, f"tol.{key}", positive=True)
        cfg.tol = merged
    if "barrier" in raw:
        bar = raw["barrier"]
        allowed = {"K", "r0", "d", "samples", "eta", "delta"}
        if not isinstance(bar, dict) or set(bar) - allowed:
            raise ConfigError(f"'barrier' accepts keys {', '.join(sorted(allowed))}")
        for key in ("K", "r0", "eta", "delta"):
            if key in bar:
                _number(bar[key], f"barrier.{key}", positive=True)
        if "d" in bar and (not isinstance(bar["d"], int) or bar["d"] < 2):
            raise ConfigError("'barrier.d' must be an integer >= 2")
        if "samples" in bar and (not isinstance(bar["samples"], int) or bar["samples"] < 1):
            raise ConfigError("'barrier.samples' must be a positive integer")
        cfg.barrier = dict(bar)
    if "radial" in raw:
        rad = raw["radial"]
        if not isinstance(rad, dict) or set(rad) - {"d"}:
            raise ConfigError("'radial' accepts key d")
        if "d" in rad and (not isinstance(rad["d"], int) or rad["d"] < 2):
            raise ConfigError("'radial.d' must be an integer >= 2")
        cfg.radial = dict(rad)
    if command == "dichotomy":
        cases = _require(raw, "cases", "")
        if not isinstance(cases, list) or not cases:
            raise ConfigError("'cases' must be a non-empty list")
        for i, case in enumerate(cases):
            _number(_require(case, "p", f"cases[{i}]."), f"cases[{i}].p", positive=True)
            _number(_require(case, "M", f"cases[{i}]."), f"cases[{i}].M")
        cfg.cases = [dict(c) for c in cases]
        if fam != "prototype":
            raise ConfigError("'dichotomy' runs prototype integrands only")
    if command in ("sweep", "dichotomy") and len(cfg.eps_list) < 1:
        raise ConfigError("'eps_list' must not be empty")
    if "seed" in raw:
        if isinstance(raw["seed"], bool) or not isinstance(raw["seed"], int):
            raise ConfigError("'seed' must be an integer")
        cfg.seed = raw["seed"]
    return cfg


def load_config(path, command=None):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(raw, base_dir=path.parent, command=command)
