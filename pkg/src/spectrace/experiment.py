"""Experiment grid runner: simulate or load data, estimate, score."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import graphs
from .estimators import METHODS, EstimatorConfig, continuous_log_map, estimate
from .fitting import fit_linear_system, normalize_columns
from .hankel import build_hankel, default_L, estimate_rank
from .io import read_matrix_csv, spec_from_dict
from .metrics import ine, match_spectra, rmse
from .presets import example1
from .recoverability import effective_vector, recoverable_set_jordan, recoverable_set_numeric
from .systems import (
    AffineSystem,
    ObservedSeries,
    build_from_jordan,
    difference_transform,
    expm,
    simulate_continuous,
    simulate_discrete,
)

__all__ = [
    "CONFIG_SCHEMA",
    "MetricsRow",
    "ExperimentResult",
    "load_config",
    "resolve_seed",
    "run_experiment",
    "write_rows_csv",
    "read_rows_csv",
]

SEED_ENV = "SPECTRACE_SEED"

_graph_schema = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["ring", "random", "sphere", "edges"]},
        "d": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "m_edges": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "path": {"type": "string"},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["source", "omegas", "M", "methods"],
    "properties": {
        "name": {"type": "string"},
        "source": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["jordan", "graph", "csv"]},
                "preset": {"enum": ["example1"]},
                "spec": {"type": "object"},
                "spec_path": {"type": "string"},
                "graph": _graph_schema,
                "dynamics": {"enum": ["random_walk", "heat"]},
                "x0": {"oneOf": [{"enum": ["random", "uniform"]}, {"type": "array"}]},
                "drive": {"oneOf": [{"enum": ["zero", "random"]}, {"type": "array"}]},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "path": {"type": "string"},
                "normalize": {"type": "boolean"},
            },
        },
        "omegas": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        },
        "M": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}},
        "methods": {"type": "array", "minItems": 1, "items": {"enum": list(METHODS)}},
        "L": {"oneOf": [{"type": "integer", "minimum": 1}, {"type": "null"}]},
        "rank_L": {"oneOf": [{"type": "integer", "minimum": 1}, {"enum": ["d", "half"]}, {"type": "null"}]},
        "r": {"oneOf": [{"type": "integer", "minimum": 1}, {"enum": ["auto", "oracle"]}]},
        "difference": {"oneOf": [{"type": "boolean"}, {"enum": ["auto"]}]},
        "log_map": {"type": "boolean"},
        "thresholds": {
            "type": "object",
            "properties": {
                "eps_rel": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "eta_rel": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "pinv_rel": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "rank_policy": {"enum": ["quot", "abs", "gap"]},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer"},
        "output": {"type": "string"},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class MetricsRow:
    index: int
    omega: tuple
    M: int
    r: int | None
    r_hat: int | None
    method: str
    L: int | None
    rmse: float
    ine: float
    error: str = ""

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "omega": list(self.omega),
            "M": self.M,
            "r": self.r,
            "r_hat": self.r_hat,
            "method": self.method,
            "L": self.L,
            "rmse": None if math.isnan(self.rmse) else self.rmse,
            "ine": None if math.isnan(self.ine) else self.ine,
            "error": self.error,
        }


@dataclass
class ExperimentResult:
    rows: list
    report: dict = field(default_factory=dict)


def load_config(path) -> dict:
    """Read a JSON config and resolve relative file paths against its folder."""
    path = Path(path)
    with open(path) as fh:
        cfg = json.load(fh)
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    src = cfg["source"]
    for key in ("spec_path", "path"):
        if key in src and not Path(src[key]).is_absolute():
            src[key] = str(path.parent / src[key])
    g = src.get("graph")
    if g and "path" in g and not Path(g["path"]).is_absolute():
        g["path"] = str(path.parent / g["path"])
    return cfg


def resolve_seed(cfg: dict) -> int:
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        return int(env)
    return int(cfg.get("seed", 0))


@dataclass
class _Source:
    """What the grid needs from a data source."""

    dim: int | None
    sampler: object  # callable M -> (M, d) states
    dt: float | None
    affine: bool
    oracle: object  # callable omega -> RecoverabilityReport, or None
    reference: object = None  # fixed reference spectrum (CSV data)
    log_reference: object = None  # callable omega -> continuous-domain reference
    meta: dict = field(default_factory=dict)


def _vector_from(value, d, rng, kind):
    if isinstance(value, list):
        return np.array(value, dtype=complex)
    if value in (None, "zero"):
        return np.zeros(d)
    if value == "uniform":
        return np.full(d, 1.0 / d)
    if value == "random":
        v = rng.random(d)
        return v / v.sum() if kind == "x0" else v
    raise ValueError(f"unsupported vector spec {value!r}")


def _build_graph(gcfg, rng):
    kind = gcfg["kind"]
    if kind == "ring":
        return graphs.ring_graph(gcfg["d"], gcfg["k"])
    if kind == "edges":
        return graphs.read_edge_list(gcfg["path"], gcfg.get("d"))
    seed = gcfg["seed"] if "seed" in gcfg else int(rng.integers(2**31))
    if kind == "random":
        return graphs.random_digraph(gcfg["d"], gcfg["m_edges"], seed)
    return graphs.knn_sphere_graph(gcfg["d"], gcfg["k"], seed)


def _make_source(cfg, rng) -> _Source:
    src = cfg["source"]
    kind = src["type"]
    dt = src.get("dt")
    if kind == "csv":
        X = read_matrix_csv(src["path"])
        if src.get("normalize", False):
            X, _ = normalize_columns(X)
        fit = fit_linear_system(X)
        ref = np.linalg.eigvals(fit.A)
        meta = {"fit_residual": fit.residual, "fit_rank": fit.rank, "fit_degenerate": fit.degenerate}

        def sample(M):
            if M > X.shape[0]:
                raise ValueError(f"M={M} exceeds the {X.shape[0]} available snapshots")
            return X[:M]

        return _Source(X.shape[1], sample, dt, False, None, reference=ref, meta=meta)

    if kind == "jordan":
        if "preset" in src:
            spec, b, c = example1()
        elif "spec" in src:
            spec, b, c = spec_from_dict(src["spec"])
        elif "spec_path" in src:
            with open(src["spec_path"]) as fh:
                spec, b, c = spec_from_dict(json.load(fh))
        else:
            raise ValueError("jordan source needs preset, spec or spec_path")
        d = spec.dim
        b = b if b is not None else _vector_from(src.get("x0", "random"), d, rng, "b")
        c = c if c is not None else _vector_from(src.get("drive", "zero"), d, rng, "c")
        sys = build_from_jordan(spec, b, c)
        jordan = spec if dt is None else None
    else:
        g = _build_graph(src["graph"], rng)
        d = g.d
        x0 = _vector_from(src.get("x0", "random"), d, rng, "x0")
        if src.get("dynamics", "random_walk") == "random_walk":
            sys = graphs.random_walk_system(g, x0.real)
        else:
            c = _vector_from(src.get("drive", "random"), d, rng, "c")
            sys = AffineSystem(-graphs.laplacian(g).matrix, x0, c)
            dt = 1.0 if dt is None else dt
        jordan = None

    affine = not sys.homogeneous
    diff = cfg.get("difference", "auto")
    use_diff = affine if diff == "auto" else bool(diff)
    if use_diff:
        v = effective_vector(sys, dt)
        kind_v = "w" if dt is None else "w_continuous"
    else:
        v, kind_v = sys.b, "b"
    sampled_A = sys.A if dt is None else None

    def oracle(omega):
        if jordan is not None:
            return recoverable_set_jordan(jordan, v, omega, kind_v)
        if sampled_A is not None:
            return recoverable_set_numeric(sampled_A, v, omega, kind_v)
        return recoverable_set_numeric(expm(dt * sys.A), v, omega, kind_v)

    def log_reference(omega):
        rep = oracle(omega)
        return np.log(rep.reference_spectrum()) / dt

    def sample(M):
        if dt is None:
            return simulate_discrete(sys, M).states
        return simulate_continuous(sys, dt, M).states

    meta = {"dim": d, "differenced": use_diff, "vector": kind_v}
    return _Source(d, sample, dt, use_diff, oracle, log_reference=log_reference if dt else None, meta=meta)


def _estimator_config(cfg, r, rank_L):
    th = cfg.get("thresholds", {})
    return EstimatorConfig(
        L=cfg.get("L"),
        r=r,
        eps_rel=th.get("eps_rel", 1e-8),
        eta_rel=th.get("eta_rel", 1e-8),
        pinv_rel=th.get("pinv_rel", 1e-12),
        rank_policy=th.get("rank_policy", "quot"),
        rank_L=rank_L,
    )


def _run_cell(cfg, source, states, omega, M, base_index):
    """All methods for one (omega, M) cell."""
    om = tuple(sorted(set(omega)))
    rows, info = [], {"omega": list(om), "M": M}
    methods = cfg["methods"]

    def fail(msg, r=None, r_hat=None):
        return [
            MetricsRow(base_index + k, om, M, r, r_hat, m, None, math.nan, math.nan, msg)
            for k, m in enumerate(methods)
        ]

    try:
        X = states[:M]
        series = ObservedSeries(om, X[:, [i - 1 for i in om]], dt=source.dt)
        if source.affine:
            series = difference_transform(series)
        report = source.oracle(om) if source.oracle else None
        r_oracle = report.total_degree if report is not None else None
        if report is not None:
            info["oracle"] = report.as_dict()
            reference = report.reference_spectrum()
        else:
            reference = source.reference
        rank_L_cfg = cfg.get("rank_L", "d")
        if rank_L_cfg == "d" and source.dim is not None:
            rank_L = source.dim
        elif isinstance(rank_L_cfg, int):
            rank_L = rank_L_cfg
        else:
            rank_L = default_L(series.M)
        rank_L = max(1, min(rank_L, series.M - 1))
        th = cfg.get("thresholds", {})
        rk = estimate_rank(build_hankel(series, rank_L), th.get("eps_rel", 1e-8), th.get("rank_policy", "quot"))
        info["rank"] = rk.as_dict()
        info["rank_L"] = rank_L
        r_mode = cfg.get("r", "auto")
        if r_mode == "auto":
            r_use = rk.chosen
        elif r_mode == "oracle":
            r_use = r_oracle
        else:
            r_use = int(r_mode)
    except Exception as exc:  # row-level error record
        return fail(f"{type(exc).__name__}: {exc}"), info

    if not r_use:
        return fail("no recoverable eigenvalues (r = 0)", r_oracle, rk.chosen), info
    ecfg = _estimator_config(cfg, r_use, rank_L)
    use_log = cfg.get("log_map", False) and source.dt is not None
    for k, m in enumerate(methods):
        try:
            est = estimate(series, m, ecfg)
            ref = reference
            if use_log:
                est = continuous_log_map(est, source.dt)
                ref = source.log_reference(om)
            if len(est.eigenvalues) == 0 or ref is None or len(ref) == 0:
                raise ValueError("nothing to compare")
            mt = match_spectra(ref, est.eigenvalues)
            rows.append(MetricsRow(base_index + k, om, M, r_oracle, rk.chosen, m, est.diagnostics.get("L"), rmse(mt), ine(mt)))
        except Exception as exc:
            rows.append(MetricsRow(base_index + k, om, M, r_oracle, rk.chosen, m, None, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
    return rows, info


def run_experiment(cfg: dict, threads: int = 1) -> ExperimentResult:
    """Run every (omega, M, method) cell of a validated config.

    Rows come back in config order regardless of ``threads``.
    """
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    seed = resolve_seed(cfg)
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    source = _make_source(cfg, rng)
    Ms = list(cfg["M"])
    states = source.sampler(max(Ms))
    if source.dim is not None and any(i > source.dim for om in cfg["omegas"] for i in om):
        raise ValueError(f"omega index exceeds the state dimension {source.dim}")
    cells = [(om, M) for om in cfg["omegas"] for M in Ms]
    nm = len(cfg["methods"])

    def job(n):
        om, M = cells[n]
        return _run_cell(cfg, source, states, om, M, n * nm)

    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(len(cells))))
    else:
        results = [job(n) for n in range(len(cells))]
    rows = [row for rs, _ in results for row in rs]
    report = {
        "name": cfg.get("name", ""),
        "seed": seed,
        "source": source.meta,
        "cells": [info for _, info in results],
        "rows": [row.as_dict() for row in rows],
        "elapsed_s": time.perf_counter() - t0,
    }
    return ExperimentResult(rows, report)


_CSV_FIELDS = ["index", "omega", "M", "r", "r_hat", "method", "L", "rmse", "ine", "error"]


def write_rows_csv(rows, path) -> None:
    """Plot-ready metrics table; floats are written in round-trip form."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_FIELDS)
        for row in rows:
            w.writerow(
                [
                    row.index,
                    ";".join(str(i) for i in row.omega),
                    row.M,
                    "" if row.r is None else row.r,
                    "" if row.r_hat is None else row.r_hat,
                    row.method,
                    "" if row.L is None else row.L,
                    repr(row.rmse),
                    repr(row.ine),
                    row.error,
                ]
            )


def read_rows_csv(path) -> list:
    def opt_int(s):
        return int(s) if s != "" else None

    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                MetricsRow(
                    int(rec["index"]),
                    tuple(int(i) for i in rec["omega"].split(";")),
                    int(rec["M"]),
                    opt_int(rec["r"]),
                    opt_int(rec["r_hat"]),
                    rec["method"],
                    opt_int(rec["L"]),
                    float(rec["rmse"]),
                    float(rec["ine"]),
                    rec["error"],
                )
            )
    return rows
