"""Command line interface: ``spectrace <subcommand> ...``.

Every subcommand prints one JSON document on stdout. Failures print
``{"error": {"type": ..., "message": ...}}`` and exit with status 1 (2 for
bad arguments).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .estimators import METHODS, EstimatorConfig, continuous_log_map, estimate
from .experiment import load_config, resolve_seed, run_experiment, write_rows_csv
from .fitting import fit_linear_system, normalize_columns
from .hankel import build_hankel, default_L, estimate_rank
from .io import complex_to_json, load_spec, read_matrix_csv, read_series_csv, write_series_csv
from .metrics import ine, match_spectra, rmse
from .recoverability import effective_vector, recoverable_set_jordan
from .systems import build_from_jordan, difference_transform, observe, simulate_continuous, simulate_discrete

__all__ = ["main", "build_parser"]


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message)
        sys.exit(2)


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, default=_json_default)
    sys.stdout.write("\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (complex, np.complexfloating)):
        return complex_to_json(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _emit_error(kind, message) -> None:
    _emit({"error": {"type": kind, "message": str(message)}})


def _omega(text):
    try:
        om = sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad index list {text!r}") from None
    if not om or om[0] < 1:
        raise argparse.ArgumentTypeError("omega needs positive 1-based indices")
    return om


def _rank_arg(text):
    if text == "auto":
        return None
    try:
        r = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--r takes a positive integer or 'auto'") from None
    if r < 1:
        raise argparse.ArgumentTypeError("--r must be positive")
    return r


def _threads(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("--threads must be at least 1")
    return n


def _cap_threads(n) -> None:
    # BLAS pools honour these only if set before they spin up; best effort
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(n)
    except ImportError:
        pass


def _load_series(args):
    series = read_series_csv(args.input, dt=args.dt)
    if args.difference:
        series = difference_transform(series)
    return series


def cmd_simulate(args):
    spec, b, c = load_spec(args.spec)
    if b is None:
        raise CLIError("spec JSON must provide b for simulation")
    sys_ = build_from_jordan(spec, b, c)
    traj = simulate_discrete(sys_, args.M) if args.dt is None else simulate_continuous(sys_, args.dt, args.M)
    omega = args.omega or list(range(1, spec.dim + 1))
    series = observe(traj, omega)
    if args.output:
        write_series_csv(series, args.output)
    return {
        "M": series.M,
        "omega": list(series.omega),
        "dt": args.dt,
        "output": args.output,
        "samples": None if args.output else [[complex_to_json(z) for z in row] for row in series.samples],
    }


def cmd_rank(args):
    series = _load_series(args)
    L = args.L if args.L is not None else default_L(series.M)
    est = estimate_rank(build_hankel(series, L), args.eps_rel, args.policy)
    if args.spectrum_csv:
        s = est.singular_values
        with open(args.spectrum_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "sigma", "quotient"])
            for j, sv in enumerate(s, start=1):
                q = s[j - 1] / s[j] if j < len(s) and s[j] > 0 else ""
                w.writerow([j, repr(float(sv)), "" if q == "" else repr(float(q))])
    return dict(est.as_dict(), L=L, M=series.M, omega=list(series.omega))


def cmd_estimate(args):
    series = _load_series(args)
    cfg = EstimatorConfig(
        L=args.L, r=args.r, eps_rel=args.eps_rel, eta_rel=args.eta_rel, pinv_rel=args.pinv_rel,
        rank_policy=args.policy,
    )
    est = estimate(series, args.method, cfg)
    if args.log_map:
        if args.dt is None:
            raise CLIError("--log-map needs --dt")
        est = continuous_log_map(est, args.dt)
    out = {
        "method": est.method,
        "r_hat": est.r_used,
        "eigenvalues": [complex_to_json(z) for z in est.eigenvalues],
        "rmse": None,
        "ine": None,
        "diagnostics": est.diagnostics,
    }
    if args.reference:
        spec, b, c = load_spec(args.reference)
        if b is None:
            raise CLIError("reference spec must provide b")
        sys_ = build_from_jordan(spec, b, c)
        v = effective_vector(sys_) if args.difference else sys_.b
        ref = recoverable_set_jordan(spec, v, series.omega).reference_spectrum()
        if ref.size and len(est.eigenvalues):
            m = match_spectra(ref, est.eigenvalues)
            out["rmse"], out["ine"] = rmse(m), ine(m)
    return out


def cmd_oracle(args):
    spec, b, c = load_spec(args.spec)
    if b is None:
        raise CLIError("spec JSON must provide b")
    sys_ = build_from_jordan(spec, b, c)
    use_w = args.vector == "w" or (args.vector == "auto" and not sys_.homogeneous)
    v = effective_vector(sys_) if use_w else sys_.b
    rep = recoverable_set_jordan(spec, v, args.omega, "w" if use_w else "b")
    return rep.as_dict()


def cmd_experiment(args):
    cfg = load_config(args.config)
    res = run_experiment(cfg, threads=args.threads)
    out = args.output or cfg.get("output")
    if out:
        write_rows_csv(res.rows, out)
    rep = dict(res.report, output=out, seed=resolve_seed(cfg))
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(rep, fh, indent=2, default=_json_default)
    return rep


def cmd_fit(args):
    X = read_matrix_csv(args.input)
    flags = None
    if args.normalize:
        X, flags = normalize_columns(X)
    fit = fit_linear_system(X)
    ev = np.linalg.eigvals(fit.A)
    out = {
        "A": fit.A.tolist(),
        "eigenvalues": [complex_to_json(z) for z in ev],
        "residual": fit.residual,
        "rank": fit.rank,
        "degenerate": fit.degenerate,
    }
    if flags is not None:
        out["constant_channels"] = [int(j) + 1 for j in np.flatnonzero(flags)]
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spectrace", description="Eigenvalue recovery from partially observed trajectories.")
    p.add_argument("--threads", type=_threads, default=1, help="cap on worker and BLAS threads")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate a spec JSON and write a trajectory CSV")
    s.add_argument("--spec", required=True)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--omega", type=_omega)
    s.add_argument("--dt", type=float, help="continuous time with this step")
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_simulate)

    def series_args(q):
        q.add_argument("--input", "-i", required=True, help="trajectory CSV (t,i<k>,...)")
        q.add_argument("--difference", action="store_true", help="difference the series first (affine data)")
        q.add_argument("--dt", type=float)
        q.add_argument("--L", type=int)
        q.add_argument("--eps-rel", type=float, default=1e-8)
        q.add_argument("--policy", choices=["quot", "abs", "gap"], default="quot")

    s = sub.add_parser("rank", help="numerical rank of the stacked Hankel matrix")
    series_args(s)
    s.add_argument("--spectrum-csv", help="write singular values and quotients here")
    s.set_defaults(func=cmd_rank)

    s = sub.add_parser("estimate", help="estimate eigenvalues from a trajectory CSV")
    series_args(s)
    s.add_argument("--method", choices=METHODS, default="mp_svd")
    s.add_argument("--r", type=_rank_arg, default=None, help="integer or 'auto'")
    s.add_argument("--eta-rel", type=float, default=1e-8)
    s.add_argument("--pinv-rel", type=float, default=1e-12)
    s.add_argument("--log-map", action="store_true", help="map e^{dt lambda} back to lambda")
    s.add_argument("--reference", help="spec JSON used to score the estimate")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("oracle", help="predict recoverable eigenvalues of a spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--omega", type=_omega, required=True)
    s.add_argument("--vector", choices=["auto", "b", "w"], default="auto")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("experiment", help="run an experiment grid from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--output", "-o", help="metrics CSV")
    s.add_argument("--report", help="also write the JSON report here")
    s.add_argument("--threads", type=_threads, default=argparse.SUPPRESS)
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("fit", help="least-squares linear fit of a snapshot CSV")
    s.add_argument("--input", "-i", required=True)
    s.add_argument("--normalize", action="store_true")
    s.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _cap_threads(args.threads)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        _emit(args.func(args))
    except FileNotFoundError as exc:
        _emit_error("FileNotFoundError", exc)
        return 1
    except Exception as exc:
        _emit_error(type(exc).__name__, exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
