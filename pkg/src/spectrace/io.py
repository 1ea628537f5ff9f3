"""File formats: trajectory CSV, matrix CSV, spec JSON and complex JSON values."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .systems import JordanSpec, ObservedSeries

__all__ = [
    "format_complex",
    "parse_complex",
    "complex_to_json",
    "complex_from_json",
    "write_series_csv",
    "read_series_csv",
    "read_matrix_csv",
    "load_spec",
    "spec_from_dict",
    "spec_to_dict",
]


def format_complex(z) -> str:
    """Round-trip text form: a plain real, or ``re+imj``."""
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    return f"{z.real!r}{z.imag:+}j"


def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "")
    if not t:
        raise ValueError("empty numeric field")
    return complex(t)


def complex_to_json(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(v) -> complex:
    """Accept ``{"re":..,"im":..}``, a bare number, or a ``re+imj`` string."""
    if isinstance(v, dict):
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    if isinstance(v, str):
        return parse_complex(v)
    if isinstance(v, (int, float)):
        return complex(v)
    raise TypeError(f"cannot read a complex number from {v!r}")


def write_series_csv(series: ObservedSeries, path) -> None:
    """Header ``t,i<k1>,...``; ``t`` is the sample time (index times ``dt``)."""
    step = series.dt if series.dt is not None else 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"i{k}" for k in series.omega])
        for t, row in enumerate(series.samples):
            w.writerow([repr(t * step) if series.dt is not None else t] + [format_complex(z) for z in row])


def read_series_csv(path, dt: float | None = None) -> ObservedSeries:
    """Load a trajectory CSV written by :func:`write_series_csv` (or by hand)."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "t" or not all(h.startswith("i") and h[1:].isdigit() for h in header[1:]):
        raise ValueError(f"{path}: header must be t,i<k1>,i<k2>,...")
    omega = tuple(int(h[1:]) for h in header[1:])
    body = [r for r in rows[1:] if any(f.strip() for f in r)]
    if not body:
        raise ValueError(f"{path}: no samples")
    for n, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValueError(f"{path}:{n}: expected {len(header)} fields, got {len(r)}")
    Y = np.array([[parse_complex(f) for f in r[1:]] for r in body], dtype=complex)
    return ObservedSeries(omega, Y, dt=dt)


def read_matrix_csv(path) -> np.ndarray:
    """Numeric CSV, one snapshot per row; a non-numeric first row is skipped."""
    with open(Path(path), newline="") as fh:
        rows = [r for r in csv.reader(fh) if any(f.strip() for f in r)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    try:
        [float(f) for f in rows[0]]
    except ValueError:
        rows = rows[1:]
    X = np.array([[float(f) for f in r] for r in rows])
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError(f"{path}: need at least two snapshot rows")
    return X


def spec_from_dict(data: dict):
    """Parse the spec JSON layout into ``(JordanSpec, b, c)``; ``b``/``c`` may be None."""
    for key in ("eigenvalues", "blocks", "U"):
        if key not in data:
            raise ValueError(f"spec is missing {key!r}")
    lam = [complex_from_json(v) for v in data["eigenvalues"]]
    U = np.array([[complex_from_json(v) for v in row] for row in data["U"]], dtype=complex)
    spec = JordanSpec(tuple(lam), tuple(tuple(bl) for bl in data["blocks"]), U)

    def vec(key):
        if data.get(key) is None:
            return None
        v = np.array([complex_from_json(x) for x in data[key]], dtype=complex)
        if v.size != spec.dim:
            raise ValueError(f"spec {key!r} must have length {spec.dim}")
        return v

    return spec, vec("b"), vec("c")


def _num_json(z):
    z = complex(z)
    return z.real if z.imag == 0 else complex_to_json(z)


def spec_to_dict(spec: JordanSpec, b=None, c=None) -> dict:
    out = {
        "eigenvalues": [complex_to_json(z) for z in spec.eigenvalues],
        "blocks": [list(bl) for bl in spec.blocks],
        "U": [[_num_json(z) for z in row] for row in spec.U],
    }
    if b is not None:
        out["b"] = [_num_json(z) for z in b]
    if c is not None:
        out["c"] = [_num_json(z) for z in c]
    return out


def load_spec(path):
    with open(Path(path)) as fh:
        return spec_from_dict(json.load(fh))
