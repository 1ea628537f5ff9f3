"""Eigenvalue estimators on stacked Hankel data.

Prony (LS / TLS), Matrix Pencil (LS / TLS / SVD) and a block-shift ESPRIT,
plus the helpers they share: thresholded pseudo-inverse solves, companion
roots, root clustering and the continuous-time log map.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .hankel import build_hankel, default_L, estimate_rank
from .systems import ObservedSeries

__all__ = [
    "METHODS",
    "SpectrumEstimate",
    "EstimatorConfig",
    "pinv_thresholded",
    "solve_thresholded",
    "companion_roots",
    "cluster_roots",
    "prony",
    "matrix_pencil",
    "esprit",
    "estimate",
    "continuous_log_map",
]

log = logging.getLogger(__name__)

METHODS = ("prony_ls", "prony_tls", "mp_ls", "mp_tls", "mp_svd", "esprit")
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SpectrumEstimate:
    eigenvalues: np.ndarray
    method: str
    r_used: int
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "r_used": self.r_used,
            "eigenvalues": [{"re": float(z.real), "im": float(z.imag)} for z in self.eigenvalues],
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs shared by all estimators.

    Parameters
    ----------
    L : int, optional
        Pencil parameter. Defaults to ``floor(M/2)`` clipped to ``[r, M-r]``.
    r : int, optional
        Number of recoverable eigenvalues; estimated from the data if None.
    eps_rel : float
        Relative singular-value threshold of the absolute rank criterion.
    eta_rel : float
        Matrix Pencil eigenvalues with ``|z| <= eta_rel * max|z|`` are pruned.
    pinv_rel : float
        Pseudo-inverse cutoff, relative to the largest singular value.
    rank_policy : {"quot", "abs", "gap"}
        Which rank criterion picks ``r`` when it is not given.
    rank_L : int, optional
        Pencil parameter for the rank step (the state dimension when known).
    """

    L: int | None = None
    r: int | None = None
    eps_rel: float = 1e-8
    eta_rel: float = 1e-8
    pinv_rel: float = 1e-12
    rank_policy: str = "quot"
    rank_L: int | None = None

    def __post_init__(self):
        for name in ("eps_rel", "eta_rel", "pinv_rel"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        for name in ("L", "r", "rank_L"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be positive, got {v}")


def _svd_rank(s, rel):
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rel * s[0]))


def pinv_thresholded(Mtx, pinv_rel: float = 1e-12) -> np.ndarray:
    """SVD pseudo-inverse keeping singular values above ``pinv_rel * s_1``."""
    Mtx = np.asarray(Mtx)
    U, s, Vh = np.linalg.svd(Mtx, full_matrices=False)
    k = _svd_rank(s, pinv_rel)
    return (Vh[:k].conj().T / s[:k]) @ U[:, :k].conj().T


def solve_thresholded(Mtx, B, pinv_rel: float = 1e-12):
    """Minimum-norm least-squares solution ``Mtx^+ B`` without forming ``Mtx^+``.

    Applying the truncated SVD factors to ``B`` directly is noticeably more
    accurate than multiplying by an explicit pseudo-inverse.

    Returns
    -------
    X : ndarray
    rank : int
        Number of singular values kept.
    s : ndarray
        All singular values of ``Mtx``.
    """
    U, s, Vh = np.linalg.svd(np.asarray(Mtx), full_matrices=False)
    k = _svd_rank(s, pinv_rel)
    B = np.asarray(B)
    coef = U[:, :k].conj().T @ B
    coef = coef / (s[:k, None] if coef.ndim == 2 else s[:k])
    return Vh[:k].conj().T @ coef, k, s


def companion_roots(monic_coeffs) -> np.ndarray:
    """Roots of ``z^n + a_{n-1} z^{n-1} + ... + a_0`` with ``monic_coeffs = [a_0, ..., a_{n-1}]``.

    Computed as eigenvalues of the companion matrix (ones on the
    subdiagonal, ``-a`` in the last column).
    """
    a = np.asarray(monic_coeffs, dtype=complex).ravel()
    n = a.size
    if n < 1:
        raise ValueError("polynomial degree must be at least 1")
    C = np.eye(n, n, -1, dtype=complex)
    C[:, -1] = -a
    return np.linalg.eigvals(C)


def cluster_roots(roots, radius: float = 1e-3):
    """Group roots closer than ``radius`` (single linkage).

    Returns
    -------
    centers : ndarray
        Cluster means, in order of first appearance.
    counts : ndarray
        Cluster sizes.
    """
    z = np.asarray(roots, dtype=complex).ravel()
    labels = -np.ones(z.size, dtype=int)
    nlab = 0
    for i in range(z.size):
        if labels[i] >= 0:
            continue
        stack = [i]
        labels[i] = nlab
        while stack:
            j = stack.pop()
            near = np.flatnonzero((labels < 0) & (np.abs(z - z[j]) < radius))
            labels[near] = nlab
            stack.extend(near.tolist())
        nlab += 1
    centers = np.array([z[labels == g].mean() for g in range(nlab)], dtype=complex)
    counts = np.array([np.count_nonzero(labels == g) for g in range(nlab)])
    return centers, counts


def _check_r(series, r, need):
    if r < 1:
        raise ValueError("r must be positive")
    if series.M < need:
        raise ValueError(f"need at least {need} samples for r={r}, got {series.M}")


def prony(series: ObservedSeries, r: int, variant: str = "LS", pinv_rel: float | None = None) -> SpectrumEstimate:
    """Prony's method on ``H_{omega, M-r, r+1}``.

    LS solves ``H0 q = -h`` in the least-squares sense. With the exact ``r``
    the system has full column rank, so by default only singular values at
    machine-precision level are cut. TLS takes ``q`` from the right singular
    vector of the smallest singular value and falls back to LS when its last
    entry vanishes.
    """
    variant = variant.upper()
    if variant not in ("LS", "TLS"):
        raise ValueError(f"unknown Prony variant {variant!r}")
    _check_r(series, r, r + 1)
    pair = build_hankel(series, r)
    H0, h = pair.H0, pair.full[:, -1]
    diag = {"L": r}
    if variant == "TLS":
        _, s, Vh = np.linalg.svd(pair.full, full_matrices=True)
        v = Vh[-1].conj()
        if abs(v[r]) < 1e-12 * np.linalg.norm(v):
            warnings.warn("TLS Prony normalization vanishes; falling back to LS", RuntimeWarning, stacklevel=2)
            diag["tls_fallback"] = True
            variant = "LS"
        else:
            q = v[:r] / v[r]
            diag["residual"] = float(np.linalg.norm(H0 @ q + h))
    if variant == "LS":
        rel = _EPS if pinv_rel is None else pinv_rel
        q, k, s = solve_thresholded(H0, -h, rel)
        diag["rank_H0"] = k
        diag["cond_H0"] = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
        if k < r:
            diag["ill_posed"] = True
            log.warning("Prony LS system is rank deficient (%d < %d)", k, r)
        diag["residual"] = float(np.linalg.norm(H0 @ q + h))
    method = "prony_tls" if variant == "TLS" else "prony_ls"
    return SpectrumEstimate(companion_roots(q), method, r, diag)


def _prune(z, r, eta_rel):
    z = np.asarray(z, dtype=complex)
    diag = {"pencil_eigenvalues": int(z.size)}
    top = np.abs(z).max() if z.size else 0.0
    keep = np.abs(z) > eta_rel * top
    diag["pruned"] = int(np.count_nonzero(~keep))
    kept = z[keep]
    if kept.size > r:
        order = np.argsort(-np.abs(kept), kind="stable")
        diag["extra_dropped"] = int(kept.size - r)
        kept = kept[np.sort(order[:r])]
    elif kept.size < r:
        diag["short"] = int(r - kept.size)
        log.warning("only %d of %d pencil eigenvalues survive pruning", kept.size, r)
    return kept, diag


def matrix_pencil(
    series: ObservedSeries,
    r: int,
    L: int | None = None,
    variant: str = "LS",
    eta_rel: float = 1e-8,
    pinv_rel: float = 1e-12,
) -> SpectrumEstimate:
    """Matrix Pencil eigenvalues from the ``L x L`` matrix ``C``.

    LS:  ``C = H0^+ H1``.
    SVD: ``C = (W*[:r, :L])^+ W*[:r, 1:]`` from the right singular vectors of
    the full Hankel matrix.
    TLS: same construction on the augmented matrix ``[H0 H1]``, i.e.
    ``C = (W'*[:r, :L])^+ W'*[:r, L:]``.

    Near-zero eigenvalues (``L - r`` of them on exact data) are pruned and at
    most ``r`` of the largest-modulus survivors are returned.
    """
    variant = variant.upper()
    if variant not in ("LS", "TLS", "SVD"):
        raise ValueError(f"unknown Matrix Pencil variant {variant!r}")
    L = default_L(series.M, r) if L is None else L
    if not r <= L <= series.M - r:
        raise ValueError(f"need r <= L <= M - r, got r={r}, L={L}, M={series.M}")
    pair = build_hankel(series, L)
    H0, H1 = pair.H0, pair.H1
    if variant == "LS":
        C, k, _ = solve_thresholded(H0, H1, pinv_rel)
        extra = {"rank_H0": k}
    else:
        X = pair.full if variant == "SVD" else np.hstack([H0, H1])
        _, s, Vh = np.linalg.svd(X, full_matrices=False)
        if Vh.shape[0] < r:
            raise ValueError("not enough rows for a rank-r signal subspace")
        Wr = Vh[:r]
        if variant == "SVD":
            left, right = Wr[:, :L], Wr[:, 1:]
        else:
            left, right = Wr[:, :L], Wr[:, L:]
        C, k, _ = solve_thresholded(left, right, pinv_rel)
        extra = {"rank_basis": k, "sigma_ratio": float(s[r - 1] / s[0]) if s[0] > 0 else 0.0}
    z, diag = _prune(np.linalg.eigvals(C), r, eta_rel)
    diag.update(extra, L=L)
    return SpectrumEstimate(z, f"mp_{variant.lower()}", r, diag)


def esprit(series: ObservedSeries, r: int, L: int | None = None, pinv_rel: float = 1e-12) -> SpectrumEstimate:
    """ESPRIT with the time shift applied to whole blocks of ``|omega|`` rows."""
    L = default_L(series.M, r) if L is None else L
    if not r <= L <= series.M - r:
        raise ValueError(f"need r <= L <= M - r, got r={r}, L={L}, M={series.M}")
    pair = build_hankel(series, L)
    k = pair.k
    if (series.M - L - 1) * k < r:
        raise ValueError("too few block rows for the shifted signal subspace")
    U, s, _ = np.linalg.svd(pair.full, full_matrices=False)
    Us = U[:, :r]
    J, rank, sv = solve_thresholded(Us[:-k], Us[k:], pinv_rel)
    diag = {
        "L": L,
        "rank_shifted": rank,
        "cond_shifted": float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf"),
    }
    if rank < r:
        log.warning("ESPRIT shifted basis is rank deficient (%d < %d)", rank, r)
        diag["ill_conditioned"] = True
    return SpectrumEstimate(np.linalg.eigvals(J), "esprit", r, diag)


def estimate(series: ObservedSeries, method: str, config: EstimatorConfig | None = None) -> SpectrumEstimate:
    """Rank step (unless ``config.r`` is set) followed by the chosen estimator."""
    cfg = config or EstimatorConfig()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    rank_info = None
    r = cfg.r
    if r is None:
        rank_L = cfg.rank_L if cfg.rank_L is not None else default_L(series.M)
        rank_L = min(rank_L, series.M - 1)
        rank_info = estimate_rank(build_hankel(series, rank_L), cfg.eps_rel, cfg.rank_policy)
        r = rank_info.chosen
        if r < 1:
            raise ValueError("the observed series is identically zero")
    if method == "prony_ls":
        est = prony(series, r, "LS")
    elif method == "prony_tls":
        est = prony(series, r, "TLS")
    elif method == "esprit":
        est = esprit(series, r, cfg.L, cfg.pinv_rel)
    else:
        est = matrix_pencil(series, r, cfg.L, method[3:], cfg.eta_rel, cfg.pinv_rel)
    if rank_info is not None:
        diag = dict(est.diagnostics, rank=rank_info.as_dict())
        est = replace(est, diagnostics=diag)
    return est


def continuous_log_map(est: SpectrumEstimate, dt: float) -> SpectrumEstimate:
    """Map sampled-domain eigenvalues ``mu = e^{dt lambda}`` back to ``lambda``.

    The principal branch is used. Values on or next to the negative real
    axis are not identifiable and pass through unchanged (flagged); zeros
    are dropped.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    out, ambiguous, dropped = [], [], 0
    for mu in np.asarray(est.eigenvalues, dtype=complex):
        if mu == 0:
            dropped += 1
            continue
        lg = np.log(mu)
        if abs(lg.imag) < np.pi * (1 - 1e-9):
            out.append(lg / dt)
        else:
            ambiguous.append(complex(mu))
            out.append(mu)
    diag = dict(est.diagnostics)
    diag.update(
        log_map={
            "dt": dt,
            "ambiguous": [{"re": z.real, "im": z.imag} for z in ambiguous],
            "dropped_zero": dropped,
        }
    )
    return SpectrumEstimate(np.array(out, dtype=complex), est.method, est.r_used, diag)
