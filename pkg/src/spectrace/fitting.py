"""Least-squares linear fits for snapshot data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LinearFit", "fit_linear_system", "normalize_columns"]


@dataclass(frozen=True)
class LinearFit:
    A: np.ndarray
    residual: float
    rank: int
    degenerate: bool


def fit_linear_system(snapshots, rcond: float = 1e-12) -> LinearFit:
    """Fit ``x_{t+1} ~ A x_t`` by least squares.

    Parameters
    ----------
    snapshots : (M, d) array
        One state per row.
    rcond : float
        Relative cutoff for the numerical rank of the past-snapshot matrix.

    Returns
    -------
    LinearFit
        ``A = X_future X_past^+`` with the relative one-step residual; flagged
        degenerate when ``X_past`` does not have full row rank.
    """
    X = np.asarray(snapshots)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need an (M, d) snapshot matrix with M >= 2")
    past, future = X[:-1].T, X[1:].T
    # A X_past = X_future  <=>  X_past^T A^T = X_future^T
    At, _, rank, _ = np.linalg.lstsq(past.T, future.T, rcond=rcond)
    A = At.T
    nf = np.linalg.norm(future)
    res = float(np.linalg.norm(A @ past - future) / nf) if nf > 0 else 0.0
    return LinearFit(A, res, int(rank), bool(rank < X.shape[1]))


def normalize_columns(snapshots):
    """Zero-mean, unit-std channels.

    Returns
    -------
    Z : ndarray
        Normalized data; constant channels become zeros.
    constant : ndarray of bool
        Channels whose standard deviation was clamped to 1.
    """
    X = np.asarray(snapshots, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    constant = sd == 0
    sd = np.where(constant, 1.0, sd)
    return (X - mu) / sd, constant
