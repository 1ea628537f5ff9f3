"""Spectrum matching and error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["MatchResult", "match_spectra", "rmse", "ine", "hausdorff"]


@dataclass(frozen=True)
class MatchResult:
    pairs: list
    unmatched_exact: list
    unmatched_est: list

    @property
    def distances(self) -> np.ndarray:
        return np.array([abs(a - b) for a, b in self.pairs])


def match_spectra(exact, est, injective: bool = False) -> MatchResult:
    """Pair every estimate with its nearest exact eigenvalue.

    Exact values may be reused (argmin rule); ties go to the smallest index.
    With ``injective=True`` a minimum-cost one-to-one assignment is used
    instead and leftovers on either side are reported as unmatched.
    """
    exact = np.asarray(exact, dtype=complex).ravel()
    est = np.asarray(est, dtype=complex).ravel()
    if exact.size == 0 or est.size == 0:
        raise ValueError("both spectra must be non-empty")
    D = np.abs(est[:, None] - exact[None, :])
    if injective:
        rows, cols = linear_sum_assignment(D)
        pairs = [(complex(exact[j]), complex(est[i])) for i, j in sorted(zip(rows, cols))]
        used_e = set(cols.tolist())
        used_h = set(rows.tolist())
        return MatchResult(
            pairs,
            [complex(z) for j, z in enumerate(exact) if j not in used_e],
            [complex(z) for i, z in enumerate(est) if i not in used_h],
        )
    nearest = np.argmin(D, axis=1)
    pairs = [(complex(exact[j]), complex(z)) for z, j in zip(est, nearest)]
    used = set(nearest.tolist())
    return MatchResult(pairs, [complex(z) for j, z in enumerate(exact) if j not in used], [])


def rmse(match: MatchResult) -> float:
    """``sqrt(mean |lambda - lambda_hat|^2)`` over matched pairs."""
    d = match.distances
    if d.size == 0:
        raise ValueError("empty match")
    top = d.max()
    if top == 0:
        return 0.0
    # rescale so tiny distances do not underflow when squared
    return float(top * np.sqrt(np.mean((d / top) ** 2)))


def ine(match: MatchResult) -> float:
    """Largest matched error modulus."""
    d = match.distances
    if d.size == 0:
        raise ValueError("empty match")
    return float(d.max())


def hausdorff(a, b) -> float:
    """Hausdorff distance between two finite point sets in the plane."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return float("inf")
    D = np.abs(a[:, None] - b[None, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))
