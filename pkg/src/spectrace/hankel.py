"""Stacked Hankel data matrices, numerical rank selection and the
confluent-Vandermonde factorization used as a test oracle.

Row layout is time-major: block row ``m`` (``|omega|`` rows) of column ``l``
holds ``S_omega x_{m+l}`` in sorted-omega order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.special import comb

from .systems import JordanSpec, ObservedSeries

__all__ = [
    "HankelPair",
    "RankEstimate",
    "build_hankel",
    "estimate_rank",
    "default_L",
    "JordanFactors",
    "jordan_factorization",
    "local_moments",
    "permute_stacked",
    "unpermute_stacked",
    "RANK_POLICIES",
]

RANK_POLICIES = ("quot", "abs", "gap")
QUOT_FALLBACK = 10.0


@dataclass(frozen=True)
class HankelPair:
    full: np.ndarray
    M: int
    L: int
    omega: tuple

    @property
    def H0(self) -> np.ndarray:
        return self.full[:, :-1]

    @property
    def H1(self) -> np.ndarray:
        return self.full[:, 1:]

    @property
    def k(self) -> int:
        """Rows per time block."""
        return len(self.omega)


@dataclass(frozen=True)
class RankEstimate:
    singular_values: np.ndarray
    r_abs: int
    r_quot: int
    r_gap: int
    chosen: int
    criterion: str
    max_quotient: float

    def as_dict(self) -> dict:
        return {
            "singular_values": [float(s) for s in self.singular_values],
            "r_abs": self.r_abs,
            "r_quot": self.r_quot,
            "r_gap": self.r_gap,
            "chosen": self.chosen,
            "criterion": self.criterion,
            "max_quotient": float(self.max_quotient),
        }


def build_hankel(series: ObservedSeries, L: int) -> HankelPair:
    """``H_{omega, M-L, L+1}``: column ``l`` stacks samples ``l .. M-L+l-1``."""
    M = series.M
    if not 1 <= L <= M - 1:
        raise ValueError(f"L={L} out of range 1..{M - 1}")
    Y = series.samples
    full = np.column_stack([Y[l : M - L + l].reshape(-1) for l in range(L + 1)])
    return HankelPair(full, M, L, series.omega)


def default_L(M: int, r: int | None = None) -> int:
    """``floor(M/2)``, clipped to ``[r, M - r]`` once ``r`` is known."""
    L = max(M // 2, 1)
    if r is not None:
        L = min(max(L, r), M - r)
    return max(L, 1)


def _quotients(s):
    q = np.empty(len(s) - 1)
    for j in range(len(s) - 1):
        if s[j + 1] > 0:
            q[j] = s[j] / s[j + 1]
        else:
            q[j] = np.inf if s[j] > 0 else 0.0
    return q


def estimate_rank(pair, eps_rel: float = 1e-8, policy: str = "quot") -> RankEstimate:
    """Numerical rank by absolute threshold, largest quotient and quotient gap.

    ``pair`` may be a :class:`HankelPair` or a plain matrix. The quotient
    criterion is the default; it falls back to the absolute threshold when
    the largest quotient is below 10 (no visible gap).
    """
    H = pair.full if isinstance(pair, HankelPair) else np.asarray(pair)
    if H.size == 0:
        raise ValueError("empty matrix")
    if policy not in RANK_POLICIES:
        raise ValueError(f"unknown rank policy {policy!r}")
    s = np.linalg.svd(H, compute_uv=False)
    r_abs = int(np.count_nonzero(s > eps_rel * s[0])) if s[0] > 0 else 0
    if len(s) < 2 or s[0] == 0:
        r_quot = r_gap = r_abs
        qmax = np.inf if s[0] > 0 else 0.0
    else:
        q = _quotients(s)
        qmax = float(q.max())
        r_quot = int(np.argmax(q)) + 1  # first maximum: smallest index wins
        if np.isinf(qmax) or len(q) == 1:
            r_gap = r_quot
        else:
            order = np.argsort(-q, kind="stable")
            gaps = q[order][:-1] - q[order][1:]
            r_gap = int(order[int(np.argmax(gaps))]) + 1
    if policy == "abs":
        chosen, crit = r_abs, "abs"
    elif policy == "gap":
        chosen, crit = r_gap, "gap"
    elif qmax < QUOT_FALLBACK:
        chosen, crit = r_abs, "abs"
    else:
        chosen, crit = r_quot, "quot"
    return RankEstimate(s, r_abs, r_quot, r_gap, chosen, crit, qmax)


def permute_stacked(pair: HankelPair) -> list:
    """Split the time-major matrix into one scalar Hankel per observed index."""
    k = pair.k
    return [pair.full[i::k] for i in range(k)]


def unpermute_stacked(blocks) -> np.ndarray:
    """Inverse of :func:`permute_stacked`."""
    k = len(blocks)
    n, cols = blocks[0].shape
    full = np.empty((n * k, cols), dtype=np.result_type(*blocks))
    for i, B in enumerate(blocks):
        full[i::k] = B
    return full


def local_moments(spec: JordanSpec, v, i: int, s: int, tol: float = 1e-10) -> np.ndarray:
    """Moments ``c_k = e_i^T U N_s^k (U^{-1} v)_s`` for ``k = 0 .. h_s - 1``.

    Entries below ``tol`` relative to ``|U[i, block]| |U^{-1}v|`` are set to
    zero. ``i`` is a 1-based coordinate.
    """
    sl = spec.slices()[s]
    coords = np.linalg.solve(spec.U, np.asarray(v, dtype=complex))
    vs = coords[sl]
    row = spec.U[i - 1, sl]
    N = spec.nilpotent(s)
    out = np.empty(sl.stop - sl.start, dtype=complex)
    x = vs
    for k in range(out.size):
        out[k] = row @ x
        x = N @ x
    scale = np.linalg.norm(row) * np.linalg.norm(coords)
    out[np.abs(out) <= tol * scale] = 0
    return out


@dataclass(frozen=True)
class JordanFactors:
    """``H(t) = V_{M-L}^T Lam Jhat^t V_L`` for a single observed index."""

    V_rows: np.ndarray  # r x (M-L)
    V_cols: np.ndarray  # r x L
    Lam: np.ndarray  # r x r
    Jhat: np.ndarray  # r x r
    degrees: tuple  # local degree per eigenvalue (0 means dropped)

    def reconstruct(self, t: int) -> np.ndarray:
        return self.V_rows.T @ self.Lam @ np.linalg.matrix_power(self.Jhat, t) @ self.V_cols


def _confluent_vandermonde(lam, r, n):
    k = np.arange(r)[:, None]
    l = np.arange(n)[None, :]
    expo = l - k
    pw = np.where(expo >= 0, np.power(complex(lam), np.maximum(expo, 0)), 0)
    return comb(l, k) * pw


def jordan_factorization(spec: JordanSpec, b, omega, M: int, L: int, tol: float = 1e-10) -> JordanFactors:
    """Binomial (confluent Vandermonde) factorization of the single-index Hankel.

    Eigenvalues whose local degree is zero are dropped.
    """
    om = tuple(omega)
    if len(om) != 1:
        raise ValueError("the factorization is defined for a single observed index")
    if not 1 <= L <= M - 1:
        raise ValueError(f"L={L} out of range 1..{M - 1}")
    i = int(om[0])
    Vr, Vc, Lams, Js, deg = [], [], [], [], []
    for s, lam in enumerate(spec.eigenvalues):
        c = local_moments(spec, b, i, s, tol)
        nz = np.flatnonzero(c)
        r = int(nz[-1]) + 1 if nz.size else 0
        deg.append(r)
        if r == 0:
            continue
        a = np.arange(r)
        idx = a[:, None] + a[None, :]
        Lams.append(np.where(idx < r, c[np.minimum(idx, r - 1)], 0))
        Js.append(lam * np.eye(r) + np.eye(r, r, -1))
        Vr.append(_confluent_vandermonde(lam, r, M - L))
        Vc.append(_confluent_vandermonde(lam, r, L))
    if not Lams:
        raise ValueError("no eigenvalue is visible from this index")
    return JordanFactors(
        np.vstack(Vr),
        np.vstack(Vc),
        sla.block_diag(*Lams).astype(complex),
        sla.block_diag(*Js).astype(complex),
        tuple(deg),
    )
