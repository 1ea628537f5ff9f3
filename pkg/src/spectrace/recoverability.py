"""Which eigenvalues can be read off the observed coordinates.

Two prediction paths: an exact one driven by a :class:`JordanSpec`, and a
numeric one built from spectral projectors of a diagonalizable matrix. A
rank-only fallback from the Hankel matrix covers everything else.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .hankel import build_hankel, estimate_rank, local_moments
from .systems import AffineSystem, JordanSpec, ObservedSeries, expm, g_matrix

__all__ = [
    "EigenRecord",
    "RecoverabilityReport",
    "PenthouseFamily",
    "krylov_basis",
    "min_poly_degree",
    "annihilator_degree",
    "annihilator_degree_from_series",
    "recoverable_set_jordan",
    "recoverable_set_numeric",
    "effective_vector",
    "penthouse",
    "UniversalityCertificate",
    "is_universal",
    "local_min_poly_degree",
    "cluster_eigenvalues",
]

log = logging.getLogger(__name__)

ORTHO_TOL = 1e-10
CLUSTER_TOL = 1e-9
EIGVEC_COND_MAX = 1e8


@dataclass(frozen=True)
class EigenRecord:
    value: complex
    recoverable: bool | None
    local_degree: int | None

    def as_dict(self) -> dict:
        return {
            "value": {"re": float(self.value.real), "im": float(self.value.imag)},
            "recoverable": self.recoverable,
            "local_degree": self.local_degree,
        }


@dataclass(frozen=True)
class RecoverabilityReport:
    """Predicted recoverable eigenvalues with their local degrees.

    ``path`` is ``"jordan-exact"``, ``"numeric-diagonalizable"`` or
    ``"data-driven"`` (no per-eigenvalue attribution).
    """

    records: tuple
    total_degree: int
    omega: tuple
    vector: np.ndarray
    vector_kind: str
    path: str
    notes: tuple = ()

    @property
    def recoverable(self) -> list:
        return [rec.value for rec in self.records if rec.recoverable]

    def reference_spectrum(self) -> np.ndarray:
        """Recoverable eigenvalues, each repeated by its local degree."""
        vals = [rec.value for rec in self.records for _ in range(rec.local_degree or 0)]
        return np.array(vals, dtype=complex)

    def as_dict(self) -> dict:
        return {
            "omega": list(self.omega),
            "path": self.path,
            "vector_kind": self.vector_kind,
            "total_degree": self.total_degree,
            "eigenvalues": [rec.as_dict() for rec in self.records],
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class PenthouseFamily:
    """Cyclic-vector indices (0-based) per eigenvalue and the projections onto their span."""

    indices: tuple
    projections: tuple = field(repr=False)


def _omega0(omega, d):
    om = sorted(set(int(i) for i in omega))
    if not om:
        raise ValueError("omega must be non-empty")
    if om[0] < 1 or om[-1] > d:
        raise IndexError(f"omega {om} out of range 1..{d}")
    return tuple(om), [i - 1 for i in om]


def krylov_basis(A, vectors, tol: float = ORTHO_TOL) -> np.ndarray:
    """Orthonormal basis of ``sum_j K(A, v_j)`` by block Arnoldi.

    A candidate direction is kept when its component orthogonal to the
    current basis exceeds ``tol`` times its own norm, with two passes of
    Gram-Schmidt. Working with normalized vectors keeps the test independent
    of how fast ``A^k v`` decays.
    """
    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    V = np.asarray(vectors, dtype=complex)
    if V.ndim == 1:
        V = V[:, None]
    Q = np.zeros((d, 0), dtype=complex)

    def absorb(x):
        nonlocal Q
        nx = np.linalg.norm(x)
        if nx == 0:
            return None
        y = x / nx
        for _ in range(2):
            y = y - Q @ (Q.conj().T @ y)
        ny = np.linalg.norm(y)
        if ny <= tol:
            return None
        y = y / ny
        Q = np.column_stack([Q, y])
        return y

    frontier = [q for q in (absorb(V[:, j]) for j in range(V.shape[1])) if q is not None]
    while frontier and Q.shape[1] < d:
        nxt = []
        for q in frontier:
            y = absorb(A @ q)
            if y is not None:
                nxt.append(y)
            if Q.shape[1] == d:
                break
        frontier = nxt
    return Q


def min_poly_degree(A, b, tol: float = ORTHO_TOL) -> int:
    """Degree of the minimal polynomial of ``b`` w.r.t. ``A`` (Krylov dimension)."""
    return krylov_basis(A, b, tol).shape[1]


def _observable_basis(A, idx, tol):
    d = np.asarray(A).shape[0]
    E = np.eye(d, dtype=complex)[:, idx]
    return krylov_basis(np.asarray(A, dtype=complex).conj().T, E, tol)


def annihilator_degree(A, b, omega, tol: float = ORTHO_TOL) -> int:
    """Degree of the minimal annihilator of ``(S_omega, A, b)`` from the matrices.

    Equals ``rank(O K)`` with ``O`` the stacked ``S_omega A^m`` rows and ``K``
    the Krylov matrix of ``b``, i.e. the rank of the noise-free Hankel
    matrix. Computed via principal angles between the observable subspace
    and the Krylov subspace, which avoids raw powers of ``A``.
    """
    A = np.asarray(A, dtype=complex)
    _, idx = _omega0(omega, A.shape[0])
    Qk = krylov_basis(A, b, tol)
    if Qk.shape[1] == 0:
        return 0
    Qo = _observable_basis(A, idx, tol)
    if Qo.shape[1] == 0:
        return 0
    s = np.linalg.svd(Qo.conj().T @ Qk, compute_uv=False)
    return int(np.count_nonzero(s > tol))


def annihilator_degree_from_series(series: ObservedSeries, d: int, eps_rel: float = 1e-8, policy: str = "quot") -> int:
    """Data route: chosen rank of ``H_{omega, M-d, d+1}``."""
    if series.M < 2 * d:
        raise ValueError(f"need at least 2d = {2 * d} samples, got {series.M}")
    est = estimate_rank(build_hankel(series, d), eps_rel, policy)
    return est.chosen


def local_min_poly_degree(spec: JordanSpec, b, s: int, tol: float = ORTHO_TOL) -> int:
    """``deg q_{b_s}``: nilpotency index of ``N_s`` on ``(U^{-1} b)_s``."""
    sl = spec.slices()[s]
    coords = np.linalg.solve(spec.U, np.asarray(b, dtype=complex))
    # relative to the whole coordinate vector: a component that is zero up to
    # rounding must not count
    scale = np.linalg.norm(coords)
    x = coords[sl]
    N = spec.nilpotent(s)
    k = 0
    while np.linalg.norm(x) > tol * scale and scale > 0:
        x = N @ x
        k += 1
    return k


def recoverable_set_jordan(spec: JordanSpec, v, omega, vector_kind: str = "b", tol: float = ORTHO_TOL) -> RecoverabilityReport:
    """Exact prediction from a Jordan specification.

    ``r_s`` is one plus the largest ``k`` for which some observed row of
    ``U N_s^k (U^{-1} v)_s`` is nonzero; ``lambda_s`` is recoverable iff
    ``r_s >= 1``.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape != (spec.dim,):
        raise ValueError(f"vector must have length {spec.dim}")
    om, _ = _omega0(omega, spec.dim)
    records = []
    for s, lam in enumerate(spec.eigenvalues):
        r_s = 0
        for i in om:
            nz = np.flatnonzero(local_moments(spec, v, i, s, tol))
            if nz.size:
                r_s = max(r_s, int(nz[-1]) + 1)
        records.append(EigenRecord(lam, r_s >= 1, r_s))
    total = sum(rec.local_degree for rec in records)
    return RecoverabilityReport(tuple(records), total, om, v, vector_kind, "jordan-exact")


def cluster_eigenvalues(z, tol: float = CLUSTER_TOL):
    """Label eigenvalues so that values within ``tol`` share a label."""
    z = np.asarray(z)
    labels = -np.ones(z.size, dtype=int)
    n = 0
    for i in range(z.size):
        if labels[i] < 0:
            labels[(labels < 0) & (np.abs(z - z[i]) <= tol)] = n
            n += 1
    return labels, n


def recoverable_set_numeric(
    A, v, omega, vector_kind: str = "b", tol: float = ORTHO_TOL, cluster_tol: float = CLUSTER_TOL
) -> RecoverabilityReport:
    """Prediction for a diagonalizable matrix via spectral projectors.

    ``lambda_s`` is recoverable iff some observed row of ``P(lambda_s; A)`` is
    not orthogonal to the Krylov space of ``(A, v)``. If the eigenvector
    matrix is too ill-conditioned the degree is taken from the data-route
    rank instead and no per-eigenvalue flags are given.
    """
    A = np.asarray(A, dtype=complex)
    v = np.asarray(v, dtype=complex)
    d = A.shape[0]
    om, idx = _omega0(omega, d)
    lam, V = np.linalg.eig(A)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > EIGVEC_COND_MAX:
        log.warning("eigenvector condition %.2e too large; using rank-only fallback", cond)
        total = annihilator_degree(A, v, om, tol)
        return RecoverabilityReport(
            (), total, om, v, vector_kind, "data-driven", ("eigenvector matrix ill-conditioned",)
        )
    W = np.linalg.inv(V)
    Qk = krylov_basis(A, v, tol)
    labels, n = cluster_eigenvalues(lam, cluster_tol)
    records = []
    for g in range(n):
        members = np.flatnonzero(labels == g)
        P = V[:, members] @ W[members]
        rows = P[idx]
        hit = False
        if Qk.shape[1]:
            proj = np.linalg.norm(rows @ Qk, axis=1)
            hit = bool(np.any(proj > tol * np.maximum(np.linalg.norm(rows, axis=1), 1e-300)))
        records.append(EigenRecord(complex(lam[members].mean()), hit, int(hit)))
    total = sum(rec.local_degree for rec in records)
    return RecoverabilityReport(tuple(records), total, om, v, vector_kind, "numeric-diagonalizable")


def effective_vector(sys: AffineSystem, dt: float | None = None) -> np.ndarray:
    """Initial state of the differenced (homogeneous) series.

    Discrete: ``w = (A - I) b + c``. Continuous with step ``dt``:
    ``w = (e^{dt A} - I) b + g(dt; A) c``.
    """
    eye = np.eye(sys.dim, dtype=complex)
    if dt is None:
        return (sys.A - eye) @ sys.b + sys.c
    E = expm(dt * sys.A)
    return (E - eye) @ sys.b + g_matrix(dt, sys.A, E) @ sys.c


def penthouse(spec: JordanSpec) -> PenthouseFamily:
    """Cyclic vectors of the conjugated nilpotent blocks: the last index of each block."""
    indices, projections = [], []
    d = spec.dim
    for s, sl in enumerate(spec.slices()):
        ends = np.cumsum(spec.blocks[s]) - 1 + sl.start
        idx = tuple(int(k) for k in ends)
        P = np.zeros((d, d))
        P[idx, idx] = 1.0
        indices.append(idx)
        projections.append(P)
    return PenthouseFamily(tuple(indices), tuple(projections))


@dataclass(frozen=True)
class UniversalityCertificate:
    universal: bool
    krylov_rank: int
    penthouse_ranks: tuple
    penthouse_needed: tuple
    agree: bool

    def as_dict(self) -> dict:
        return {
            "universal": self.universal,
            "krylov_rank": self.krylov_rank,
            "penthouse_ranks": list(self.penthouse_ranks),
            "penthouse_needed": list(self.penthouse_needed),
            "criteria_agree": self.agree,
        }


def is_universal(spec: JordanSpec, omega, tol: float = ORTHO_TOL) -> UniversalityCertificate:
    """Check both universality criteria.

    (a) the Krylov spaces of ``A^*`` on the observed unit vectors fill the
    space; (b) for each eigenvalue the vectors ``P_s U^* e_i`` span the range
    of the penthouse projection ``P_s``. The two must agree; a mismatch is
    logged and reported, and ``universal`` requires both.
    """
    d = spec.dim
    om, idx = _omega0(omega, d)
    A = spec.matrix()
    krank = _observable_basis(A, idx, tol).shape[1]
    fam = penthouse(spec)
    Ustar = spec.U.conj().T
    ranks, needed = [], []
    for cyc in fam.indices:
        block = Ustar[np.ix_(cyc, idx)]
        sv = np.linalg.svd(block, compute_uv=False)
        ranks.append(int(np.count_nonzero(sv > tol * np.linalg.norm(Ustar[:, idx], 2))))
        needed.append(len(cyc))
    crit_a = krank == d
    crit_b = all(r == n for r, n in zip(ranks, needed))
    if crit_a != crit_b:
        log.warning("universality criteria disagree (krylov=%s, penthouse=%s)", crit_a, crit_b)
    return UniversalityCertificate(crit_a and crit_b, krank, tuple(ranks), tuple(needed), crit_a == crit_b)
