"""Affine systems, Jordan specifications, simulation and observation.

Everything is stored as complex128, even for real inputs. Observation index
sets ``omega`` are 1-based and kept sorted, matching the CSV headers
(``i1, i4, ...``) used by the command line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

__all__ = [
    "AffineSystem",
    "JordanSpec",
    "Trajectory",
    "ObservedSeries",
    "nilpotent_block",
    "build_from_jordan",
    "simulate_discrete",
    "simulate_continuous",
    "observe",
    "difference_transform",
    "expm",
    "g_matrix",
]

INVERTIBLE_REL = 1e-10
U_COND_REL = 1e-12


def _cvec(x, name="vector"):
    v = np.asarray(x, dtype=complex)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class AffineSystem:
    """Discrete recursion ``x_{t+1} = A x_t + c`` started at ``x_0 = b``.

    The same triple also describes the continuous system ``x' = A x + c``.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        b = _cvec(self.b, "b")
        c = _cvec(self.c, "c")
        if b.size != A.shape[0] or c.size != A.shape[0]:
            raise ValueError(
                f"dimension mismatch: A is {A.shape}, b has {b.size}, c has {c.size}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def homogeneous(self) -> bool:
        return not np.any(self.c)


def nilpotent_block(k: int) -> np.ndarray:
    """Cyclic nilpotent ``k x k`` block with ones on the subdiagonal."""
    return np.eye(k, k, -1, dtype=complex)


@dataclass(frozen=True)
class JordanSpec:
    """Distinct eigenvalues, Jordan block sizes per eigenvalue, similarity ``U``.

    ``blocks[s]`` lists the block sizes of ``eigenvalues[s]`` in non-increasing
    order. The assembled matrix is ``A = U J U^{-1}`` with
    ``J_s = lambda_s I + N_s`` and lower-shift nilpotent blocks.
    """

    eigenvalues: tuple
    blocks: tuple
    U: np.ndarray

    def __post_init__(self):
        lam = tuple(complex(z) for z in self.eigenvalues)
        blocks = tuple(tuple(int(k) for k in bl) for bl in self.blocks)
        if len(lam) != len(blocks):
            raise ValueError("one block list is required per eigenvalue")
        if not lam:
            raise ValueError("at least one eigenvalue is required")
        for s, bl in enumerate(blocks):
            if not bl or min(bl) < 1:
                raise ValueError(f"block sizes for eigenvalue {s} must be positive")
            if list(bl) != sorted(bl, reverse=True):
                raise ValueError(f"block sizes for eigenvalue {s} must be non-increasing")
        for i in range(len(lam)):
            for j in range(i):
                if lam[i] == lam[j]:
                    raise ValueError(f"eigenvalue {lam[i]} is repeated")
        d = sum(sum(bl) for bl in blocks)
        U = np.asarray(self.U, dtype=complex)
        if U.shape != (d, d):
            raise ValueError(f"U must be {d}x{d}, got {U.shape}")
        sv = np.linalg.svd(U, compute_uv=False)
        if sv[-1] <= U_COND_REL * sv[0]:
            raise ValueError(f"U is numerically singular (cond ~ {sv[0] / max(sv[-1], 1e-300):.2e})")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "U", U)

    @property
    def dim(self) -> int:
        return self.U.shape[0]

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def slices(self) -> list:
        """Index range of each eigenvalue's generalized eigenspace in ``J``."""
        out, start = [], 0
        for bl in self.blocks:
            h = sum(bl)
            out.append(slice(start, start + h))
            start += h
        return out

    def nilpotent(self, s: int) -> np.ndarray:
        return sla.block_diag(*[nilpotent_block(k) for k in self.blocks[s]]).astype(complex)

    def jordan_matrix(self) -> np.ndarray:
        parts = [
            lam * np.eye(sum(bl), dtype=complex) + self.nilpotent(s)
            for s, (lam, bl) in enumerate(zip(self.eigenvalues, self.blocks))
        ]
        return sla.block_diag(*parts).astype(complex)

    def matrix(self) -> np.ndarray:
        return self.U @ self.jordan_matrix() @ np.linalg.inv(self.U)


@dataclass(frozen=True)
class Trajectory:
    """States ``x_0 .. x_{M-1}``; ``dt`` is None for discrete time."""

    states: np.ndarray
    dt: float | None = None

    def __post_init__(self):
        X = np.asarray(self.states, dtype=complex)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("states must be a non-empty (M, d) array")
        object.__setattr__(self, "states", X)

    @property
    def M(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class ObservedSeries:
    """Samples ``S_omega x_t``: one row per time step, one column per index.

    ``omega`` holds sorted, distinct, 1-based coordinate indices.
    """

    omega: tuple
    samples: np.ndarray
    dt: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        om = tuple(int(i) for i in self.omega)
        if not om:
            raise ValueError("omega must be non-empty")
        if len(set(om)) != len(om):
            raise ValueError(f"omega has repeated indices: {om}")
        if min(om) < 1:
            raise ValueError(f"omega indices are 1-based, got {om}")
        Y = np.asarray(self.samples, dtype=complex)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.shape[1] != len(om):
            raise ValueError(f"samples must have {len(om)} columns, got shape {Y.shape}")
        order = np.argsort(om, kind="stable")
        object.__setattr__(self, "omega", tuple(om[k] for k in order))
        object.__setattr__(self, "samples", Y[:, order])

    @property
    def M(self) -> int:
        return self.samples.shape[0]

    @property
    def continuous(self) -> bool:
        return self.dt is not None


def build_from_jordan(spec: JordanSpec, b, c=None) -> AffineSystem:
    """Assemble ``A = U J U^{-1}`` and attach the initial state and drive."""
    b = _cvec(b, "b")
    c = np.zeros(spec.dim, dtype=complex) if c is None else _cvec(c, "c")
    if b.size != spec.dim or c.size != spec.dim:
        raise ValueError(f"b and c must have length {spec.dim}")
    return AffineSystem(spec.matrix(), b, c)


def simulate_discrete(sys: AffineSystem, M: int) -> Trajectory:
    """Iterate ``x_{t+1} = A x_t + c`` for ``M`` samples.

    The recursion runs in extended precision (``np.clongdouble``) and each
    state is rounded to double once, so rounding does not accumulate along
    the trajectory. Multiple eigenvalues make the estimators sensitive to
    data errors at the 1e-15 level, which is why this matters. Platforms
    where ``longdouble`` is plain double fall back to ordinary iteration.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    A = sys.A.astype(np.clongdouble)
    c = sys.c.astype(np.clongdouble)
    x = sys.b.astype(np.clongdouble)
    X = np.empty((M, sys.dim), dtype=complex)
    X[0] = sys.b
    for t in range(1, M):
        x = A @ x + c
        X[t] = x
    return Trajectory(X)


def expm(A) -> np.ndarray:
    """Matrix exponential (Pade scaling and squaring), checked for finiteness."""
    E = sla.expm(np.asarray(A, dtype=complex))
    if not np.all(np.isfinite(E)):
        raise FloatingPointError("matrix exponential produced non-finite entries")
    return E


def _invertible(A) -> bool:
    s = np.linalg.svd(A, compute_uv=False)
    return s[0] > 0 and s[-1] > INVERTIBLE_REL * s[0]


def g_matrix(t: float, A, E=None) -> np.ndarray:
    """``g(t; A) = sum_k t^{k+1} / (k+1)! A^k``.

    Uses ``g A = e^{tA} - I`` when ``A`` is invertible. Otherwise ``g`` is read
    off the top-right block of ``exp(t [[A, I], [0, 0]])``, which stays
    accurate for large ``t ||A||`` where the raw power series cancels badly.
    ``E`` may pass a precomputed ``e^{tA}``.
    """
    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    eye = np.eye(d, dtype=complex)
    if t == 0:
        return np.zeros_like(eye)
    if _invertible(A):
        E = expm(t * A) if E is None else E
        # g commutes with A, so g = (E - I) A^{-1} = solve(A^T, (E - I)^T)^T
        return np.linalg.solve(A.T, (E - eye).T).T
    aug = np.zeros((2 * d, 2 * d), dtype=complex)
    aug[:d, :d] = A
    aug[:d, d:] = eye
    return expm(t * aug)[:d, d:]


def simulate_continuous(sys: AffineSystem, dt: float, M: int) -> Trajectory:
    """Sample ``x(l dt) = e^{l dt A} b + g(l dt; A) c`` for ``l = 0 .. M-1``."""
    if M < 1:
        raise ValueError("M must be at least 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    X = np.empty((M, sys.dim), dtype=complex)
    drive = np.any(sys.c)
    for l in range(M):
        E = expm(l * dt * sys.A)
        X[l] = E @ sys.b
        if drive:
            X[l] += g_matrix(l * dt, sys.A, E) @ sys.c
    return Trajectory(X, dt=float(dt))


def observe(traj: Trajectory, omega) -> ObservedSeries:
    """Restrict every state to the (1-based) coordinates in ``omega``."""
    om = sorted(set(int(i) for i in omega))
    if not om:
        raise ValueError("omega must be non-empty")
    if om[0] < 1 or om[-1] > traj.dim:
        raise IndexError(f"omega {om} out of range 1..{traj.dim}")
    idx = [i - 1 for i in om]
    return ObservedSeries(tuple(om), traj.states[:, idx], dt=traj.dt)


def difference_transform(series: ObservedSeries) -> ObservedSeries:
    """``y_t = x_{t+1} - x_t``; turns an affine series into a homogeneous one."""
    if series.M < 2:
        raise ValueError("differencing needs at least 2 samples")
    Y = np.diff(series.samples, axis=0)
    return ObservedSeries(series.omega, Y, dt=series.dt, meta=dict(series.meta, differenced=True))
