"""Seeded example graphs and the dynamical operators derived from them."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .systems import AffineSystem

__all__ = [
    "WeightedDigraph",
    "GraphOperator",
    "random_digraph",
    "ring_graph",
    "knn_sphere_graph",
    "transition_matrix",
    "diffusion_operator",
    "laplacian",
    "random_walk_system",
    "ring_transition_eigenvalues",
    "read_edge_list",
    "write_edge_list",
]


@dataclass(frozen=True)
class WeightedDigraph:
    """Dense nonnegative adjacency; ``W[i, j]`` is the weight of edge i -> j."""

    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError(f"adjacency must be square, got {W.shape}")
        if np.any(W < 0):
            raise ValueError("edge weights must be nonnegative")
        object.__setattr__(self, "W", W)

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def undirected(self) -> bool:
        return np.array_equal(self.W, self.W.T)


@dataclass(frozen=True)
class GraphOperator:
    kind: str  # "diffusion" | "laplacian" | "transition"
    matrix: np.ndarray


def random_digraph(d: int, m_edges: int, seed: int) -> WeightedDigraph:
    """``m_edges`` distinct off-diagonal unit edges, drawn without replacement."""
    if d < 1 or m_edges < 1:
        raise ValueError("d and m_edges must be positive")
    slots = d * (d - 1)
    if m_edges > slots:
        raise ValueError(f"at most {slots} off-diagonal edges fit in a {d}-vertex digraph")
    rng = np.random.default_rng(seed)
    pick = rng.choice(slots, size=m_edges, replace=False)
    src, off = np.divmod(pick, d - 1)
    dst = off + (off >= src)  # skip the diagonal slot
    W = np.zeros((d, d))
    W[src, dst] = 1.0
    return WeightedDigraph(W)


def ring_graph(d: int, k_neighbors: int) -> WeightedDigraph:
    """Circulant ring: each vertex linked to ``k/2`` neighbours on each side."""
    if k_neighbors < 2 or k_neighbors % 2:
        raise ValueError("k_neighbors must be a positive even integer")
    if k_neighbors >= d:
        raise ValueError("k_neighbors must be smaller than d")
    W = np.zeros((d, d))
    i = np.arange(d)
    for j in range(1, k_neighbors // 2 + 1):
        W[i, (i + j) % d] = 1.0
        W[i, (i - j) % d] = 1.0
    return WeightedDigraph(W)


def knn_sphere_graph(d: int, k: int, seed: int) -> WeightedDigraph:
    """Symmetrized kNN graph on ``d`` uniform points of the unit 2-sphere."""
    if not 0 < k < d:
        raise ValueError("need 0 < k < d")
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((d, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    D = cdist(pts, pts)
    np.fill_diagonal(D, np.inf)
    nn = np.argsort(D, axis=1, kind="stable")[:, :k]
    W = np.zeros((d, d))
    W[np.repeat(np.arange(d), k), nn.ravel()] = 1.0
    return WeightedDigraph(np.maximum(W, W.T))


def _pinv_diag(x):
    out = np.zeros_like(x)
    nz = x != 0
    out[nz] = 1.0 / x[nz]
    return out


def transition_matrix(g: WeightedDigraph) -> GraphOperator:
    """Row-stochastic ``P = D^+ W``; isolated vertices get a self-loop row."""
    deg = g.W.sum(axis=1)
    P = _pinv_diag(deg)[:, None] * g.W
    iso = deg == 0
    P[iso, iso] = 1.0
    return GraphOperator("transition", P)


def diffusion_operator(g: WeightedDigraph) -> GraphOperator:
    """``D^{+1/2} W D^{+1/2}`` with zero degrees mapped to zero."""
    s = np.sqrt(_pinv_diag(g.W.sum(axis=1)))
    return GraphOperator("diffusion", s[:, None] * g.W * s[None, :])


def laplacian(g: WeightedDigraph) -> GraphOperator:
    """Normalized Laplacian ``I - D^{+1/2} W D^{+1/2}``."""
    return GraphOperator("laplacian", np.eye(g.d) - diffusion_operator(g).matrix)


def random_walk_system(g: WeightedDigraph, x0) -> AffineSystem:
    """Homogeneous system ``x_{t+1} = P^T x_t`` started at a distribution."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (g.d,):
        raise ValueError(f"x0 must have length {g.d}")
    if np.any(x0 < 0) or abs(x0.sum() - 1.0) > 1e-12:
        raise ValueError("x0 must be a probability vector")
    P = transition_matrix(g).matrix
    return AffineSystem(P.T, x0, np.zeros(g.d))


def ring_transition_eigenvalues(d: int, k_neighbors: int) -> np.ndarray:
    """Eigenvalues of the ring transition matrix from the circulant formula."""
    m = np.arange(d)[:, None]
    j = np.arange(1, k_neighbors // 2 + 1)[None, :]
    return (2.0 * np.cos(2 * np.pi * j * m / d)).sum(axis=1) / k_neighbors


def write_edge_list(g: WeightedDigraph, path) -> None:
    src, dst = np.nonzero(g.W)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "weight"])
        for i, j in zip(src, dst):
            w.writerow([i + 1, j + 1, repr(float(g.W[i, j]))])


def read_edge_list(path, d: int | None = None) -> WeightedDigraph:
    """Load an edge-list CSV with header ``src,dst,weight`` (1-based)."""
    rows = []
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["src", "dst", "weight"]:
            raise ValueError(f"{path}: expected header src,dst,weight")
        for rec in reader:
            rows.append((int(rec["src"]), int(rec["dst"]), float(rec["weight"])))
    n = max([max(s, t) for s, t, _ in rows], default=0)
    d = n if d is None else d
    if n > d or any(min(s, t) < 1 for s, t, _ in rows):
        raise ValueError(f"{path}: vertex index out of range 1..{d}")
    W = np.zeros((d, d))
    for s, t, w in rows:
        W[s - 1, t - 1] += w
    return WeightedDigraph(W)
