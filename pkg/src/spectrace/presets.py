"""Ready-made systems used by the bundled experiment configurations."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .systems import JordanSpec

__all__ = ["example1", "circulant_spec", "circulant_matrix"]


def example1():
    """Eight-dimensional affine test system with Jordan blocks.

    Eigenvalues 0.3 (one 3-block), 0.5 (one 2-block), 0.6 and -0.2 (two
    1-blocks); ``b = [8, 7, ..., 1]``, ``c = 1``.

    Returns
    -------
    spec : JordanSpec
    b, c : ndarray
    """
    U = sla.block_diag(
        np.eye(3),
        sla.toeplitz([1, 0, 0], [1, 1, 1]),
        sla.hankel([1, 2], [2, 1]),
    )
    spec = JordanSpec((0.3, 0.5, 0.6, -0.2), ((3,), (2,), (1,), (1, 1)), U)
    return spec, np.arange(8, 0, -1.0), np.ones(8)


def circulant_matrix(first_col) -> np.ndarray:
    """``C[i, j] = c[(i - j) mod d]``."""
    return sla.circulant(np.asarray(first_col))


def circulant_spec(first_col, tol: float = 1e-12) -> JordanSpec:
    """Jordan spec of a circulant matrix with DFT eigenvectors.

    Equal eigenvalues (within ``tol``) are grouped, each contributing a list
    of 1x1 blocks, and the DFT columns are reordered to match.
    """
    c = np.asarray(first_col, dtype=complex)
    d = c.size
    idx = np.arange(d)
    F = np.exp(2j * np.pi * np.outer(idx, idx) / d) / np.sqrt(d)
    lam = F.conj() @ c * np.sqrt(d)  # lambda_m = sum_k c_k w^{-km}
    groups = []
    for m in range(d):
        for g in groups:
            if abs(lam[g[0]] - lam[m]) <= tol * max(1.0, abs(lam[m])):
                g.append(m)
                break
        else:
            groups.append([m])
    order = [m for g in groups for m in g]
    eig = tuple(complex(lam[g].mean()) for g in groups)
    blocks = tuple((1,) * len(g) for g in groups)
    return JordanSpec(eig, blocks, F[:, order])
