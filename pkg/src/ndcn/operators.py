"""Diffusion operators applied by the models.

Two operators are supported: the symmetric normalized graph Laplacian
``D^{-1/2} (D - A) D^{-1/2}`` and the tunable diffusion operator
``Dt^{-1/2} (alpha*I + (1-alpha)*A) Dt^{-1/2}`` with ``Dt = alpha*I +
(1-alpha)*D``, which interpolates between pure self-retention (alpha=1)
and pure neighbor averaging (alpha=0). Storage is coordinate-sparse,
materialized as CSR for fast products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateInputError
from .graphgen import Graph

__all__ = ["DiffOp", "normalized_laplacian", "tunable_diffusion", "apply"]


@dataclass(frozen=True, eq=False)
class DiffOp:
    """Immutable symmetric n x n sparse operator."""

    n: int
    mat: sp.csr_matrix

    def toarray(self) -> np.ndarray:
        return self.mat.toarray()


def _build(n: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray) -> DiffOp:
    if vals.size and not np.all(np.isfinite(vals)):
        raise DegenerateInputError("operator entries must be finite")
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return DiffOp(n=n, mat=mat)


def normalized_laplacian(g: Graph) -> DiffOp:
    """Symmetric normalized Laplacian; rows and columns of isolated nodes
    are all-zero (the 0/0 entries are defined as 0)."""
    d = g.degree.astype(float)
    dinv_sqrt = np.zeros(g.n)
    nz = d > 0
    dinv_sqrt[nz] = 1.0 / np.sqrt(d[nz])
    diag_idx = np.flatnonzero(nz).astype(np.int64)
    rows = [diag_idx]
    cols = [diag_idx]
    vals = [np.ones(diag_idx.shape[0])]
    if g.num_edges:
        i, j = g.edges[:, 0], g.edges[:, 1]
        off = -dinv_sqrt[i] * dinv_sqrt[j]
        rows += [i, j]
        cols += [j, i]
        vals += [off, off]
    return _build(g.n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def tunable_diffusion(g: Graph, alpha: float) -> DiffOp:
    """Degree-renormalized diffusion operator with self-loop weight alpha.

    alpha=1 gives exactly the identity; alpha=0.5 equals the renormalized
    operator (D+I)^{-1/2} (A+I) (D+I)^{-1/2}; alpha=0 averages neighbors only
    and requires every node to have positive degree.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 1.0:
        idx = np.arange(g.n, dtype=np.int64)
        return _build(g.n, idx, idx, np.ones(g.n))
    dt = alpha + (1.0 - alpha) * g.degree.astype(float)
    if np.any(dt == 0.0):
        raise DegenerateInputError(
            "alpha=0 with an isolated node makes the normalizer singular"
        )
    dt_inv_sqrt = 1.0 / np.sqrt(dt)
    idx = np.arange(g.n, dtype=np.int64)
    rows = [idx]
    cols = [idx]
    vals = [alpha * dt_inv_sqrt * dt_inv_sqrt]
    if g.num_edges:
        i, j = g.edges[:, 0], g.edges[:, 1]
        off = (1.0 - alpha) * dt_inv_sqrt[i] * dt_inv_sqrt[j]
        rows += [i, j]
        cols += [j, i]
        vals += [off, off]
    return _build(g.n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def apply(op: DiffOp, x: np.ndarray) -> np.ndarray:
    """Sparse-dense product op @ x."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != op.n:
        raise ValueError(f"state must be ({op.n}, d), got {x.shape}")
    return op.mat @ x
