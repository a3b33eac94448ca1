"""CSR sparse matrices and the graph operators built from mesh edges.

For an edge set over n vertices:

    W   adjacency (symmetric 0/1, zero diagonal)
    d   degrees, row sums of W
    W~  D^{-1} W, row-stochastic (isolated vertices get an identity row)
    L   D - W
    L~  I - W~
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._backend import kernels
from .mesh import EdgeSet, extract_edges


def _ro(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    if a.flags.writeable:
        a = a.copy()
        a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CSRMatrix:
    """Immutable compressed sparse row matrix.

    Column indices are strictly increasing within each row and no explicit
    zeros are stored. Build through :meth:`from_coo` unless the arrays are
    already canonical.
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", _ro(self.row_ptr, np.int64))
        object.__setattr__(self, "col_idx", _ro(self.col_idx, np.int64))
        object.__setattr__(self, "values", _ro(self.values, np.float64))
        rp, ci = self.row_ptr, self.col_idx
        if rp.shape != (self.n_rows + 1,) or rp[0] != 0 or rp[-1] != ci.shape[0]:
            raise ValueError("row_ptr inconsistent with shape or nnz")
        if ci.shape != self.values.shape:
            raise ValueError("col_idx and values differ in length")
        if np.any(np.diff(rp) < 0):
            raise ValueError("row_ptr must be nondecreasing")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing inside rows: a drop is only allowed at row starts
            drops = np.flatnonzero(np.diff(ci) <= 0) + 1
            if not np.isin(drops, rp[1:-1]).all():
                raise ValueError("column indices must increase strictly within rows")
            if np.any(self.values == 0.0):
                raise ValueError("explicit zeros are not stored")

    @classmethod
    def from_coo(cls, rows, cols, vals, shape) -> "CSRMatrix":
        """Sum duplicates, drop zeros, sort columns."""
        a = sp.coo_matrix((np.asarray(vals, float), (np.asarray(rows), np.asarray(cols))),
                          shape=shape).tocsr()
        return cls.from_scipy(a)

    @classmethod
    def from_scipy(cls, a) -> "CSRMatrix":
        a = sp.csr_matrix(a, copy=True)
        a.sum_duplicates()
        a.eliminate_zeros()
        a.sort_indices()
        return cls(a.shape[0], a.shape[1], a.indptr, a.indices, a.data)

    @classmethod
    def from_dense(cls, a) -> "CSRMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(a, float)))

    @classmethod
    def identity(cls, n: int) -> "CSRMatrix":
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    @property
    def nnz(self) -> int:
        return int(self.col_idx.shape[0])

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.col_idx, self.row_ptr), shape=self.shape)

    def toarray(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        s = slice(self.row_ptr[i], self.row_ptr[i + 1])
        return self.col_idx[s], self.values[s]

    def row_sums(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.row_ptr))
        return np.bincount(rows, weights=self.values, minlength=self.n_rows)

    def transpose(self) -> "CSRMatrix":
        return CSRMatrix.from_scipy(self.to_scipy().T)

    def is_symmetric(self) -> bool:
        t = self.transpose()
        return (self.shape == t.shape and np.array_equal(self.row_ptr, t.row_ptr)
                and np.array_equal(self.col_idx, t.col_idx)
                and np.array_equal(self.values, t.values))

    def add_scaled_identity(self, alpha: float, scale: float = 1.0) -> "CSRMatrix":
        """Return ``alpha * I + scale * self``."""
        n = self.n_rows
        coo = self.to_scipy().tocoo()
        rows = np.concatenate([coo.row, np.arange(n)])
        cols = np.concatenate([coo.col, np.arange(n)])
        vals = np.concatenate([scale * coo.data, np.full(n, float(alpha))])
        return CSRMatrix.from_coo(rows, cols, vals, self.shape)

    def __matmul__(self, X):
        return spmm(self, X)


def spmm(A: CSRMatrix, X) -> np.ndarray:
    """Sparse times dense, rows accumulated in column-index order.

    A 1-D ``X`` is treated as a single column and a 1-D result returned.
    """
    X = np.asarray(X, dtype=np.float64)
    vector = X.ndim == 1
    if vector:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != A.n_cols:
        raise ValueError(f"dimension mismatch: {A.shape} @ {X.shape}")
    out = kernels.spmm(A.row_ptr, A.col_idx, A.values, np.ascontiguousarray(X))
    return out[:, 0] if vector else out


def adjacency(edges: EdgeSet, n: int | None = None) -> CSRMatrix:
    n = edges.n_vertices if n is None else n
    e = edges.edges
    if e.size and e.max() >= n:
        raise ValueError("edge index out of range")
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    return CSRMatrix.from_coo(rows, cols, np.ones(rows.shape[0]), (n, n))


def degrees(W: CSRMatrix) -> np.ndarray:
    """Stored entries per row, which equals the row sum for a 0/1 matrix."""
    return np.diff(W.row_ptr).astype(np.int64)


def normalized_adjacency(W: CSRMatrix, d: np.ndarray | None = None) -> CSRMatrix:
    d = degrees(W) if d is None else np.asarray(d)
    counts = np.diff(W.row_ptr)
    inv = np.zeros(W.n_rows)
    inv[d > 0] = 1.0 / d[d > 0]
    vals = W.values * np.repeat(inv, counts)
    rows = np.repeat(np.arange(W.n_rows), counts)
    iso = np.flatnonzero(d == 0)
    return CSRMatrix.from_coo(np.concatenate([rows, iso]),
                              np.concatenate([W.col_idx, iso]),
                              np.concatenate([vals, np.ones(iso.shape[0])]), W.shape)


def laplacian(W: CSRMatrix, d: np.ndarray | None = None) -> CSRMatrix:
    d = degrees(W) if d is None else np.asarray(d)
    n = W.n_rows
    rows = np.concatenate([np.repeat(np.arange(n), np.diff(W.row_ptr)), np.arange(n)])
    cols = np.concatenate([W.col_idx, np.arange(n)])
    vals = np.concatenate([-W.values, d.astype(float)])
    return CSRMatrix.from_coo(rows, cols, vals, W.shape)


def normalized_laplacian(W_tilde: CSRMatrix) -> CSRMatrix:
    return W_tilde.add_scaled_identity(1.0, scale=-1.0)


@dataclass(frozen=True, eq=False)
class MeshGraph:
    """All operators of one edge set, computed once."""

    W: CSRMatrix
    d: np.ndarray
    W_tilde: CSRMatrix
    L: CSRMatrix
    L_tilde: CSRMatrix

    @classmethod
    def from_edges(cls, edges: EdgeSet, n: int | None = None) -> "MeshGraph":
        W = adjacency(edges, n)
        d = degrees(W)
        Wt = normalized_adjacency(W, d)
        return cls(W, d, Wt, laplacian(W, d), normalized_laplacian(Wt))

    @classmethod
    def from_mesh(cls, mesh) -> "MeshGraph":
        return cls.from_edges(extract_edges(mesh), mesh.n_vertices)
