"""Sparse Cholesky factorization ``P A P^T = L L^T`` and triangular solves.

The numeric phase is the up-looking algorithm: row k of L comes from a sparse
triangular solve whose pattern is the reach of row k of A in the elimination
tree. Only the lower triangle of A is read.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from ._backend import kernels
from .graph import CSRMatrix


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    def __init__(self, pivot: int):
        self.pivot = pivot
        super().__init__(f"matrix is not positive definite (pivot {pivot})")


# ---------------------------------------------------------------------------
# orderings

def rcm_ordering(A: CSRMatrix) -> np.ndarray:
    """Reverse Cuthill-McKee ordering of the symmetric pattern of ``A``."""
    perm = csgraph.reverse_cuthill_mckee(A.to_scipy(), symmetric_mode=True)
    return np.asarray(perm, np.int64)


def nested_dissection_ordering(A: CSRMatrix, leaf_size: int = 64) -> np.ndarray:
    """Level-structure nested dissection of the symmetric pattern of ``A``.

    Each piece is split at the median level of a BFS from a pseudo-peripheral
    vertex. The part of that level touching the next level is the separator and
    is numbered after both halves. Pieces of at most ``leaf_size`` vertices
    keep their relative order.
    """
    G = A.to_scipy()
    G = sp.csr_matrix((np.ones(G.nnz), G.indices, G.indptr), shape=G.shape)
    G.setdiag(0)
    G.eliminate_zeros()
    order: list[np.ndarray] = []
    # explicit stack of (vertex subset, separator-to-emit-after) keeps recursion shallow
    stack: list[tuple[str, np.ndarray]] = [("split", np.arange(G.shape[0]))]
    while stack:
        action, verts = stack.pop()
        if action == "emit" or verts.shape[0] <= leaf_size:
            order.append(verts)
            continue
        sub = G[verts][:, verts]
        ncomp, labels = csgraph.connected_components(sub, directed=False)
        if ncomp > 1:
            for c in range(ncomp - 1, -1, -1):
                stack.append(("split", verts[labels == c]))
            continue
        levels = _bfs_levels(sub, _pseudo_peripheral(sub))
        nlev = int(levels.max()) + 1
        if nlev < 3:
            order.append(verts)
            continue
        cum = np.cumsum(np.bincount(levels, minlength=nlev))
        mid = int(np.searchsorted(cum, verts.shape[0] / 2))
        mid = min(max(mid, 1), nlev - 2)
        in_mid = levels == mid
        nxt = (levels == mid + 1).astype(float)
        touches = (sub @ nxt) > 0
        sep = in_mid & touches
        part_a = (levels < mid) | (in_mid & ~touches)
        part_b = levels > mid
        stack.append(("emit", verts[sep]))
        stack.append(("split", verts[part_b]))
        stack.append(("split", verts[part_a]))
    return np.concatenate(order).astype(np.int64) if order else np.empty(0, np.int64)


def _bfs_levels(G, start: int) -> np.ndarray:
    dist = csgraph.shortest_path(G, method="D", unweighted=True, indices=start)
    return dist.astype(np.int64)


def _pseudo_peripheral(G) -> int:
    start, ecc = 0, -1
    for _ in range(8):
        lv = _bfs_levels(G, start)
        far = int(lv.max())
        if far <= ecc:
            break
        ecc = far
        cand = np.flatnonzero(lv == far)
        degs = np.diff(G.indptr)[cand]
        start = int(cand[np.argmin(degs)])
    return start


ORDERINGS = {
    "natural": lambda A: np.arange(A.n_rows, dtype=np.int64),
    "rcm": rcm_ordering,
    "nd": nested_dissection_ordering,
}


def permute_symmetric(A: CSRMatrix, perm: np.ndarray) -> CSRMatrix:
    """``P A P^T`` where row k of the result is row ``perm[k]`` of ``A``."""
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.shape[0])
    coo = A.to_scipy().tocoo()
    return CSRMatrix.from_coo(inv[coo.row], inv[coo.col], coo.data, A.shape)


# ---------------------------------------------------------------------------
# factorization

@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower factor in compressed-column form plus the symmetric permutation.

    ``colptr``/``rowidx``/``values`` hold L column by column with the diagonal
    first. ``permutation[k]`` is the original index of pivot k.
    """

    colptr: np.ndarray
    rowidx: np.ndarray
    values: np.ndarray
    permutation: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.colptr.shape[0] - 1

    @property
    def nnz(self) -> int:
        return int(self.colptr[-1])

    @property
    def lower(self) -> CSRMatrix:
        """The factor as a CSR lower-triangular matrix."""
        csc = sp.csc_matrix((self.values, self.rowidx, self.colptr), shape=(self.n, self.n))
        return CSRMatrix.from_scipy(csc.tocsr())

    def diagonal(self) -> np.ndarray:
        return self.values[self.colptr[:-1]]

    def solve(self, b) -> np.ndarray:
        return cholesky_solve(self, b)


def symbolic(A: CSRMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Elimination tree and column pointers of the factor of ``A``."""
    n = A.n_rows
    parent = kernels.etree(A.row_ptr, A.col_idx, n)
    counts = kernels.colcounts(A.row_ptr, A.col_idx, parent, n)
    colptr = np.zeros(n + 1, np.int64)
    np.cumsum(counts, out=colptr[1:])
    return parent, colptr


def sparse_cholesky(A: CSRMatrix, ordering: str | None = None) -> CholeskyFactor:
    """Factor a symmetric positive definite matrix.

    ``ordering`` is one of ``natural``, ``rcm``, ``nd``. The default is
    ``natural`` up to 1000 rows and nested dissection above.
    """
    if A.n_rows != A.n_cols:
        raise ValueError("matrix must be square")
    n = A.n_rows
    if ordering is None:
        ordering = "natural" if n <= 1000 else "nd"
    try:
        order_fn = ORDERINGS[ordering]
    except KeyError:
        raise ValueError(f"unknown ordering {ordering!r}") from None
    perm = None
    B = A
    if ordering != "natural":
        perm = order_fn(A)
        B = permute_symmetric(A, perm)
    parent, colptr = symbolic(B)
    rowidx = np.zeros(colptr[-1], np.int64)
    values = np.zeros(colptr[-1])
    status = kernels.numeric(B.row_ptr, B.col_idx, B.values, parent, colptr, rowidx, values)
    if status >= 0:
        raise NotPositiveDefiniteError(int(perm[status]) if perm is not None else int(status))
    for a in (colptr, rowidx, values):
        a.flags.writeable = False
    return CholeskyFactor(colptr, rowidx, values, perm)


def cholesky_solve(factor: CholeskyFactor, b) -> np.ndarray:
    """Solve ``A x = b`` for a vector or an (n, m) block of right-hand sides."""
    b = np.asarray(b, dtype=np.float64)
    vector = b.ndim == 1
    B = b[:, None] if vector else b
    if B.ndim != 2 or B.shape[0] != factor.n:
        raise ValueError(f"right-hand side of shape {b.shape} does not match n={factor.n}")
    perm = factor.permutation
    Y = np.array(B[perm] if perm is not None else B, dtype=np.float64, order="C")
    kernels.solve(factor.colptr, factor.rowidx, factor.values, Y)
    if perm is not None:
        X = np.empty_like(Y)
        X[perm] = Y
        Y = X
    return Y[:, 0] if vector else Y
