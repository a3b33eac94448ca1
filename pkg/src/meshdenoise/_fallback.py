"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Floating-point operations happen in the same order as the compiled code, so
both backends give bit-identical results. Index arrays are int64, values
float64. Sparse inputs are CSR triples ``(indptr, indices, data)``.
"""

import math

import numpy as np


def spmm(indptr, indices, data, X):
    """``A @ X`` accumulating each output row in stored column order."""
    n = indptr.shape[0] - 1
    out = np.zeros((n, X.shape[1]))
    counts = np.diff(indptr)
    if indices.shape[0] == 0:
        return out
    rows = np.repeat(np.arange(n), counts)
    pos = np.arange(indices.shape[0]) - np.repeat(indptr[:-1], counts)
    # one entry per row per pass, so fancy-index accumulation has no collisions
    for t in range(int(counts.max())):
        sel = np.flatnonzero(pos == t)
        out[rows[sel]] += data[sel, None] * X[indices[sel]]
    return out


def etree(indptr, indices, n):
    """Elimination tree of a symmetric matrix given by its lower-triangle rows."""
    ip, ix = indptr.tolist(), indices.tolist()
    parent = [-1] * n
    ancestor = [-1] * n
    for k in range(n):
        for p in range(ip[k], ip[k + 1]):
            i = ix[p]
            while i != -1 and i < k:
                inext = ancestor[i]
                ancestor[i] = k
                if inext == -1:
                    parent[i] = k
                i = inext
    return np.array(parent, np.int64)


def _ereach(ip, ix, k, parent, s, w, n):
    top = n
    w[k] = k
    for p in range(ip[k], ip[k + 1]):
        i = ix[p]
        if i > k:
            continue
        length = 0
        while w[i] != k:
            s[length] = i
            length += 1
            w[i] = k
            i = parent[i]
        while length > 0:
            top -= 1
            length -= 1
            s[top] = s[length]
    return top


def colcounts(indptr, indices, parent, n):
    """Nonzeros per column of the Cholesky factor, diagonal included."""
    ip, ix, par = indptr.tolist(), indices.tolist(), parent.tolist()
    counts = [1] * n
    s = [0] * n
    w = [-1] * n
    for k in range(n):
        top = _ereach(ip, ix, k, par, s, w, n)
        for t in range(top, n):
            counts[s[t]] += 1
    return np.array(counts, np.int64)


def numeric(indptr, indices, data, parent, Lp, Li, Lx):
    """Up-looking Cholesky: fill ``Li``/``Lx`` (CSC, diagonal first per column).

    Returns -1 on success, else the index of the first non-positive pivot.
    """
    n = Lp.shape[0] - 1
    ip, ix, ax = indptr.tolist(), indices.tolist(), data.tolist()
    par = parent.tolist()
    lp = Lp.tolist()
    li = [0] * lp[n]
    lx = [0.0] * lp[n]
    c = lp[:n]
    x = [0.0] * n
    s = [0] * n
    w = [-1] * n
    status = -1
    for k in range(n):
        top = _ereach(ip, ix, k, par, s, w, n)
        x[k] = 0.0
        for p in range(ip[k], ip[k + 1]):
            if ix[p] <= k:
                x[ix[p]] = ax[p]
        d = x[k]
        x[k] = 0.0
        for t in range(top, n):
            i = s[t]
            lki = x[i] / lx[lp[i]]
            x[i] = 0.0
            for p in range(lp[i] + 1, c[i]):
                x[li[p]] -= lx[p] * lki
            d -= lki * lki
            p = c[i]
            c[i] += 1
            li[p] = k
            lx[p] = lki
        if not d > 0.0:
            status = k
            break
        p = c[k]
        c[k] += 1
        li[p] = k
        lx[p] = math.sqrt(d)
    Li[:] = li
    Lx[:] = lx
    return status


def solve(Lp, Li, Lx, B):
    """Overwrite ``B`` (n, m) with ``(L L^T)^{-1} B``."""
    n, m = B.shape
    lp, li, lx = Lp.tolist(), Li.tolist(), Lx.tolist()
    y = B.tolist()
    for j in range(n):
        yj = y[j]
        diag = lx[lp[j]]
        for c in range(m):
            yj[c] /= diag
        for p in range(lp[j] + 1, lp[j + 1]):
            yi = y[li[p]]
            v = lx[p]
            for c in range(m):
                yi[c] -= v * yj[c]
    for j in range(n - 1, -1, -1):
        yj = y[j]
        for p in range(lp[j] + 1, lp[j + 1]):
            yi = y[li[p]]
            v = lx[p]
            for c in range(m):
                yj[c] -= v * yi[c]
        diag = lx[lp[j]]
        for c in range(m):
            yj[c] /= diag
    B[:] = y
