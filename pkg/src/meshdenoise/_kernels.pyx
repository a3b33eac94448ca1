# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: sparse products, elimination tree, up-looking Cholesky.

Mirrors ``_fallback.py`` operation for operation.
"""

import numpy as np
from libc.math cimport sqrt
from libc.stdint cimport int64_t


def spmm(const int64_t[::1] indptr, const int64_t[::1] indices,
         const double[::1] data, const double[:, ::1] X):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t m = X.shape[1]
    out_arr = np.zeros((n, m))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, c
    cdef int64_t p, col
    cdef double v, a0, a1, a2
    with nogil:
        if m == 3:
            # coordinate signals: keep the row accumulators in registers
            for r in range(n):
                a0 = 0.0
                a1 = 0.0
                a2 = 0.0
                for p in range(indptr[r], indptr[r + 1]):
                    v = data[p]
                    col = indices[p]
                    a0 += v * X[col, 0]
                    a1 += v * X[col, 1]
                    a2 += v * X[col, 2]
                out[r, 0] = a0
                out[r, 1] = a1
                out[r, 2] = a2
        else:
            for r in range(n):
                for p in range(indptr[r], indptr[r + 1]):
                    v = data[p]
                    col = indices[p]
                    for c in range(m):
                        out[r, c] += v * X[col, c]
    return out_arr


def etree(const int64_t[::1] indptr, const int64_t[::1] indices, Py_ssize_t n):
    parent_arr = np.full(n, -1, np.int64)
    ancestor_arr = np.full(n, -1, np.int64)
    cdef int64_t[::1] parent = parent_arr
    cdef int64_t[::1] ancestor = ancestor_arr
    cdef int64_t k, p, i, inext
    with nogil:
        for k in range(n):
            for p in range(indptr[k], indptr[k + 1]):
                i = indices[p]
                while i != -1 and i < k:
                    inext = ancestor[i]
                    ancestor[i] = k
                    if inext == -1:
                        parent[i] = k
                    i = inext
    return parent_arr


cdef inline int64_t _ereach(const int64_t[::1] ip, const int64_t[::1] ix, int64_t k,
                            const int64_t[::1] parent, int64_t[::1] s, int64_t[::1] w,
                            int64_t n) noexcept nogil:
    cdef int64_t top = n, p, i, length
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


def colcounts(const int64_t[::1] indptr, const int64_t[::1] indices,
              const int64_t[::1] parent, int64_t n):
    counts_arr = np.ones(n, np.int64)
    cdef int64_t[::1] counts = counts_arr
    cdef int64_t[::1] s = np.zeros(n, np.int64)
    cdef int64_t[::1] w = np.full(n, -1, np.int64)
    cdef int64_t k, t, top
    with nogil:
        for k in range(n):
            top = _ereach(indptr, indices, k, parent, s, w, n)
            for t in range(top, n):
                counts[s[t]] += 1
    return counts_arr


def numeric(const int64_t[::1] indptr, const int64_t[::1] indices, const double[::1] data,
            const int64_t[::1] parent, const int64_t[::1] Lp, int64_t[::1] Li, double[::1] Lx):
    cdef int64_t n = Lp.shape[0] - 1
    cdef int64_t[::1] c = np.array(Lp[:n], np.int64)
    cdef double[::1] x = np.zeros(n)
    cdef int64_t[::1] s = np.zeros(n, np.int64)
    cdef int64_t[::1] w = np.full(n, -1, np.int64)
    cdef int64_t k, p, t, i, top
    cdef int64_t status = -1
    cdef double d, lki
    with nogil:
        for k in range(n):
            top = _ereach(indptr, indices, k, parent, s, w, n)
            x[k] = 0.0
            for p in range(indptr[k], indptr[k + 1]):
                if indices[p] <= k:
                    x[indices[p]] = data[p]
            d = x[k]
            x[k] = 0.0
            for t in range(top, n):
                i = s[t]
                lki = x[i] / Lx[Lp[i]]
                x[i] = 0.0
                for p in range(Lp[i] + 1, c[i]):
                    x[Li[p]] -= Lx[p] * lki
                d -= lki * lki
                p = c[i]
                c[i] += 1
                Li[p] = k
                Lx[p] = lki
            if not d > 0.0:
                status = k
                break
            p = c[k]
            c[k] += 1
            Li[p] = k
            Lx[p] = sqrt(d)
    return status


def solve(const int64_t[::1] Lp, const int64_t[::1] Li, const double[::1] Lx,
          double[:, ::1] B):
    cdef Py_ssize_t n = B.shape[0], m = B.shape[1]
    cdef Py_ssize_t j, c
    cdef int64_t p, row
    cdef double v, diag, y0, y1, y2
    with nogil:
        if m == 3:
            for j in range(n):
                diag = Lx[Lp[j]]
                y0 = B[j, 0] / diag
                y1 = B[j, 1] / diag
                y2 = B[j, 2] / diag
                B[j, 0] = y0
                B[j, 1] = y1
                B[j, 2] = y2
                for p in range(Lp[j] + 1, Lp[j + 1]):
                    row = Li[p]
                    v = Lx[p]
                    B[row, 0] -= v * y0
                    B[row, 1] -= v * y1
                    B[row, 2] -= v * y2
            for j in range(n - 1, -1, -1):
                y0 = B[j, 0]
                y1 = B[j, 1]
                y2 = B[j, 2]
                for p in range(Lp[j] + 1, Lp[j + 1]):
                    row = Li[p]
                    v = Lx[p]
                    y0 -= v * B[row, 0]
                    y1 -= v * B[row, 1]
                    y2 -= v * B[row, 2]
                diag = Lx[Lp[j]]
                B[j, 0] = y0 / diag
                B[j, 1] = y1 / diag
                B[j, 2] = y2 / diag
        else:
            for j in range(n):
                diag = Lx[Lp[j]]
                for c in range(m):
                    B[j, c] /= diag
                for p in range(Lp[j] + 1, Lp[j + 1]):
                    row = Li[p]
                    v = Lx[p]
                    for c in range(m):
                        B[row, c] -= v * B[j, c]
            for j in range(n - 1, -1, -1):
                for p in range(Lp[j] + 1, Lp[j + 1]):
                    row = Li[p]
                    v = Lx[p]
                    for c in range(m):
                        B[j, c] -= v * B[row, c]
                diag = Lx[Lp[j]]
                for c in range(m):
                    B[j, c] /= diag
