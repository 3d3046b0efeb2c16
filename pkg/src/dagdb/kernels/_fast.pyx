# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
"""Compiled kernels: batched matrix exponential and the greedy
feedback-arc-set ordering.

Kept operation for operation in step with ``_ref.py`` (same scaling
exponents, same term count, same scan and tie rules) so the two backends
agree to rounding.
"""

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy
from libc.math cimport ldexp, fabs

import numpy as np
cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

TAYLOR_TERMS = 14
SCALE_LIMIT = 0.5


cdef inline void _mm(double* a, double* b, double* c, int d) noexcept nogil:
    # dgemm is column-major; row-major a @ b is dgemm(b, a) on the raw buffers
    cdef char tn = c'N'
    cdef double one = 1.0
    cdef double zero = 0.0
    dgemm(&tn, &tn, &d, &d, &d, &one, b, &d, a, &d, &zero, c, &d)


cdef void _expm_one(const double* A, double* out, double* tr_out,
                    double* B, double* E, double* term, double* prod,
                    int d) noexcept nogil:
    cdef int i, k, s
    cdef int dd = d * d
    cdef double norm, rowsum, fac, inv, trace
    cdef double* sw

    norm = 0.0
    for i in range(d):
        rowsum = 0.0
        for k in range(d):
            rowsum += fabs(A[i * d + k])
        if rowsum > norm:
            norm = rowsum
    s = 0
    while norm > 0.5:
        norm *= 0.5
        s += 1

    fac = ldexp(1.0, -s)
    for i in range(dd):
        B[i] = A[i] * fac
        term[i] = B[i]
        E[i] = B[i]
    for i in range(d):
        E[i * d + i] += 1.0

    for k in range(2, 15):
        _mm(term, B, prod, d)
        inv = 1.0 / k
        for i in range(dd):
            prod[i] *= inv
        sw = term; term = prod; prod = sw
        for i in range(dd):
            E[i] += term[i]

    for k in range(s):
        _mm(E, E, prod, d)
        sw = E; E = prod; prod = sw

    trace = 0.0
    for i in range(d):
        trace += E[i * d + i]
    tr_out[0] = trace
    memcpy(out, E, dd * sizeof(double))


def expm_trace(mats):
    """Matrix exponential of each matrix in a stack, via scaling-and-squaring
    with a truncated Taylor series.

    mats: (d, d) or (S, d, d) float array.
    Returns (trace, expm) with shapes matching the input batching.
    """
    arr = np.ascontiguousarray(mats, dtype=np.float64)
    single = arr.ndim == 2
    if single:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError(
            f"expected square matrices, got shape {np.asarray(mats).shape}")

    cdef double[:, :, ::1] a = arr
    cdef Py_ssize_t n = a.shape[0]
    cdef int d = <int> a.shape[1]
    out = np.empty((n, d, d), dtype=np.float64)
    traces = np.empty(n, dtype=np.float64)
    cdef double[:, :, ::1] o = out
    cdef double[::1] t = traces
    cdef Py_ssize_t i
    cdef int dd = d * d
    cdef double* buf

    if d == 0:
        t[:] = 0.0
    else:
        buf = <double*> malloc(4 * dd * sizeof(double))
        if buf == NULL:
            raise MemoryError()
        with nogil:
            for i in range(n):
                _expm_one(&a[i, 0, 0], &o[i, 0, 0], &t[i],
                          buf, buf + dd, buf + 2 * dd, buf + 3 * dd, d)
        free(buf)

    if single:
        return float(traces[0]), out[0]
    return traces, out


def gfas_order(adj, weights):
    """Greedy feedback-arc-set node ordering (weighted Eades-Lin-Smyth).

    Same semantics as the fallback: strip sinks to the tail, sources to the
    head, otherwise remove the alive node maximizing out-weight minus
    in-weight; smallest index wins every scan.
    """
    A = np.ascontiguousarray(adj, dtype=np.uint8)
    W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t d = A.shape[0]
    order = np.empty(d, dtype=np.int64)
    if d == 0:
        return order

    cdef cnp.uint8_t[:, ::1] a = A
    cdef double[:, ::1] w = W
    cdef cnp.int64_t[::1] o = order

    cdef unsigned char* alive = <unsigned char*> malloc(d)
    cdef long* out_deg = <long*> malloc(d * sizeof(long))
    cdef long* in_deg = <long*> malloc(d * sizeof(long))
    cdef double* out_w = <double*> malloc(d * sizeof(double))
    cdef double* in_w = <double*> malloc(d * sizeof(double))
    if (alive == NULL or out_deg == NULL or in_deg == NULL
            or out_w == NULL or in_w == NULL):
        free(alive); free(out_deg); free(in_deg); free(out_w); free(in_w)
        raise MemoryError()

    cdef Py_ssize_t i, j, v, u, best
    cdef Py_ssize_t hi = 0
    cdef Py_ssize_t ti = d - 1
    cdef Py_ssize_t left = d
    cdef double best_delta, delta
    cdef bint stripped

    with nogil:
        for i in range(d):
            alive[i] = 1
            out_deg[i] = 0
            in_deg[i] = 0
            out_w[i] = 0.0
            in_w[i] = 0.0
        for i in range(d):
            for j in range(d):
                if a[i, j]:
                    out_deg[i] += 1
                    in_deg[j] += 1
                    out_w[i] += w[i, j]
                    in_w[j] += w[i, j]

        while left:
            stripped = True
            while stripped:
                stripped = False
                for v in range(d):
                    if alive[v] and out_deg[v] == 0:
                        alive[v] = 0
                        for u in range(d):
                            if alive[u]:
                                if a[u, v]:
                                    out_deg[u] -= 1
                                    out_w[u] -= w[u, v]
                                if a[v, u]:
                                    in_deg[u] -= 1
                                    in_w[u] -= w[v, u]
                        o[ti] = v
                        ti -= 1
                        left -= 1
                        stripped = True
                        break
            stripped = True
            while stripped:
                stripped = False
                for v in range(d):
                    if alive[v] and in_deg[v] == 0:
                        alive[v] = 0
                        for u in range(d):
                            if alive[u]:
                                if a[u, v]:
                                    out_deg[u] -= 1
                                    out_w[u] -= w[u, v]
                                if a[v, u]:
                                    in_deg[u] -= 1
                                    in_w[u] -= w[v, u]
                        o[hi] = v
                        hi += 1
                        left -= 1
                        stripped = True
                        break
            if left:
                best = -1
                best_delta = 0.0
                for v in range(d):
                    if alive[v]:
                        delta = out_w[v] - in_w[v]
                        if best < 0 or delta > best_delta:
                            best = v
                            best_delta = delta
                alive[best] = 0
                for u in range(d):
                    if alive[u]:
                        if a[u, best]:
                            out_deg[u] -= 1
                            out_w[u] -= w[u, best]
                        if a[best, u]:
                            in_deg[u] -= 1
                            in_w[u] -= w[best, u]
                o[hi] = best
                hi += 1
                left -= 1

    free(alive); free(out_deg); free(in_deg); free(out_w); free(in_w)
    return order
