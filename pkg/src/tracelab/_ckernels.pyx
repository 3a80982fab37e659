# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: pair scans, batch embedding counts, trace scatter.

Mirrors tracelab._pykernels; keep both in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def pair_sups(cnp.complex128_t[:, ::1] U, cnp.int64_t[::1] ia, cnp.int64_t[::1] ib):
    cdef Py_ssize_t P = ia.shape[0]
    cdef Py_ssize_t G = U.shape[1]
    out_arr = np.empty(P, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t p, t
    cdef Py_ssize_t a, b
    cdef double best, re, im, mag
    with nogil:
        for p in range(P):
            a = ia[p]
            b = ib[p]
            best = 0.0
            for t in range(G):
                re = U[a, t].real - U[b, t].real
                im = U[a, t].imag - U[b, t].imag
                mag = re * re + im * im
                if mag > best:
                    best = mag
            out[p] = sqrt(best)
    return out_arr


def pair_l1_dists(cnp.float64_t[:, ::1] V, cnp.int64_t[::1] ia, cnp.int64_t[::1] ib):
    cdef Py_ssize_t P = ia.shape[0]
    cdef Py_ssize_t D = V.shape[1]
    out_arr = np.empty(P, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t p, d
    cdef Py_ssize_t a, b
    cdef double acc, diff
    with nogil:
        for p in range(P):
            a = ia[p]
            b = ib[p]
            acc = 0.0
            for d in range(D):
                acc += fabs(V[a, d] - V[b, d])
            out[p] = acc
    return out_arr


def subsequence_count_batch(cnp.uint8_t[:, ::1] cands, cnp.uint8_t[::1] t):
    # Exact while counts stay below 2**53; callers guard n accordingly.
    cdef Py_ssize_t C = cands.shape[0]
    cdef Py_ssize_t n = cands.shape[1]
    cdef Py_ssize_t m = t.shape[0]
    out_arr = np.zeros(C, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    if m > n:
        return out_arr
    dp_arr = np.zeros(m + 1, dtype=np.float64)
    cdef cnp.float64_t[::1] dp = dp_arr
    cdef Py_ssize_t c, i, j, jmax
    with nogil:
        for c in range(C):
            for j in range(1, m + 1):
                dp[j] = 0.0
            dp[0] = 1.0
            for i in range(n):
                jmax = i if i < m - 1 else m - 1
                for j in range(jmax, -1, -1):
                    if cands[c, i] == t[j]:
                        dp[j + 1] += dp[j]
            out[c] = dp[m]
    return out_arr


def scatter_traces(cnp.uint8_t[::1] x, cnp.uint8_t[:, ::1] keep):
    cdef Py_ssize_t T = keep.shape[0]
    cdef Py_ssize_t n = keep.shape[1]
    traces_arr = np.zeros((T, n), dtype=np.uint8)
    lengths_arr = np.zeros(T, dtype=np.int64)
    cdef cnp.uint8_t[:, ::1] traces = traces_arr
    cdef cnp.int64_t[::1] lengths = lengths_arr
    cdef Py_ssize_t trial, i, pos
    with nogil:
        for trial in range(T):
            pos = 0
            for i in range(n):
                if keep[trial, i]:
                    traces[trial, pos] = x[i]
                    pos += 1
            lengths[trial] = pos
    return traces_arr, lengths_arr
