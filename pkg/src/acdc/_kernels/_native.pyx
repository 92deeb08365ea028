# cython: language_level=3
"""Compiled nearest-neighbor kernel (hot path of cousin matching)."""

import numpy as np

cimport cython
from libc.math cimport INFINITY


@cython.boundscheck(False)
@cython.wraparound(False)
def min_sqdist(double[:, ::1] query, double[:, ::1] cand):
    """Squared L2 distance from each query row to its nearest row of ``cand``.

    Sequential accumulation over the feature dimension; early abandoning
    once the partial sum exceeds the current best (sum of squares only
    grows, so the result is unaffected).
    """
    cdef Py_ssize_t nq = query.shape[0]
    cdef Py_ssize_t nc = cand.shape[0]
    cdef Py_ssize_t d = query.shape[1]
    if cand.shape[1] != d:
        raise ValueError("query and candidate dimensions differ")
    out = np.empty(nq, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j, k
    cdef double best, acc, diff
    with nogil:
        for i in range(nq):
            best = INFINITY
            for j in range(nc):
                acc = 0.0
                for k in range(d):
                    diff = query[i, k] - cand[j, k]
                    acc += diff * diff
                    if acc >= best:
                        break
                if acc < best:
                    best = acc
            ov[i] = best
    return out
