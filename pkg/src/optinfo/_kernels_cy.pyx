# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for squared-exponential cross-covariance assembly.

Same API as the numpy fallback ``_kernels_np``; functional codes are
0 = point evaluation, 1 = negative-Laplacian evaluation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

NAME = "cython"


def se_cross_cov(pts_a, codes_a, pts_b, codes_b, double gamma, double amp):
    """Cross-covariance between linear functionals of an SE-kernel GP."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a = np.ascontiguousarray(pts_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] b = np.ascontiguousarray(pts_b, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ca = np.ascontiguousarray(codes_a, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cb = np.ascontiguousarray(codes_b, dtype=np.int64)
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], d = a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((na, nb), dtype=np.float64)

    cdef Py_ssize_t i, j, k
    cdef double r2, diff, base, factor, g2, g3, g4
    cdef long s
    g2 = gamma * gamma
    g3 = g2 * gamma
    g4 = g2 * g2
    for i in range(na):
        for j in range(nb):
            r2 = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                r2 += diff * diff
            base = amp * exp(-gamma * r2)
            s = ca[i] + cb[j]
            if s == 0:
                factor = 1.0
            elif s == 1:
                factor = 2.0 * d * gamma - 4.0 * g2 * r2
            else:
                factor = 16.0 * g4 * r2 * r2 - 16.0 * g3 * (d + 2) * r2 \
                    + 4.0 * g2 * d * (d + 2)
            out[i, j] = factor * base
    return out
