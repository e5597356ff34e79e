"""Pure-numpy backend for squared-exponential cross-covariance assembly.

Mirrors the API of the compiled backend ``_kernels_cy``; one of the two is
selected at import time by :mod:`optinfo.kernels`.

Functional codes: 0 = point evaluation, 1 = negative-Laplacian evaluation.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def se_cross_cov(pts_a, codes_a, pts_b, codes_b, gamma, amp):
    """Cross-covariance matrix between two sets of linear functionals of a
    GP with kernel amp * exp(-gamma * ||t - t'||^2).

    pts_* have shape (n, d); codes_* are integer arrays (0 or 1).
    """
    pts_a = np.asarray(pts_a, dtype=float)
    pts_b = np.asarray(pts_b, dtype=float)
    codes_a = np.asarray(codes_a, dtype=np.int64)
    codes_b = np.asarray(codes_b, dtype=np.int64)
    d = pts_a.shape[1]

    diff = pts_a[:, None, :] - pts_b[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    base = amp * np.exp(-gamma * r2)

    s = codes_a[:, None] + codes_b[None, :]
    factor = np.ones_like(base)
    if np.any(s == 1):
        # -Delta applied on one side: (2 d gamma - 4 gamma^2 r^2) * k
        m = s == 1
        factor[m] = 2.0 * d * gamma - 4.0 * gamma**2 * r2[m]
    if np.any(s == 2):
        # -Delta applied on both sides:
        # (16 g^4 r^4 - 16 g^3 (d+2) r^2 + 4 g^2 d (d+2)) * k
        m = s == 2
        rm = r2[m]
        factor[m] = (
            16.0 * gamma**4 * rm**2
            - 16.0 * gamma**3 * (d + 2) * rm
            + 4.0 * gamma**2 * d * (d + 2)
        )
    return factor * base
