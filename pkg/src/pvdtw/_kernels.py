"""Compiled kernels for the DTW dynamic programs.

All kernels take an explicit band radius; callers pass ``max(n, m)`` for
unconstrained warping.  Local cost is the squared difference, so callers
take the square root of the accumulated cost.  ``fastmath`` stays off:
results must be bit-identical across runs and worker counts.
"""

import numpy as np
from numba import njit

_JIT = {"cache": True, "nogil": True, "fastmath": False}


@njit("float64(float64[::1], float64[::1], int64)", **_JIT)
def dtw_sq_cost(x, y, radius):
    """Accumulated squared cost of the best warping path, two-row DP."""
    n = x.shape[0]
    m = y.shape[0]
    prev = np.empty(m, dtype=np.float64)
    curr = np.empty(m, dtype=np.float64)
    for i in range(n):
        lo = i - radius
        if lo < 0:
            lo = 0
        hi = i + radius
        if hi > m - 1:
            hi = m - 1
        for j in range(m):
            curr[j] = np.inf
        for j in range(lo, hi + 1):
            d = x[i] - y[j]
            cost = d * d
            if i == 0 and j == 0:
                curr[j] = cost
                continue
            best = np.inf
            if i > 0:
                if prev[j] < best:
                    best = prev[j]
                if j > 0 and prev[j - 1] < best:
                    best = prev[j - 1]
            if j > 0 and curr[j - 1] < best:
                best = curr[j - 1]
            curr[j] = cost + best
        prev, curr = curr, prev
    return prev[m - 1]


@njit("float64[:, ::1](float64[::1], float64[::1], int64)", **_JIT)
def dtw_accumulated(x, y, radius):
    """Full accumulated-cost matrix (inf outside the band), for backtracking."""
    n = x.shape[0]
    m = y.shape[0]
    acc = np.full((n, m), np.inf, dtype=np.float64)
    for i in range(n):
        lo = i - radius
        if lo < 0:
            lo = 0
        hi = i + radius
        if hi > m - 1:
            hi = m - 1
        for j in range(lo, hi + 1):
            d = x[i] - y[j]
            cost = d * d
            if i == 0 and j == 0:
                acc[i, j] = cost
                continue
            best = np.inf
            if i > 0:
                if acc[i - 1, j] < best:
                    best = acc[i - 1, j]
                if j > 0 and acc[i - 1, j - 1] < best:
                    best = acc[i - 1, j - 1]
            if j > 0 and acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost + best
    return acc


@njit("int64[:, ::1](float64[:, ::1])", **_JIT)
def backtrack_path(acc):
    """Recover the optimal warping path from an accumulated-cost matrix.

    Ties prefer the diagonal predecessor, then the i-advance, then the
    j-advance, so paths are reproducible.
    """
    n = acc.shape[0]
    m = acc.shape[1]
    buf = np.empty((n + m - 1, 2), dtype=np.int64)
    pos = n + m - 2
    i = n - 1
    j = m - 1
    buf[pos, 0] = i
    buf[pos, 1] = j
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag = acc[i - 1, j - 1]
            up = acc[i - 1, j]
            left = acc[i, j - 1]
            if diag <= up and diag <= left:
                i -= 1
                j -= 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
        pos -= 1
        buf[pos, 0] = i
        buf[pos, 1] = j
    return buf[pos:].copy()


@njit("float64(float64[::1], float64[::1], int64)", **_JIT)
def lb_keogh_sq_cost(x, y, radius):
    """Squared envelope bound: distance of x to the banded min/max hull of y."""
    n = x.shape[0]
    total = 0.0
    for i in range(n):
        lo = i - radius
        if lo < 0:
            lo = 0
        hi = i + radius
        if hi > n - 1:
            hi = n - 1
        upper = y[lo]
        lower = y[lo]
        for j in range(lo + 1, hi + 1):
            v = y[j]
            if v > upper:
                upper = v
            if v < lower:
                lower = v
        xi = x[i]
        if xi > upper:
            d = xi - upper
            total += d * d
        elif xi < lower:
            d = lower - xi
            total += d * d
    return total
