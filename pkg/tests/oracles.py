"""Independent reference implementations used to check the fast paths.

``dtw_brute`` enumerates every admissible warping path recursively with no
memoization, so it shares nothing with the dynamic program it verifies.
Only usable for short sequences (the path count grows exponentially).
"""

import math


def dtw_brute(x, y, radius=None):
    """Minimum sqrt-accumulated squared cost over all warping paths."""
    n, m = len(x), len(y)
    r = radius if radius is not None else max(n, m)
    if abs(n - m) > r:
        raise ValueError("infeasible band")
    inf = float("inf")

    def walk(i, j):
        cost = (x[i] - y[j]) ** 2
        if i == n - 1 and j == m - 1:
            return cost
        best = inf
        if i + 1 < n and abs(i + 1 - j) <= r:
            best = min(best, walk(i + 1, j))
        if j + 1 < m and abs(i - (j + 1)) <= r:
            best = min(best, walk(i, j + 1))
        if i + 1 < n and j + 1 < m and abs(i - j) <= r:
            best = min(best, walk(i + 1, j + 1))
        return cost + best

    return math.sqrt(walk(0, 0))


def path_cost(x, y, path):
    """Sqrt of the accumulated squared cost along an explicit path."""
    return math.sqrt(sum((x[i] - y[j]) ** 2 for i, j in path))


def check_path_invariants(path, n, m, radius=None):
    """Assert boundary, monotonicity/continuity and band membership."""
    assert tuple(path[0]) == (0, 0)
    assert tuple(path[-1]) == (n - 1, m - 1)
    for (i0, j0), (i1, j1) in zip(path[:-1], path[1:]):
        di, dj = i1 - i0, j1 - j0
        assert (di, dj) in ((1, 0), (0, 1), (1, 1)), f"bad step ({di}, {dj})"
    if radius is not None:
        for i, j in path:
            assert abs(int(i) - int(j)) <= radius
