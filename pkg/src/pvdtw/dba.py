"""Barycenter averaging under DTW: the centroid update used by the k-means fit.

The centroid of a set of equal-length series is refined iteratively: align
the current centroid to every member with :func:`pvdtw.dtw.dtw_path`, then
replace each centroid sample with the arithmetic mean of all member samples
its index was aligned to.  Each accepted update cannot increase the
objective (sum of squared DTW distances to the members); an update that
would increase it through numerical noise is rejected and iteration stops.
"""

from __future__ import annotations

import numpy as np

from ._parallel import thread_map
from .dtw import DistanceMatrix, _as_values, as_band, dtw, dtw_path


def _member_arrays(members) -> list[np.ndarray]:
    arrays = [_as_values(m) for m in members]
    if not arrays:
        raise ValueError("member set must be non-empty")
    length = arrays[0].size
    if any(a.size != length for a in arrays):
        raise ValueError("members must share one common length")
    return arrays


def _pairwise_sq(arrays, band, threads) -> np.ndarray:
    n = len(arrays)
    entries = np.zeros((n, n), dtype=np.float64)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    dists = thread_map(lambda p: dtw(arrays[p[0]], arrays[p[1]], band), pairs, threads)
    for (i, j), d in zip(pairs, dists):
        entries[i, j] = d
        entries[j, i] = d
    return entries


def medoid(members, band=None, dmatrix=None, threads: int = 1) -> int:
    """Index of the member minimizing the summed squared DTW distance to the rest.

    ``dmatrix`` may carry precomputed pairwise distances (a square array or
    a :class:`DistanceMatrix` restricted to the members); otherwise they are
    computed here.  Ties resolve to the lowest index.
    """
    arrays = _member_arrays(members)
    n = len(arrays)
    if dmatrix is None:
        entries = _pairwise_sq(arrays, band, threads)
    else:
        entries = dmatrix.entries if isinstance(dmatrix, DistanceMatrix) else np.asarray(dmatrix, dtype=np.float64)
        if entries.shape != (n, n):
            raise ValueError(f"dmatrix must be {n}x{n}, got {entries.shape}")
    return int(np.argmin(np.square(entries).sum(axis=1)))


def frechet_objective(centroid, members, band=None, threads: int = 1) -> float:
    """Sum over members of the squared DTW distance to ``centroid``."""
    arrays = _member_arrays(members)
    c = _as_values(centroid)
    dists = np.asarray(thread_map(lambda m: dtw(c, m, band), arrays, threads))
    return float(np.sum(np.square(dists)))


def _barycenter_update(length: int, arrays, paths) -> np.ndarray:
    """Mean of member samples aligned to each centroid index, over all paths.

    Accumulates full per-member sums in member order, so the result does not
    depend on which worker produced which path.
    """
    total = np.zeros(length, dtype=np.float64)
    count = np.zeros(length, dtype=np.float64)
    for member, path in zip(arrays, paths):
        idx = path[:, 0]
        total += np.bincount(idx, weights=member[path[:, 1]], minlength=length)
        count += np.bincount(idx, minlength=length)
    return total / count


def dba(
    members,
    band=None,
    max_iter: int = 30,
    tol: float = 1e-5,
    *,
    init=None,
    dmatrix=None,
    threads: int = 1,
    objective_history: list | None = None,
) -> np.ndarray:
    """Barycenter of a set of equal-length series under DTW.

    Starts from the medoid member (or from ``init`` when given, e.g. to warm
    start from an incumbent centroid) and performs at most ``max_iter``
    averaging updates, stopping early when the relative objective decrease
    falls below ``tol`` or an update would not improve.  The objective of the
    returned centroid never exceeds the starting point's.

    When provided, ``objective_history`` receives the objective of every
    accepted centroid, a non-increasing sequence.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if not (tol > 0):
        raise ValueError(f"tol must be positive, got {tol}")
    arrays = _member_arrays(members)
    length = arrays[0].size
    b = as_band(band)
    if init is None:
        centroid = arrays[medoid(arrays, b, dmatrix=dmatrix, threads=threads)].copy()
    else:
        centroid = _as_values(init).copy()
        if centroid.size != length:
            raise ValueError(
                f"init length {centroid.size} does not match member length {length}"
            )

    def evaluate(c):
        results = thread_map(lambda m: dtw_path(c, m, b), arrays, threads)
        dists = np.asarray([d for d, _ in results])
        return float(np.sum(np.square(dists))), [p for _, p in results]

    objective, paths = evaluate(centroid)
    if objective_history is not None:
        objective_history.append(objective)
    for _ in range(max_iter):
        if objective == 0.0:
            break
        candidate = _barycenter_update(length, arrays, paths)
        cand_objective, cand_paths = evaluate(candidate)
        if cand_objective > objective:
            break  # numerical noise; keep the better centroid
        if objective_history is not None:
            objective_history.append(cand_objective)
        relative_drop = (objective - cand_objective) / objective
        centroid, objective, paths = candidate, cand_objective, cand_paths
        if relative_drop < tol:
            break
    return centroid.copy()
