"""K-means over a fleet with DTW dissimilarity and barycenter centroid updates.

``fit`` runs several independent restarts with deterministically derived
seeds and keeps the one with the lowest inertia (sum of squared DTW
distances of every panel to its assigned centroid).  Everything is seeded
and reductions run in fixed order, so identical inputs produce identical
models regardless of the worker count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._parallel import thread_map
from .dba import dba
from .dtw import UNCONSTRAINED, Band, DistanceMatrix, _as_values, as_band, distance_matrix
from .errors import DataError
from .signals import Fleet


@dataclass(frozen=True)
class KMeansConfig:
    """Knobs for :func:`fit`.

    ``k`` defaults to 2: one cluster for healthy panels, one for abnormal.
    ``seed`` feeds every random draw; restart seeds are derived from it.
    """

    k: int = 2
    max_iter: int = 50
    seed: int = 0
    band: Band = UNCONSTRAINED
    dba_max_iter: int = 30
    dba_tol: float = 1e-5
    n_init: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.n_init < 1:
            raise ValueError(f"n_init must be >= 1, got {self.n_init}")
        if self.dba_max_iter < 1:
            raise ValueError(f"dba_max_iter must be >= 1, got {self.dba_max_iter}")
        if not (self.dba_tol > 0):
            raise ValueError(f"dba_tol must be positive, got {self.dba_tol}")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")
        if not (0 <= self.seed < 2**64):
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "band", as_band(self.band))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "max_iter": self.max_iter,
            "seed": self.seed,
            "band": self.band.radius,
            "dba_max_iter": self.dba_max_iter,
            "dba_tol": self.dba_tol,
            "n_init": self.n_init,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "KMeansConfig":
        known = {f: obj[f] for f in cls.__dataclass_fields__ if f in obj}
        return cls(**known)


@dataclass(frozen=True)
class ClusterModel:
    """Fitted clustering: centroids, per-panel assignments and metadata."""

    k: int
    centroids: tuple[np.ndarray, ...]
    assignments: np.ndarray
    panel_ids: tuple[str, ...]
    inertia: float
    n_iter: int
    seed: int
    converged: bool

    def __post_init__(self):
        cents = []
        for c in self.centroids:
            arr = np.array(c, dtype=np.float64)
            arr.flags.writeable = False
            cents.append(arr)
        object.__setattr__(self, "centroids", tuple(cents))
        if len(self.centroids) != self.k:
            raise ValueError(f"expected {self.k} centroids, got {len(self.centroids)}")
        a = np.array(self.assignments, dtype=np.int64)
        ids = tuple(self.panel_ids)
        object.__setattr__(self, "panel_ids", ids)
        if a.shape != (len(ids),):
            raise ValueError("assignments must have one entry per panel")
        if a.size and (a.min() < 0 or a.max() >= self.k):
            raise ValueError(f"cluster indices must lie in [0, {self.k})")
        if set(np.unique(a)) != set(range(self.k)):
            raise ValueError("every cluster must be non-empty")
        a.flags.writeable = False
        object.__setattr__(self, "assignments", a)
        if not (self.inertia >= 0):
            raise ValueError(f"inertia must be >= 0, got {self.inertia}")

    def members(self, cluster: int) -> np.ndarray:
        """Panel positions assigned to ``cluster``."""
        return np.flatnonzero(self.assignments == cluster)

    def to_json(self) -> str:
        payload = {
            "k": self.k,
            "seed": self.seed,
            "inertia": self.inertia,
            "n_iter": self.n_iter,
            "converged": self.converged,
            "centroids": [[float(v) for v in c] for c in self.centroids],
            "assignments": {pid: int(c) for pid, c in zip(self.panel_ids, self.assignments)},
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ClusterModel":
        try:
            obj = json.loads(text)
            assignments = obj["assignments"]
            return cls(
                k=obj["k"],
                centroids=tuple(np.asarray(c, dtype=np.float64) for c in obj["centroids"]),
                assignments=np.asarray(list(assignments.values()), dtype=np.int64),
                panel_ids=tuple(assignments.keys()),
                inertia=obj["inertia"],
                n_iter=obj["n_iter"],
                seed=obj["seed"],
                converged=obj["converged"],
            )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"bad cluster model JSON: {exc}") from None


class FitHistory:
    """Objective traces collected by :func:`fit`, one dict per restart.

    Each entry holds ``inertia`` (the value after every assignment and after
    every centroid update, a non-increasing sequence) and ``dba`` (the
    objective sequence of every barycenter computation).
    """

    def __init__(self):
        self.restarts: list[dict] = []


def _kmeanspp(panel_ids, entries, k, rng) -> list[int]:
    """Seeding: first pick uniform, then proportional to squared distance
    to the nearest already-chosen centroid.

    Draws walk the panels in sorted-id order, so the outcome depends on the
    panel identities, not on their position in the fleet.
    """
    n = len(panel_ids)
    order = sorted(range(n), key=lambda i: panel_ids[i])
    chosen = [order[int(rng.integers(n))]]
    while len(chosen) < k:
        weights = []
        for p in order:
            dmin = min(entries[p, c] for c in chosen)
            weights.append(dmin * dmin)
        total = 0.0
        for w in weights:
            total += w
        pick = None
        if total > 0.0:
            r = float(rng.random()) * total
            cum = 0.0
            for p, w in zip(order, weights):
                cum += w
                if r < cum:
                    pick = p
                    break
            if pick is None:  # guard against accumulated rounding at the tail
                pick = next(p for p, w in zip(reversed(order), reversed(weights)) if w > 0)
        else:
            remaining = [p for p in order if p not in set(chosen)]
            pick = remaining[int(rng.integers(len(remaining)))]
        chosen.append(pick)
    return chosen


def init_centroids(fleet: Fleet, config: KMeansConfig, rng, dmatrix=None) -> list[np.ndarray]:
    """Pick ``config.k`` initial centroids from the fleet (copies of members)."""
    if config.k > len(fleet):
        raise ValueError(f"k={config.k} exceeds fleet size {len(fleet)}")
    entries = None
    if config.k > 1:
        if dmatrix is None:
            entries = distance_matrix(fleet, config.band).entries
        elif isinstance(dmatrix, DistanceMatrix):
            entries = dmatrix.entries
        else:
            entries = np.asarray(dmatrix, dtype=np.float64)
    idx = _kmeanspp(fleet.panel_ids, entries, config.k, rng)
    values = fleet.values_matrix()
    return [values[i].copy() for i in idx]


def _nearest(row, centroids, band: Band, prune: bool) -> tuple[int, float]:
    """Nearest centroid index and distance; ties go to the lowest index.

    With ``prune`` (banded, equal-length case) the envelope bound skips the
    full DTW whenever it cannot beat the current best; this never changes
    the result because the bound never exceeds the true distance.
    """
    best_sq = math.inf
    best_idx = -1
    for idx, cent in enumerate(centroids):
        radius = band.effective_radius(row.size, cent.size)
        if prune and best_idx >= 0:
            if _kernels.lb_keogh_sq_cost(row, cent, radius) >= best_sq:
                continue
        sq = _kernels.dtw_sq_cost(row, cent, radius)
        if sq < best_sq:
            best_sq = sq
            best_idx = idx
    return best_idx, math.sqrt(best_sq)


def _assign_with_dists(rows, centroids, band: Band, threads, prune=None):
    lengths_equal = all(c.size == rows[0].size for c in centroids)
    for c in centroids:
        band.check_feasible(rows[0].size, c.size)
    if prune is None:
        prune = band.radius is not None and lengths_equal
    results = thread_map(lambda r: _nearest(r, centroids, band, prune), rows, threads)
    a = np.asarray([idx for idx, _ in results], dtype=np.int64)
    dists = np.asarray([d for _, d in results], dtype=np.float64)
    return a, dists


def assign(fleet: Fleet, centroids, band=None, threads: int = 1) -> np.ndarray:
    """Map every panel to its nearest centroid under DTW."""
    if not centroids:
        raise ValueError("centroids must be non-empty")
    if not fleet.grid_aligned:
        raise ValueError("fleet must be grid-aligned")
    values = fleet.values_matrix()
    rows = [np.ascontiguousarray(values[i]) for i in range(len(fleet))]
    cents = [_as_values(c) for c in centroids]
    a, _ = _assign_with_dists(rows, cents, as_band(band), threads)
    return a


def _repair_empty(a, dists, rows, centroids, band: Band, k):
    """Move the farthest panel (from a cluster that can spare one) into each
    empty cluster; k <= n guarantees a donor exists."""
    counts = np.bincount(a, minlength=k)
    if not np.any(counts[:k] == 0):
        return a, dists
    a = a.copy()
    dists = dists.copy()
    for c in range(k):
        while counts[c] == 0:
            donor = -1
            worst = -1.0
            for p in range(len(rows)):
                if counts[a[p]] >= 2 and dists[p] > worst:
                    worst = float(dists[p])
                    donor = p
            counts[a[donor]] -= 1
            a[donor] = c
            counts[c] += 1
            radius = band.effective_radius(rows[donor].size, centroids[c].size)
            dists[donor] = math.sqrt(_kernels.dtw_sq_cost(rows[donor], centroids[c], radius))
    return a, dists


def _run_restart(rows, panel_ids, dm_entries, config: KMeansConfig, rng, threads):
    n = len(rows)
    k = config.k
    centroid_idx = _kmeanspp(panel_ids, dm_entries, k, rng) if k > 1 else _kmeanspp(panel_ids, None, 1, rng)
    centroids = [rows[i].copy() for i in centroid_idx]
    band = config.band
    prev_assign = None
    inertia_trace: list[float] = []
    dba_trace: list[list[float]] = []
    converged = False
    inertia = math.inf
    a = None
    n_iter = 0
    for _ in range(config.max_iter):
        n_iter += 1
        if prev_assign is None and dm_entries is not None:
            cols = dm_entries[:, centroid_idx]
            a = np.argmin(cols, axis=1).astype(np.int64)
            dists = np.ascontiguousarray(cols[np.arange(n), a])
        else:
            a, dists = _assign_with_dists(rows, centroids, band, threads)
        a, dists = _repair_empty(a, dists, rows, centroids, band, k)
        # Cluster-grouped sums keep this trace bitwise comparable with the
        # per-cluster DBA objectives recorded below.
        inertia = 0.0
        for c in range(k):
            inertia += float(np.sum(np.square(dists[a == c])))
        inertia_trace.append(inertia)
        if prev_assign is not None and np.array_equal(a, prev_assign):
            converged = True
            break
        prev_assign = a
        inertia = 0.0
        for c in range(k):
            members = [rows[i] for i in np.flatnonzero(a == c)]
            hist: list[float] = []
            centroids[c] = dba(
                members,
                band,
                config.dba_max_iter,
                config.dba_tol,
                init=centroids[c],
                threads=threads,
                objective_history=hist,
            )
            dba_trace.append(hist)
            inertia += hist[-1]
        inertia_trace.append(inertia)
    trace = {"inertia": inertia_trace, "dba": dba_trace}
    return a, centroids, inertia, n_iter, converged, trace


def fit(fleet: Fleet, config: KMeansConfig, threads: int = 1, history: FitHistory | None = None) -> ClusterModel:
    """Cluster a grid-aligned fleet.

    Runs ``config.n_init`` restarts with seeds derived from ``config.seed``
    and returns the lowest-inertia model.  A restart alternates assignment
    and barycenter updates until the assignments stop changing (warm-starting
    each barycenter from the incumbent centroid, so inertia never increases
    within a restart) or ``config.max_iter`` is reached.  ``n_iter`` counts
    assignment passes of the winning restart.
    """
    if not fleet.grid_aligned:
        raise ValueError("fleet must be grid-aligned to fit")
    n = len(fleet)
    if config.k > n:
        raise ValueError(f"k={config.k} exceeds fleet size {n}")
    values = fleet.values_matrix()
    rows = [np.ascontiguousarray(values[i]) for i in range(n)]
    dm_entries = distance_matrix(fleet, config.band, threads).entries if n >= 2 else None
    best = None
    for restart in range(config.n_init):
        rng = np.random.default_rng(np.random.SeedSequence((config.seed, restart)))
        result = _run_restart(rows, fleet.panel_ids, dm_entries, config, rng, threads)
        if history is not None:
            history.restarts.append(result[5])
        if best is None or result[2] < best[2]:
            best = result
    a, centroids, inertia, n_iter, converged, _ = best
    return ClusterModel(
        k=config.k,
        centroids=tuple(centroids),
        assignments=a,
        panel_ids=fleet.panel_ids,
        inertia=inertia,
        n_iter=n_iter,
        seed=config.seed,
        converged=converged,
    )


def predict(series, model: ClusterModel, band=None) -> int:
    """Cluster index of the nearest centroid; same tie-break as :func:`assign`."""
    row = _as_values(series)
    length = model.centroids[0].size
    if row.size != length:
        raise ValueError(f"series length {row.size} does not match centroid length {length}")
    idx, _ = _nearest(row, list(model.centroids), as_band(band), prune=False)
    return idx
