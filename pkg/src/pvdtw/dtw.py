"""Dynamic time warping: distances, warping paths, banding, and fleet matrices.

The distance between two sequences is the square root of the minimal
accumulated squared difference over all monotonic, continuous alignments.
With a Sakoe-Chiba band of radius 0 on equal-length inputs this collapses to
the Euclidean distance, which is also the quantity the barycenter averaging
step minimizes; see :mod:`pvdtw.dba`.

DTW is not a metric: it is symmetric, non-negative and zero on identical
inputs, but does not satisfy the triangle inequality.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._parallel import thread_map
from .errors import DataError
from .signals import Fleet, PanelSeries


@dataclass(frozen=True)
class Band:
    """Sakoe-Chiba band constraint: |i - j| <= radius along the path.

    ``radius=None`` means unconstrained warping (the default throughout).
    A band is only feasible when ``radius >= |len(x) - len(y)|``.
    """

    radius: int | None = None

    def __post_init__(self):
        if self.radius is not None:
            if not isinstance(self.radius, (int, np.integer)) or isinstance(self.radius, bool):
                raise ValueError(f"band radius must be an integer or None, got {self.radius!r}")
            if self.radius < 0:
                raise ValueError(f"band radius must be >= 0, got {self.radius}")
            object.__setattr__(self, "radius", int(self.radius))

    def effective_radius(self, n: int, m: int) -> int:
        """Radius to hand the kernels; max(n, m) covers every cell."""
        if self.radius is None:
            return max(n, m)
        return self.radius

    def check_feasible(self, n: int, m: int) -> None:
        if self.radius is not None and self.radius < abs(n - m):
            raise ValueError(
                f"band radius {self.radius} is infeasible for lengths {n} and {m} "
                f"(needs >= {abs(n - m)})"
            )


#: Shared unconstrained band instance.
UNCONSTRAINED = Band(None)


def as_band(band) -> Band:
    """Coerce None, an int radius, or a Band into a Band."""
    if band is None:
        return UNCONSTRAINED
    if isinstance(band, Band):
        return band
    if isinstance(band, (int, np.integer)) and not isinstance(band, bool):
        return Band(int(band))
    raise TypeError(f"expected Band, int radius or None, got {band!r}")


def _as_values(x) -> np.ndarray:
    if isinstance(x, PanelSeries):
        arr = x.values
    else:
        arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("input must be a non-empty 1-D sequence")
    if np.isnan(arr).any():
        raise ValueError("input has missing samples (NaN); fill_missing first")
    if np.isinf(arr).any():
        raise ValueError("input must be finite")
    return np.ascontiguousarray(arr, dtype=np.float64)


def dtw(x, y, band=None) -> float:
    """DTW distance between two sequences (or :class:`PanelSeries`)."""
    xv = _as_values(x)
    yv = _as_values(y)
    b = as_band(band)
    b.check_feasible(xv.size, yv.size)
    return math.sqrt(_kernels.dtw_sq_cost(xv, yv, b.effective_radius(xv.size, yv.size)))


def dtw_path(x, y, band=None) -> tuple[float, np.ndarray]:
    """DTW distance plus the warping path that realizes it.

    Returns ``(distance, path)`` where ``path`` is an (L, 2) int array of
    (i, j) index pairs from (0, 0) to (len(x)-1, len(y)-1).  Ties during
    backtracking are broken deterministically (diagonal, then i-advance,
    then j-advance), so the path is reproducible across runs.
    """
    xv = _as_values(x)
    yv = _as_values(y)
    b = as_band(band)
    b.check_feasible(xv.size, yv.size)
    acc = _kernels.dtw_accumulated(xv, yv, b.effective_radius(xv.size, yv.size))
    path = _kernels.backtrack_path(acc)
    return math.sqrt(acc[-1, -1]), path


def lb_keogh(x, y, radius: int) -> float:
    """Envelope lower bound on the banded DTW distance (equal lengths only).

    Guaranteed ``lb_keogh(x, y, r) <= dtw(x, y, Band(r))``; at radius 0 the
    envelope degenerates to ``y`` itself and the bound equals the Euclidean
    distance.
    """
    xv = _as_values(x)
    yv = _as_values(y)
    if xv.size != yv.size:
        raise ValueError(f"lb_keogh requires equal lengths, got {xv.size} and {yv.size}")
    if not isinstance(radius, (int, np.integer)) or isinstance(radius, bool) or radius < 0:
        raise ValueError(f"radius must be a non-negative integer, got {radius!r}")
    return math.sqrt(_kernels.lb_keogh_sq_cost(xv, yv, int(radius)))


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric matrix of pairwise DTW distances over a fleet."""

    panel_ids: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self):
        ids = tuple(self.panel_ids)
        object.__setattr__(self, "panel_ids", ids)
        arr = np.array(self.entries, dtype=np.float64)
        n = len(ids)
        if n == 0:
            raise ValueError("distance matrix needs at least one panel id")
        if arr.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n}, got {arr.shape}")
        if not np.array_equal(arr, arr.T):
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.diag(arr) != 0.0):
            raise ValueError("distance matrix must have a zero diagonal")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("distance matrix entries must be finite and >= 0")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return len(self.panel_ids)

    def submatrix(self, indices) -> np.ndarray:
        """Entries restricted to the given panel positions (copy)."""
        idx = np.asarray(indices, dtype=np.intp)
        return self.entries[np.ix_(idx, idx)]

    def to_csv_text(self) -> str:
        """CSV text: header = panel ids, then n rows of n entries (lossless repr)."""
        import io

        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(self.panel_ids)
        for row in self.entries:
            writer.writerow([repr(float(v)) for v in row])
        return buffer.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(self.to_csv_text())

    @classmethod
    def from_csv(cls, path) -> "DistanceMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header:
                raise DataError(f"{path}: empty distance matrix file")
            rows = []
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(
                        f"{path}:{line_no}: expected {len(header)} entries, got {len(row)}"
                    )
                try:
                    rows.append([float(v) for v in row])
                except ValueError:
                    raise DataError(f"{path}:{line_no}: non-numeric entry") from None
        if len(rows) != len(header):
            raise DataError(f"{path}: expected {len(header)} data rows, got {len(rows)}")
        try:
            return cls(tuple(header), np.asarray(rows, dtype=np.float64))
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(
            {"panel_ids": list(self.panel_ids), "entries": [list(map(float, r)) for r in self.entries]},
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "DistanceMatrix":
        try:
            obj = json.loads(text)
            return cls(tuple(obj["panel_ids"]), np.asarray(obj["entries"], dtype=np.float64))
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"bad distance matrix JSON: {exc}") from None


def distance_matrix(fleet: Fleet, band=None, threads: int = 1) -> DistanceMatrix:
    """Pairwise DTW distances over a grid-aligned fleet.

    Only the upper triangle is computed (cells are independent and safe to
    parallelize), then mirrored; entry order follows the fleet order.
    """
    if not fleet.grid_aligned:
        raise ValueError("fleet must be grid-aligned to build a distance matrix")
    n = len(fleet)
    if n < 2:
        raise ValueError(f"need at least 2 panels for a distance matrix, got {n}")
    values = fleet.values_matrix()
    b = as_band(band)
    length = values.shape[1]
    b.check_feasible(length, length)
    radius = b.effective_radius(length, length)
    rows = [np.ascontiguousarray(values[i]) for i in range(n)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def cell(pair):
        i, j = pair
        return math.sqrt(_kernels.dtw_sq_cost(rows[i], rows[j], radius))

    dists = thread_map(cell, pairs, threads)
    entries = np.zeros((n, n), dtype=np.float64)
    for (i, j), d in zip(pairs, dists):
        entries[i, j] = d
        entries[j, i] = d
    return DistanceMatrix(fleet.panel_ids, entries)
