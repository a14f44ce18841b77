"""Per-panel current signals: ingestion, gridding, gap repair and windowing.

A :class:`PanelSeries` holds one panel's current measurements on an implied
uniform time grid (``start_time + i * period``).  A :class:`Fleet` is an
ordered collection of panels; it is *grid-aligned* when every member shares
the same grid and has no missing samples, which is what the distance and
clustering layers require.

Missing samples (logger dropouts discovered at ingestion) are marked with
NaN on the grid and must be repaired with :func:`fill_missing` before any
distance computation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

#: Readings below this (amperes) are rejected as sensor faults; readings in
#: [MIN_CURRENT_A, 0) are treated as sensor noise and clamped to zero.
MIN_CURRENT_A = -0.1

#: Required CSV columns, in canonical order.
CSV_COLUMNS = ("timestamp", "panel_id", "current_a")


@dataclass(frozen=True)
class PanelSeries:
    """One panel's current signal on a uniform time grid.

    Parameters
    ----------
    panel_id : str
        Opaque panel identifier, unique within a fleet.
    start_time : float
        Epoch seconds of the first sample.
    values : numpy.ndarray
        Current in amperes, one entry per grid slot.  NaN marks a sample
        that is absent on the grid; every other entry must be finite.
    period : float
        Seconds between consecutive samples (default 60, one-minute data).
    """

    panel_id: str
    start_time: float
    values: np.ndarray
    period: float = 60.0

    def __post_init__(self):
        if not self.panel_id:
            raise ValueError("panel_id must be a non-empty string")
        if not (self.period > 0):
            raise ValueError(f"period must be positive, got {self.period}")
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError(f"panel {self.panel_id}: values must be a non-empty 1-D sequence")
        if np.isinf(arr).any():
            raise ValueError(f"panel {self.panel_id}: values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "start_time", float(self.start_time))
        object.__setattr__(self, "period", float(self.period))

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        """Epoch seconds of every grid slot."""
        return self.start_time + self.period * np.arange(self.values.size)

    @property
    def end_time(self) -> float:
        """Epoch seconds of the last sample."""
        return self.start_time + self.period * (self.values.size - 1)

    @property
    def is_complete(self) -> bool:
        """True when no sample is missing (no NaN markers)."""
        return not np.isnan(self.values).any()

    def with_values(self, values) -> "PanelSeries":
        """Copy of this series with the same grid but new values."""
        return PanelSeries(self.panel_id, self.start_time, values, self.period)


def _shares_grid(series: Sequence[PanelSeries]) -> bool:
    first = series[0]
    return all(
        s.is_complete
        and s.start_time == first.start_time
        and s.period == first.period
        and len(s) == len(first)
        for s in series
    )


@dataclass(frozen=True)
class Fleet:
    """Ordered collection of panel series with unique identifiers.

    ``grid_aligned`` asserts that all members share ``start_time``,
    ``period`` and length and contain no missing samples; constructing a
    fleet with a flag that does not match its members raises.
    """

    series: tuple[PanelSeries, ...]
    grid_aligned: bool

    def __post_init__(self):
        series = tuple(self.series)
        object.__setattr__(self, "series", series)
        if not series:
            raise ValueError("fleet must contain at least one series")
        ids = [s.panel_id for s in series]
        if len(set(ids)) != len(ids):
            dupes = sorted({p for p in ids if ids.count(p) > 1})
            raise ValueError(f"duplicate panel_id(s): {dupes}")
        if self.grid_aligned and not _shares_grid(series):
            raise ValueError(
                "grid_aligned fleet requires a shared start_time, period and "
                "length and no missing samples"
            )

    @classmethod
    def build(cls, series: Iterable[PanelSeries]) -> "Fleet":
        """Build a fleet, computing ``grid_aligned`` from the members."""
        series = tuple(series)
        if not series:
            raise ValueError("fleet must contain at least one series")
        return cls(series, grid_aligned=_shares_grid(series))

    def __len__(self) -> int:
        return len(self.series)

    @property
    def panel_ids(self) -> tuple[str, ...]:
        return tuple(s.panel_id for s in self.series)

    def values_matrix(self) -> np.ndarray:
        """Stack member values into an (n_panels, n_samples) array."""
        if not self.grid_aligned:
            raise ValueError("fleet is not grid-aligned")
        return np.vstack([s.values for s in self.series])


@dataclass(frozen=True)
class WindowSpec:
    """A window into a grid-aligned fleet.

    ``start_offset`` is in seconds from the series start and must land on
    the grid; ``length`` is a number of samples.
    """

    start_offset: float
    length: int

    def __post_init__(self):
        if self.start_offset < 0:
            raise ValueError(f"start_offset must be >= 0, got {self.start_offset}")
        if self.length < 2:
            raise ValueError(f"window length must be >= 2, got {self.length}")


def _parse_timestamp(text: str) -> float:
    """Parse an epoch-seconds number or an ISO-8601 datetime."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    iso = text[:-1] + "+00:00" if text.endswith("Z") else text
    dt = datetime.fromisoformat(iso)  # raises ValueError on garbage
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _grid_from_rows(panel_id: str, ts: np.ndarray, vals: np.ndarray) -> PanelSeries:
    """Place one panel's (strictly increasing) rows on an inferred uniform grid.

    The grid step is the GCD of the observed timestamp deltas (millisecond
    resolution), so a dropout shows up as NaN slots rather than a silently
    shortened series.
    """
    if ts.size == 1:
        return PanelSeries(panel_id, float(ts[0]), vals, period=60.0)
    steps_ms = np.rint(np.diff(ts) * 1000.0).astype(np.int64)
    if np.any(steps_ms <= 0):
        raise DataError(f"panel {panel_id}: timestamps closer than 1 ms apart")
    g = int(steps_ms[0])
    for step in steps_ms[1:]:
        g = math.gcd(g, int(step))
    period = g / 1000.0
    n_slots = int(round((ts[-1] - ts[0]) / period)) + 1
    if n_slots > 20 * ts.size:
        raise DataError(
            f"panel {panel_id}: timestamps do not fit a uniform grid "
            f"(inferred period {period} s would leave {n_slots - ts.size} holes)"
        )
    idx = np.rint((ts - ts[0]) / period).astype(np.int64)
    if np.any(np.abs(ts[0] + idx * period - ts) > 1e-6):
        raise DataError(f"panel {panel_id}: timestamps do not fit a uniform grid")
    grid = np.full(n_slots, np.nan)
    grid[idx] = vals
    return PanelSeries(panel_id, float(ts[0]), grid, period=period)


def ingest_csv(path) -> Fleet:
    """Read a fleet from CSV.

    The file must be UTF-8 with a header row carrying at least the columns
    ``timestamp`` (ISO-8601 or epoch seconds), ``panel_id`` and ``current_a``
    (amperes).  Rows may be interleaved across panels but must be strictly
    increasing in time within each panel.  Readings in [-0.1, 0) A are
    clamped to zero; anything below -0.1 A is rejected.

    Raises
    ------
    DataError
        On an empty file, a malformed row (the message carries the line
        number), non-monotonic per-panel timestamps, or a current below
        the sensor floor.
    """
    per_panel: dict[str, tuple[list, list, list]] = {}
    n_rows = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: no records")
        cols = [c.strip() for c in header]
        missing = [c for c in CSV_COLUMNS if c not in cols]
        if missing:
            raise DataError(f"{path}: missing required column(s): {', '.join(missing)}")
        i_ts, i_id, i_cur = (cols.index(c) for c in CSV_COLUMNS)
        width = max(i_ts, i_id, i_cur) + 1
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < width:
                raise DataError(
                    f"{path}:{line_no}: malformed row: expected at least {width} columns"
                )
            try:
                ts = _parse_timestamp(row[i_ts])
            except ValueError:
                raise DataError(
                    f"{path}:{line_no}: malformed row: bad timestamp {row[i_ts]!r}"
                ) from None
            panel_id = row[i_id].strip()
            if not panel_id:
                raise DataError(f"{path}:{line_no}: malformed row: empty panel_id")
            try:
                current = float(row[i_cur])
            except ValueError:
                raise DataError(
                    f"{path}:{line_no}: malformed row: bad current_a {row[i_cur]!r}"
                ) from None
            if not math.isfinite(current):
                raise DataError(f"{path}:{line_no}: malformed row: non-finite current_a")
            if current < MIN_CURRENT_A:
                raise DataError(
                    f"{path}:{line_no}: panel {panel_id}: current {current} A is below "
                    f"the sensor floor {MIN_CURRENT_A} A"
                )
            current = max(current, 0.0)
            bucket = per_panel.setdefault(panel_id, ([], [], []))
            bucket[0].append(ts)
            bucket[1].append(current)
            bucket[2].append(line_no)
            n_rows += 1
    if n_rows == 0:
        raise DataError(f"{path}: no records")
    series = []
    for panel_id, (tss, currents, lines) in per_panel.items():
        ts = np.asarray(tss, dtype=np.float64)
        bad = np.nonzero(np.diff(ts) <= 0)[0]
        if bad.size:
            raise DataError(
                f"{path}:{lines[bad[0] + 1]}: panel {panel_id}: non-monotonic timestamp"
            )
        series.append(_grid_from_rows(panel_id, ts, np.asarray(currents, dtype=np.float64)))
    return Fleet.build(series)


def align_to_grid(fleet: Fleet, period: float = 60.0) -> Fleet:
    """Resample every series onto a shared uniform grid.

    The grid starts at the latest member start time and covers the
    intersection of all member extents; values are linearly interpolated.
    Samples already on the grid are preserved exactly.  Members must be
    complete (no NaN); repair gaps with :func:`fill_missing` first.
    """
    if not (period > 0):
        raise ValueError(f"period must be positive, got {period}")
    for s in fleet.series:
        if len(s) < 2:
            raise ValueError(f"panel {s.panel_id}: need at least 2 samples to resample")
        if not s.is_complete:
            raise DataError(f"panel {s.panel_id}: has missing samples; fill_missing first")
    start = max(s.start_time for s in fleet.series)
    end = min(s.end_time for s in fleet.series)
    if end < start:
        raise ValueError("empty temporal intersection across panels")
    n = int(math.floor((end - start) / period + 1e-9)) + 1
    if n < 2:
        raise ValueError(
            f"temporal intersection [{start}, {end}] is shorter than one {period} s step"
        )
    grid = start + period * np.arange(n)
    resampled = tuple(
        PanelSeries(s.panel_id, float(start), np.interp(grid, s.times, s.values), period)
        for s in fleet.series
    )
    return Fleet(resampled, grid_aligned=True)


def fill_missing(series: PanelSeries, max_gap: int = 5) -> PanelSeries:
    """Linearly interpolate NaN gaps of at most ``max_gap`` samples.

    Present samples are never modified.  A gap longer than ``max_gap`` or a
    gap touching the series boundary (nothing to interpolate from) raises
    :class:`DataError` naming the panel and the gap location.
    """
    if max_gap < 1:
        raise ValueError(f"max_gap must be >= 1, got {max_gap}")
    vals = series.values
    mask = np.isnan(vals)
    if not mask.any():
        return series
    # Locate runs of consecutive NaN.
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    for run_start, run_end in zip(edges[::2], edges[1::2]):
        run_len = run_end - run_start
        where = f"samples {run_start}..{run_end - 1} (t={series.start_time + run_start * series.period:g})"
        if run_start == 0 or run_end == vals.size:
            raise DataError(
                f"panel {series.panel_id}: gap at the series boundary at {where} "
                "cannot be interpolated"
            )
        if run_len > max_gap:
            raise DataError(
                f"panel {series.panel_id}: gap of {run_len} samples at {where} "
                f"exceeds max_gap={max_gap}"
            )
    idx = np.arange(vals.size)
    filled = vals.copy()
    filled[mask] = np.interp(idx[mask], idx[~mask], vals[~mask])
    return series.with_values(filled)


def fill_missing_fleet(fleet: Fleet, max_gap: int = 5) -> Fleet:
    """Apply :func:`fill_missing` to every member and rebuild the fleet."""
    return Fleet.build(fill_missing(s, max_gap) for s in fleet.series)


def slice_window(fleet: Fleet, window: WindowSpec) -> Fleet:
    """Truncate every series of a grid-aligned fleet to ``window``."""
    if not fleet.grid_aligned:
        raise ValueError("fleet must be grid-aligned before windowing")
    ref = fleet.series[0]
    fractional = window.start_offset / ref.period
    idx = int(round(fractional))
    if abs(fractional - idx) > 1e-9:
        raise ValueError(
            f"window start_offset {window.start_offset} s is not a multiple of "
            f"the {ref.period} s grid period"
        )
    stop = idx + window.length
    if idx < 0 or stop > len(ref):
        raise ValueError(
            f"window [{idx}, {stop}) out of bounds for series of length {len(ref)}"
        )
    sliced = tuple(
        PanelSeries(s.panel_id, s.start_time + idx * s.period, s.values[idx:stop], s.period)
        for s in fleet.series
    )
    return Fleet(sliced, grid_aligned=True)


def znormalize(series: PanelSeries) -> PanelSeries:
    """Shift and scale a series to zero mean and unit standard deviation.

    Optional preprocessing, off by default everywhere: the fault signature
    this pipeline targets is an amplitude loss, which normalization erases.
    """
    if len(series) < 2:
        raise ValueError(f"panel {series.panel_id}: need at least 2 samples to normalize")
    if not series.is_complete:
        raise DataError(f"panel {series.panel_id}: has missing samples; fill_missing first")
    mean = float(series.values.mean())
    std = float(series.values.std())
    if std == 0.0:
        raise ValueError(f"panel {series.panel_id}: zero variance, cannot z-normalize")
    return series.with_values((series.values - mean) / std)
