"""Synthetic PV fleets with ground-truth fault labels.

A clear-sky day is a half-sine current bell between sunrise and sunset;
faults transform it per panel and seeded Gaussian noise is added on top.
Snail-trail discolorations barely change the produced current (scale just
below 1), which is exactly why an amplitude-based detector misses them --
they are generated to exercise that documented limitation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .signals import CSV_COLUMNS, Fleet, PanelSeries

HEALTHY = "healthy"
ABNORMAL = "abnormal"


@dataclass(frozen=True)
class CloudEvent:
    """Shared irradiance dip: currents scale by (1 - attenuation) inside it."""

    start_min: float
    duration_min: float
    attenuation: float

    def __post_init__(self):
        if not (0 <= self.start_min < 1440):
            raise ValueError(f"cloud start_min must be in [0, 1440), got {self.start_min}")
        if not (self.duration_min > 0):
            raise ValueError(f"cloud duration_min must be positive, got {self.duration_min}")
        if not (0 < self.attenuation < 1):
            raise ValueError(f"cloud attenuation must be in (0, 1), got {self.attenuation}")


@dataclass(frozen=True)
class DayModel:
    """Shape of a clear-sky day on a one-minute grid."""

    sunrise_min: float = 360.0
    sunset_min: float = 1200.0
    peak_current: float = 8.0
    noise_sigma: float = 0.16
    samples: int = 1440
    cloud_events: tuple[CloudEvent, ...] = ()

    def __post_init__(self):
        if not (0 <= self.sunrise_min < self.sunset_min <= 1440):
            raise ValueError(
                f"need 0 <= sunrise < sunset <= 1440, got {self.sunrise_min}, {self.sunset_min}"
            )
        if not (self.peak_current > 0):
            raise ValueError(f"peak_current must be positive, got {self.peak_current}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not (2 <= self.samples <= 1440):
            raise ValueError(f"samples must be in [2, 1440], got {self.samples}")
        object.__setattr__(self, "cloud_events", tuple(self.cloud_events))


_KINDS = ("healthy", "broken_glass", "shading", "snail_trail")


@dataclass(frozen=True)
class FaultProfile:
    """Ground-truth fault specification for one panel.

    ``broken_glass`` and ``snail_trail`` scale the whole curve by ``scale``;
    ``shading`` scales by (1 - depth) inside [start_min, end_min).  Snail
    trails count as *healthy* ground truth: they do not (yet) reduce output.
    """

    kind: str
    scale: float | None = None
    start_min: float | None = None
    end_min: float | None = None
    depth: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}, expected one of {_KINDS}")
        if self.kind == "broken_glass" and not (self.scale is not None and 0 < self.scale < 1):
            raise ValueError(f"broken_glass scale must be in (0, 1), got {self.scale}")
        if self.kind == "snail_trail" and not (self.scale is not None and 0.97 <= self.scale < 1):
            raise ValueError(f"snail_trail scale must be in [0.97, 1), got {self.scale}")
        if self.kind == "shading":
            if self.depth is None or not (0 < self.depth < 1):
                raise ValueError(f"shading depth must be in (0, 1), got {self.depth}")
            if self.start_min is None or self.end_min is None or not (
                0 <= self.start_min < self.end_min <= 1440
            ):
                raise ValueError(
                    f"shading needs 0 <= start_min < end_min <= 1440, "
                    f"got {self.start_min}, {self.end_min}"
                )

    @classmethod
    def healthy(cls) -> "FaultProfile":
        return cls("healthy")

    @classmethod
    def broken_glass(cls, scale: float = 0.75) -> "FaultProfile":
        return cls("broken_glass", scale=scale)

    @classmethod
    def shading(cls, start_min: float, end_min: float, depth: float) -> "FaultProfile":
        return cls("shading", start_min=start_min, end_min=end_min, depth=depth)

    @classmethod
    def snail_trail(cls, scale: float = 0.99) -> "FaultProfile":
        return cls("snail_trail", scale=scale)

    @property
    def label(self) -> str:
        return HEALTHY if self.kind in ("healthy", "snail_trail") else ABNORMAL

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for field in ("scale", "start_min", "end_min", "depth"):
            value = getattr(self, field)
            if value is not None:
                out[field] = value
        return out


def clear_sky_current(minute: float, day: DayModel) -> float:
    """Clear-sky current (amperes) at a given minute of the day."""
    if not (0 <= minute < 1440):
        raise ValueError(f"minute must be in [0, 1440), got {minute}")
    if minute <= day.sunrise_min or minute >= day.sunset_min:
        base = 0.0
    else:
        phase = (minute - day.sunrise_min) / (day.sunset_min - day.sunrise_min)
        base = day.peak_current * math.sin(math.pi * phase)
    for event in day.cloud_events:
        if event.start_min <= minute < event.start_min + event.duration_min:
            base *= 1.0 - event.attenuation
    return base


def _clear_sky_curve(day: DayModel) -> np.ndarray:
    return np.asarray([clear_sky_current(m, day) for m in range(day.samples)])


def generate_fleet(n_panels: int, profiles, day: DayModel | None = None, seed: int = 0):
    """Build a synthetic fleet plus its ground-truth labels.

    Returns ``(fleet, labels)`` with ``labels`` mapping panel_id to
    ``"healthy"`` or ``"abnormal"``.  Panel noise streams are derived from
    ``(seed, panel index)``, so output is bit-for-bit reproducible and
    independent of any parallelism in the caller.
    """
    if n_panels < 1:
        raise ValueError(f"n_panels must be >= 1, got {n_panels}")
    profiles = list(profiles)
    if len(profiles) != n_panels:
        raise ValueError(f"got {len(profiles)} profiles for {n_panels} panels")
    day = day or DayModel()
    base = _clear_sky_curve(day)
    minutes = np.arange(day.samples, dtype=np.float64)
    width = max(2, len(str(n_panels - 1)))
    series = []
    labels = {}
    for i, profile in enumerate(profiles):
        panel_id = f"P{i:0{width}d}"
        values = base.copy()
        if profile.kind in ("broken_glass", "snail_trail"):
            values *= profile.scale
        elif profile.kind == "shading":
            mask = (minutes >= profile.start_min) & (minutes < profile.end_min)
            values[mask] *= 1.0 - profile.depth
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        values += rng.normal(0.0, day.noise_sigma, day.samples)
        np.maximum(values, 0.0, out=values)
        series.append(PanelSeries(panel_id, 0.0, values, 60.0))
        labels[panel_id] = profile.label
    return Fleet(tuple(series), grid_aligned=True), labels


def _format_number(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def write_fleet_csv(fleet: Fleet, path) -> None:
    """Write a fleet in the ingestion CSV schema (lossless float formatting)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for s in fleet.series:
            for t, v in zip(s.times, s.values):
                writer.writerow([_format_number(t), s.panel_id, repr(float(v))])


def write_labels_json(path, labels: dict, profiles=None, seed: int | None = None) -> None:
    """Ground-truth sidecar: labels plus the generating profiles and seed."""
    payload: dict = {}
    if seed is not None:
        payload["seed"] = seed
    payload["labels"] = dict(labels)
    if profiles is not None:
        width = max(2, len(str(len(profiles) - 1)))
        payload["profiles"] = {
            f"P{i:0{width}d}": p.to_dict() for i, p in enumerate(profiles)
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_labels_json(path) -> dict:
    """Load the ``labels`` mapping from a ground-truth sidecar file."""
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
            return dict(payload["labels"])
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: bad labels file: {exc}") from None
