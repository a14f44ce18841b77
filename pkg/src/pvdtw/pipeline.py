"""End-to-end diagnosis: align, cluster, decide healthy vs abnormal, report.

Cluster labeling is a heuristic: with two clusters, the one whose members
produce more charge (greater mean integrated current) is called healthy,
because the detectable fault classes all *lose* output.  The paper trail of
each run (seed, config, model) is embedded in the report so any verdict can
be reproduced.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .kmeans import ClusterModel, FitHistory, KMeansConfig, fit
from .signals import Fleet, WindowSpec, align_to_grid, slice_window, znormalize
from .synth import ABNORMAL, HEALTHY


@dataclass(frozen=True)
class ClusterStats:
    index: int
    label: str
    size: int
    mean_integrated_current: float


@dataclass(frozen=True)
class DiagnosisReport:
    """Per-panel verdicts with the model and statistics behind them.

    For windowed runs, ``window_votes`` carries the per-panel vote tallies
    and the embedded model refers to the first window (see the notes).
    """

    verdicts: dict[str, str]
    clusters: tuple[ClusterStats, ...]
    model: ClusterModel
    config: KMeansConfig
    notes: tuple[str, ...] = ()
    window_votes: dict[str, dict[str, int]] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "verdicts", dict(self.verdicts))
        object.__setattr__(self, "clusters", tuple(self.clusters))
        object.__setattr__(self, "notes", tuple(self.notes))
        if len(self.verdicts) != len(self.model.panel_ids):
            raise ValueError("one verdict per panel is required")
        counts = np.bincount(self.model.assignments, minlength=self.model.k)
        for stats in self.clusters:
            if counts[stats.index] != stats.size:
                raise ValueError(f"cluster {stats.index} statistics do not match assignments")

    def to_json(self) -> str:
        payload = {
            "seed": self.model.seed,
            "config": self.config.to_dict(),
            "verdicts": dict(self.verdicts),
            "clusters": [
                {
                    "index": c.index,
                    "label": c.label,
                    "size": c.size,
                    "mean_integrated_current": c.mean_integrated_current,
                }
                for c in self.clusters
            ],
            "window_votes": self.window_votes,
            "notes": list(self.notes),
            "model": json.loads(self.model.to_json()),
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DiagnosisReport":
        try:
            obj = json.loads(text)
            model = ClusterModel.from_json(json.dumps(obj["model"]))
            return cls(
                verdicts=dict(obj["verdicts"]),
                clusters=tuple(
                    ClusterStats(c["index"], c["label"], c["size"], c["mean_integrated_current"])
                    for c in obj["clusters"]
                ),
                model=model,
                config=KMeansConfig.from_dict(obj["config"]),
                notes=tuple(obj.get("notes", ())),
                window_votes=obj.get("window_votes"),
            )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"bad diagnosis report JSON: {exc}") from None

    def to_text(self) -> str:
        band = self.config.band.radius
        lines = [
            f"fleet diagnosis  (seed {self.model.seed}, k={self.model.k}, "
            f"band={'unconstrained' if band is None else band})",
            f"panels: {len(self.verdicts)}   converged: {'yes' if self.model.converged else 'no'} "
            f"({self.model.n_iter} iterations)   inertia: {self.model.inertia:.6g}",
        ]
        for c in self.clusters:
            lines.append(
                f"cluster {c.index}: {c.label:<8} size {c.size:<3} "
                f"mean integrated current {c.mean_integrated_current:.6g} A-samples"
            )
        lines.append("verdicts:")
        for pid, cluster in zip(self.model.panel_ids, self.model.assignments):
            entry = f"  {pid}  {self.verdicts[pid]:<8} (cluster {int(cluster)})"
            if self.window_votes is not None:
                votes = self.window_votes[pid]
                entry += f"  votes healthy={votes[HEALTHY]} abnormal={votes[ABNORMAL]}"
            lines.append(entry)
        if self.notes:
            lines.append("notes:")
            lines.extend(f"  - {note}" for note in self.notes)
        return "\n".join(lines) + "\n"


def _label_with_notes(model: ClusterModel, fleet: Fleet):
    if model.k != 2:
        raise ValueError(f"healthy/abnormal labeling requires exactly 2 clusters, got k={model.k}")
    if fleet.panel_ids != model.panel_ids:
        raise ValueError("fleet panels do not match the model")
    integrated = fleet.values_matrix().sum(axis=1)
    means = [float(integrated[model.assignments == c].mean()) for c in (0, 1)]
    sizes = [int(np.sum(model.assignments == c)) for c in (0, 1)]
    notes: list[str] = []
    if means[0] > means[1]:
        healthy = 0
    elif means[1] > means[0]:
        healthy = 1
    elif sizes[0] != sizes[1]:
        healthy = 0 if sizes[0] > sizes[1] else 1
        notes.append("cluster energies tied exactly; the larger cluster was labeled healthy")
    else:
        healthy = 0
        notes.append("cluster energies and sizes tied exactly; cluster 0 was labeled healthy")
    labels = {healthy: HEALTHY, 1 - healthy: ABNORMAL}
    stats = tuple(
        ClusterStats(c, labels[c], sizes[c], means[c]) for c in (0, 1)
    )
    return labels, stats, notes


def label_clusters(model: ClusterModel, fleet: Fleet) -> dict[int, str]:
    """Label the two clusters: more mean integrated current means healthy.

    Ties fall back to the larger cluster, then to cluster 0.  This automates
    what field inspection would otherwise decide; it assumes the fault
    classes of interest reduce current output.
    """
    labels, _, _ = _label_with_notes(model, fleet)
    return labels


def trim_night(fleet: Fleet, threshold: float) -> Fleet:
    """Drop leading/trailing samples where no panel reaches ``threshold`` amperes."""
    if not fleet.grid_aligned:
        raise ValueError("fleet must be grid-aligned to trim")
    peak = fleet.values_matrix().max(axis=0)
    keep = np.flatnonzero(peak >= threshold)
    if keep.size < 2:
        raise ValueError(f"night threshold {threshold} A keeps fewer than 2 samples")
    start, stop = int(keep[0]), int(keep[-1]) + 1
    if start == 0 and stop == len(fleet.series[0]):
        return fleet
    period = fleet.series[0].period
    return slice_window(fleet, WindowSpec(start * period, stop - start))


def prepare_fleet(
    fleet: Fleet,
    period: float | None = None,
    night_threshold: float | None = None,
) -> Fleet:
    """Alignment phase: resample onto a shared grid when needed, then trim."""
    if not fleet.grid_aligned:
        p = period if period is not None else min(s.period for s in fleet.series)
        fleet = align_to_grid(fleet, p)
    elif period is not None and fleet.series[0].period != period:
        fleet = align_to_grid(fleet, period)
    if night_threshold is not None:
        fleet = trim_night(fleet, night_threshold)
    return fleet


def diagnose(
    fleet: Fleet,
    config: KMeansConfig | None = None,
    *,
    threads: int = 1,
    period: float | None = None,
    night_threshold: float | None = None,
    normalize: bool = False,
    history: FitHistory | None = None,
) -> DiagnosisReport:
    """Run the full pipeline on a fleet and report per-panel verdicts.

    With ``normalize`` the clustering runs on z-normalized series while the
    healthy/abnormal energy rule still uses the raw currents.  Deterministic
    for fixed (fleet, config) regardless of ``threads``.
    """
    config = config or KMeansConfig()
    prepared = prepare_fleet(fleet, period, night_threshold)
    if normalize:
        cluster_fleet = Fleet.build(znormalize(s) for s in prepared.series)
    else:
        cluster_fleet = prepared
    model = fit(cluster_fleet, config, threads=threads, history=history)
    labels, stats, notes = _label_with_notes(model, prepared)
    verdicts = {
        pid: labels[int(c)] for pid, c in zip(model.panel_ids, model.assignments)
    }
    return DiagnosisReport(verdicts, stats, model, config, tuple(notes))


def windowed_diagnose(
    fleet: Fleet,
    window_len: int,
    stride: int,
    config: KMeansConfig | None = None,
    *,
    threads: int = 1,
    period: float | None = None,
    night_threshold: float | None = None,
    normalize: bool = False,
) -> DiagnosisReport:
    """Diagnose every sliding window and majority-vote the verdicts.

    A tie votes abnormal: in fault screening, a false alarm costs a truck
    roll, a miss costs a dead string.  The embedded model and statistics are
    those of the first window; the votes carry the cross-window picture.
    """
    if window_len < 3:
        raise ValueError(f"window_len must be >= 3, got {window_len}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    config = config or KMeansConfig()
    prepared = prepare_fleet(fleet, period, night_threshold)
    n = len(prepared.series[0])
    if n < window_len:
        raise ValueError(f"fleet extent {n} samples is shorter than window_len {window_len}")
    grid_period = prepared.series[0].period
    offsets = range(0, n - window_len + 1, stride)
    votes = {pid: {HEALTHY: 0, ABNORMAL: 0} for pid in prepared.panel_ids}
    first = None
    for offset in offsets:
        window = slice_window(prepared, WindowSpec(offset * grid_period, window_len))
        report = diagnose(window, config, threads=threads, normalize=normalize)
        if first is None:
            first = report
        for pid, verdict in report.verdicts.items():
            votes[pid][verdict] += 1
    verdicts = {
        pid: ABNORMAL if tally[ABNORMAL] >= tally[HEALTHY] else HEALTHY
        for pid, tally in votes.items()
    }
    notes = first.notes + (
        f"verdicts are a majority vote over {len(offsets)} windows of {window_len} samples "
        f"(stride {stride}); ties vote abnormal; embedded model and statistics are the "
        "first window's",
    )
    return DiagnosisReport(verdicts, first.clusters, first.model, config, notes, votes)


def write_plot_csv(path, fleet: Fleet, report: DiagnosisReport) -> None:
    """Per-sample CSV (panel_id, time, current_a, cluster, verdict) for plotting
    the fleet's curves colored by cluster."""
    if not fleet.grid_aligned:
        raise ValueError("fleet must be grid-aligned to export plot data")
    if fleet.panel_ids != report.model.panel_ids:
        raise ValueError("fleet does not match the report")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["panel_id", "time", "current_a", "cluster", "verdict"])
        for series, cluster in zip(fleet.series, report.model.assignments):
            verdict = report.verdicts[series.panel_id]
            for t, v in zip(series.times, series.values):
                t = float(t)
                writer.writerow(
                    [
                        series.panel_id,
                        str(int(t)) if t.is_integer() else repr(t),
                        repr(float(v)),
                        int(cluster),
                        verdict,
                    ]
                )
