"""Command-line front end: synth | dist | cluster | diagnose | report.

Exit codes: 0 success, 1 I/O or data error, 2 usage error.  Outputs are
byte-identical for identical inputs and flags, independent of --threads;
progress lines go to stderr.  A JSON config file (--config) supplies any
long-form flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dtw import DistanceMatrix, distance_matrix
from .errors import DataError
from .kmeans import KMeansConfig, fit
from .pipeline import DiagnosisReport, diagnose, prepare_fleet, windowed_diagnose, write_plot_csv
from .signals import Fleet, fill_missing_fleet, ingest_csv, znormalize
from .synth import DayModel, FaultProfile, generate_fleet, write_fleet_csv, write_labels_json

_SYNTH_DEFAULTS = {
    "panels": 12,
    "faulty": 4,
    "scale": 0.75,
    "snail": 0,
    "snail_scale": 0.99,
    "shading": 0,
    "shading_depth": 0.5,
    "shading_start": 600.0,
    "shading_end": 720.0,
    "noise": 0.16,
    "peak": 8.0,
    "sunrise": 360.0,
    "sunset": 1200.0,
    "samples": 1440,
    "seed": 0,
    "output": "fleet.csv",
    "labels": None,
}

_LOAD_DEFAULTS = {
    "period": None,
    "max_gap": 5,
    "threads": 1,
}

_MODEL_DEFAULTS = {
    "k": 2,
    "seed": 0,
    "band": None,
    "n_init": 5,
    "max_iter": 50,
    "dba_max_iter": 30,
    "dba_tol": 1e-5,
    "normalize": False,
}

DEFAULTS = {
    "synth": _SYNTH_DEFAULTS,
    "dist": {**_LOAD_DEFAULTS, "band": None, "output": None},
    "cluster": {**_LOAD_DEFAULTS, **_MODEL_DEFAULTS, "output": None},
    "diagnose": {
        **_LOAD_DEFAULTS,
        **_MODEL_DEFAULTS,
        "window": None,
        "stride": 1,
        "trim_night": None,
        "output": None,
        "plot": None,
    },
    "report": {"output": None},
}


def _log(message: str) -> None:
    print(f"[pvdtw] {message}", file=sys.stderr)


def _add_option(parser, *names, **kwargs):
    kwargs.setdefault("default", argparse.SUPPRESS)
    parser.add_argument(*names, **kwargs)


def _add_load_options(parser):
    parser.add_argument("input", help="fleet CSV (timestamp, panel_id, current_a)")
    _add_option(parser, "--period", type=float, help="resampling period in seconds (default: keep the data's grid)")
    _add_option(parser, "--max-gap", dest="max_gap", type=int, help="longest NaN gap to interpolate (samples)")
    _add_option(parser, "--threads", type=int, help="worker threads (output is independent of this)")
    _add_option(parser, "--config", help="JSON file with flag defaults; explicit flags win")


def _add_model_options(parser):
    _add_option(parser, "--k", type=int, help="number of clusters")
    _add_option(parser, "--seed", type=int, help="seed for the clustering restarts")
    _add_option(parser, "--band", type=int, help="Sakoe-Chiba band radius (default: unconstrained)")
    _add_option(parser, "--n-init", dest="n_init", type=int, help="independent restarts")
    _add_option(parser, "--max-iter", dest="max_iter", type=int, help="max k-means iterations")
    _add_option(parser, "--dba-max-iter", dest="dba_max_iter", type=int, help="max barycenter updates")
    _add_option(parser, "--dba-tol", dest="dba_tol", type=float, help="barycenter relative-improvement stop")
    _add_option(parser, "--normalize", action="store_true", help="z-normalize series before clustering")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="pvdtw",
        description="Unsupervised PV-panel fault detection by DTW k-means clustering of current signals.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic fleet CSV plus ground-truth labels")
    _add_option(p, "--panels", type=int, help="total panel count")
    _add_option(p, "--faulty", type=int, help="panels with a broken-glass fault")
    _add_option(p, "--scale", type=float, help="broken-glass amplitude scale in (0, 1)")
    _add_option(p, "--snail", type=int, help="panels with a snail-trail discoloration")
    _add_option(p, "--snail-scale", dest="snail_scale", type=float, help="snail-trail amplitude scale in [0.97, 1)")
    _add_option(p, "--shading", type=int, help="panels with interval shading")
    _add_option(p, "--shading-depth", dest="shading_depth", type=float)
    _add_option(p, "--shading-start", dest="shading_start", type=float)
    _add_option(p, "--shading-end", dest="shading_end", type=float)
    _add_option(p, "--noise", type=float, help="Gaussian noise sigma in amperes")
    _add_option(p, "--peak", type=float, help="clear-sky peak current in amperes")
    _add_option(p, "--sunrise", type=float, help="sunrise, minutes from midnight")
    _add_option(p, "--sunset", type=float, help="sunset, minutes from midnight")
    _add_option(p, "--samples", type=int, help="samples per panel (one-minute grid)")
    _add_option(p, "--seed", type=int, help="generator seed")
    _add_option(p, "-o", "--output", help="fleet CSV path")
    _add_option(p, "--labels", help="labels JSON path (default: <output>.labels.json)")
    _add_option(p, "--config", help="JSON file with flag defaults; explicit flags win")

    p = sub.add_parser("dist", help="compute the pairwise DTW distance matrix of a fleet")
    _add_load_options(p)
    _add_option(p, "--band", type=int, help="Sakoe-Chiba band radius (default: unconstrained)")
    _add_option(p, "-o", "--output", help="matrix path (.json for JSON, else CSV; default: stdout)")

    p = sub.add_parser("cluster", help="fit the DTW k-means model and write it as JSON")
    _add_load_options(p)
    _add_model_options(p)
    _add_option(p, "-o", "--output", help="model JSON path (default: stdout)")

    p = sub.add_parser("diagnose", help="full pipeline: per-panel healthy/abnormal verdicts")
    _add_load_options(p)
    _add_model_options(p)
    _add_option(p, "--window", type=int, help="window length in samples; enables windowed majority vote")
    _add_option(p, "--stride", type=int, help="window stride in samples")
    _add_option(p, "--trim-night", dest="trim_night", type=float, help="drop edge samples where fleet-max current is below this")
    _add_option(p, "-o", "--output", help="report JSON path")
    _add_option(p, "--plot", help="per-sample plot-data CSV path")

    p = sub.add_parser("report", help="render a saved diagnosis report as text")
    p.add_argument("input", help="report JSON path")
    _add_option(p, "-o", "--output", help="text path (default: stdout)")

    return top


def _merge(command: str, ns: argparse.Namespace) -> argparse.Namespace:
    values = dict(DEFAULTS[command])
    provided = {k: v for k, v in vars(ns).items() if k != "command"}
    config_path = provided.pop("config", None)
    if config_path is not None:
        with open(config_path, encoding="utf-8") as fh:
            try:
                file_values = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"{config_path}: bad JSON: {exc}") from None
        if not isinstance(file_values, dict):
            raise DataError(f"{config_path}: config must be a JSON object")
        unknown = sorted(set(file_values) - set(values))
        if unknown:
            raise ValueError(f"{config_path}: unknown config key(s): {', '.join(unknown)}")
        values.update(file_values)
    values.update(provided)
    return argparse.Namespace(**values)


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_synth(ns) -> int:
    if ns.panels < 1:
        raise ValueError(f"panels must be >= 1, got {ns.panels}")
    for name in ("faulty", "snail", "shading"):
        if getattr(ns, name) < 0:
            raise ValueError(f"{name} must be >= 0, got {getattr(ns, name)}")
    n_fault = ns.faulty + ns.snail + ns.shading
    if n_fault > ns.panels:
        raise ValueError(f"faulty+snail+shading = {n_fault} exceeds panels = {ns.panels}")
    profiles = (
        [FaultProfile.healthy()] * (ns.panels - n_fault)
        + [FaultProfile.broken_glass(ns.scale)] * ns.faulty
        + [FaultProfile.shading(ns.shading_start, ns.shading_end, ns.shading_depth)] * ns.shading
        + [FaultProfile.snail_trail(ns.snail_scale)] * ns.snail
    )
    day = DayModel(
        sunrise_min=ns.sunrise,
        sunset_min=ns.sunset,
        peak_current=ns.peak,
        noise_sigma=ns.noise,
        samples=ns.samples,
    )
    fleet, labels = generate_fleet(ns.panels, profiles, day, ns.seed)
    write_fleet_csv(fleet, ns.output)
    labels_path = ns.labels or str(Path(ns.output).with_suffix(".labels.json"))
    write_labels_json(labels_path, labels, profiles, ns.seed)
    _log(
        f"synth: wrote {ns.panels} panels x {ns.samples} samples to {ns.output} "
        f"(labels: {labels_path})"
    )
    return 0


def _load_fleet(ns, night_threshold=None) -> Fleet:
    fleet = ingest_csv(ns.input)
    _log(f"ingest: {ns.input}: {len(fleet)} panels")
    fleet = fill_missing_fleet(fleet, ns.max_gap)
    fleet = prepare_fleet(fleet, period=ns.period, night_threshold=night_threshold)
    _log(f"align: {len(fleet.series[0])} samples at {fleet.series[0].period:g} s")
    return fleet


def _model_config(ns) -> KMeansConfig:
    return KMeansConfig(
        k=ns.k,
        max_iter=ns.max_iter,
        seed=ns.seed,
        band=ns.band,
        dba_max_iter=ns.dba_max_iter,
        dba_tol=ns.dba_tol,
        n_init=ns.n_init,
    )


def cmd_dist(ns) -> int:
    fleet = _load_fleet(ns)
    if len(fleet) < 2:
        raise ValueError(f"{ns.input}: need >= 2 panels for a distance matrix, got {len(fleet)}")
    matrix = distance_matrix(fleet, ns.band, threads=ns.threads)
    _log(f"dist: {matrix.n}x{matrix.n} matrix")
    if ns.output is None:
        sys.stdout.write(matrix.to_csv_text())
    elif ns.output.endswith(".json"):
        _write_text(ns.output, matrix.to_json() + "\n")
    else:
        matrix.to_csv(ns.output)
    return 0


def cmd_cluster(ns) -> int:
    fleet = _load_fleet(ns)
    config = _model_config(ns)
    if config.k > len(fleet):
        raise ValueError(f"{ns.input}: k={config.k} exceeds fleet size {len(fleet)}")
    if ns.normalize:
        fleet = Fleet.build(znormalize(s) for s in fleet.series)
    model = fit(fleet, config, threads=ns.threads)
    _log(f"cluster: k={config.k} seed={config.seed} inertia={model.inertia:.6g}")
    text = model.to_json() + "\n"
    if ns.output is None:
        sys.stdout.write(text)
    else:
        _write_text(ns.output, text)
    return 0


def cmd_diagnose(ns) -> int:
    fleet = _load_fleet(ns, night_threshold=ns.trim_night)
    config = _model_config(ns)
    if config.k > len(fleet):
        raise ValueError(f"{ns.input}: k={config.k} exceeds fleet size {len(fleet)}")
    if ns.window is not None:
        report = windowed_diagnose(
            fleet, ns.window, ns.stride, config, threads=ns.threads, normalize=ns.normalize
        )
    else:
        report = diagnose(fleet, config, threads=ns.threads, normalize=ns.normalize)
    healthy = sum(1 for v in report.verdicts.values() if v == "healthy")
    _log(f"label: healthy={healthy} abnormal={len(report.verdicts) - healthy}")
    if ns.output is not None:
        _write_text(ns.output, report.to_json() + "\n")
    if ns.plot is not None:
        write_plot_csv(ns.plot, fleet, report)
    sys.stdout.write(report.to_text())
    return 0


def cmd_report(ns) -> int:
    with open(ns.input, encoding="utf-8") as fh:
        report = DiagnosisReport.from_json(fh.read())
    text = report.to_text()
    if ns.output is None:
        sys.stdout.write(text)
    else:
        _write_text(ns.output, text)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "dist": cmd_dist,
    "cluster": cmd_cluster,
    "diagnose": cmd_diagnose,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ns = _merge(args.command, args)
        return COMMANDS[args.command](ns)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
