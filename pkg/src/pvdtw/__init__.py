"""Unsupervised fault detection for photovoltaic fleets.

Per-panel current signals are compared with dynamic time warping, clustered
by k-means with barycenter-averaged centroids, and the lower-output cluster
is flagged abnormal.  The :mod:`pvdtw.synth` module generates labeled
synthetic fleets for desk-scale experiments; :mod:`pvdtw.cli` chains
everything behind the ``pvdtw`` command.
"""

from .dba import dba, frechet_objective, medoid
from .dtw import (
    UNCONSTRAINED,
    Band,
    DistanceMatrix,
    distance_matrix,
    dtw,
    dtw_path,
    lb_keogh,
)
from .errors import DataError
from .kmeans import (
    ClusterModel,
    FitHistory,
    KMeansConfig,
    assign,
    fit,
    init_centroids,
    predict,
)
from .pipeline import (
    ClusterStats,
    DiagnosisReport,
    diagnose,
    label_clusters,
    prepare_fleet,
    trim_night,
    windowed_diagnose,
    write_plot_csv,
)
from .signals import (
    Fleet,
    PanelSeries,
    WindowSpec,
    align_to_grid,
    fill_missing,
    fill_missing_fleet,
    ingest_csv,
    slice_window,
    znormalize,
)
from .synth import (
    ABNORMAL,
    HEALTHY,
    CloudEvent,
    DayModel,
    FaultProfile,
    clear_sky_current,
    generate_fleet,
    read_labels_json,
    write_fleet_csv,
    write_labels_json,
)

__version__ = "0.1.0"

__all__ = [
    "ABNORMAL",
    "Band",
    "CloudEvent",
    "ClusterModel",
    "ClusterStats",
    "DataError",
    "DayModel",
    "DiagnosisReport",
    "DistanceMatrix",
    "FaultProfile",
    "FitHistory",
    "Fleet",
    "HEALTHY",
    "KMeansConfig",
    "PanelSeries",
    "UNCONSTRAINED",
    "WindowSpec",
    "align_to_grid",
    "assign",
    "clear_sky_current",
    "dba",
    "diagnose",
    "distance_matrix",
    "dtw",
    "dtw_path",
    "fill_missing",
    "fill_missing_fleet",
    "fit",
    "frechet_objective",
    "generate_fleet",
    "ingest_csv",
    "init_centroids",
    "label_clusters",
    "lb_keogh",
    "medoid",
    "predict",
    "prepare_fleet",
    "read_labels_json",
    "slice_window",
    "trim_night",
    "windowed_diagnose",
    "write_fleet_csv",
    "write_labels_json",
    "write_plot_csv",
    "znormalize",
]
