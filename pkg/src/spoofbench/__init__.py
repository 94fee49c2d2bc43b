"""Seed-reproducible benchmark of GNN and JPDA tracking under radar
spoofing: scenario truth, noisy sensing, spoof injection, two trackers,
a metric suite, and an artifact-writing harness."""

from .errors import ConfigError
from .geometry import Region
from .scenario import (
    GroundTruth,
    PlatformSpec,
    ScenarioConfig,
    build_scenario,
    default_scenario_config,
    load_scenario_config,
)
from .sensing import (
    Detection,
    DetectionFrame,
    Label,
    SensorConfig,
    generate_clean_run,
    read_detection_csv,
    write_detection_csv,
)
from .spoofing import (
    SpoofConfig,
    SpoofType,
    SpoofedRun,
    apply_spoof,
    inject_drift,
    inject_ghost,
    inject_mirror,
)
from .estimation import (
    GateResult,
    KinematicEstimate,
    estimate_from_detection,
    gate,
    kf_predict,
    kf_update,
    mahalanobis2,
    nees,
)
from .tracking import (
    Track,
    TrackStatus,
    TrackerParams,
    TrackerRun,
    run_tracker,
    read_snapshots_jsonl,
    write_snapshots_jsonl,
)
from .tracker_gnn import build_cost_matrix, gnn_step, hungarian
from .tracker_jpda import association_probabilities, jpda_step
from .metrics import (
    DriftReport,
    RunReport,
    assignment_divergence,
    cluster_purity,
    compute_run_report,
    drift_from_truth,
    match_tracks_to_truth,
    normalized_impact,
    spoof_stats,
)
from .harness import (
    BenchmarkConfig,
    ComparisonTable,
    compare_trackers,
    default_benchmark_config,
    export_plot_data,
    load_benchmark_config,
    run_benchmark,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Region",
    "GroundTruth",
    "PlatformSpec",
    "ScenarioConfig",
    "build_scenario",
    "default_scenario_config",
    "load_scenario_config",
    "Detection",
    "DetectionFrame",
    "Label",
    "SensorConfig",
    "generate_clean_run",
    "read_detection_csv",
    "write_detection_csv",
    "SpoofConfig",
    "SpoofType",
    "SpoofedRun",
    "apply_spoof",
    "inject_drift",
    "inject_ghost",
    "inject_mirror",
    "GateResult",
    "KinematicEstimate",
    "estimate_from_detection",
    "gate",
    "kf_predict",
    "kf_update",
    "mahalanobis2",
    "nees",
    "Track",
    "TrackStatus",
    "TrackerParams",
    "TrackerRun",
    "run_tracker",
    "read_snapshots_jsonl",
    "write_snapshots_jsonl",
    "build_cost_matrix",
    "gnn_step",
    "hungarian",
    "association_probabilities",
    "jpda_step",
    "DriftReport",
    "RunReport",
    "assignment_divergence",
    "cluster_purity",
    "compute_run_report",
    "drift_from_truth",
    "match_tracks_to_truth",
    "normalized_impact",
    "spoof_stats",
    "BenchmarkConfig",
    "ComparisonTable",
    "compare_trackers",
    "default_benchmark_config",
    "export_plot_data",
    "load_benchmark_config",
    "run_benchmark",
]
