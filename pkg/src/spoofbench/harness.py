"""Benchmark orchestration: spoof x tracker x seed grids, artifact
layout, cross-tracker comparison, and plot-data export.

Reproducibility contract: the whole pipeline is a pure function of the
benchmark config. The clean detection stream of a run depends only on
its seed, the spoof stream on (seed, spoof name), and tracker birth
draws on (seed, tracker), so adding or removing grid entries never
changes the randomness of the remaining runs, and both trackers face
bit-identical detection streams. Timestamps appear only in manifests.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from .errors import ConfigError
from .metrics import (
    compute_run_report,
    match_tracks_to_truth,
    normalized_impact,
    read_report_json,
    write_report_json,
)
from .scenario import ScenarioConfig, build_scenario, default_scenario_config
from .sensing import SensorConfig, generate_clean_run, read_detection_csv, write_detection_csv
from .spoofing import SpoofConfig, SpoofType, apply_spoof, write_spoof_log_csv
from .streams import derive_seed
from .tracker_gnn import gnn_step
from .tracker_jpda import jpda_step
from .tracking import (
    TrackerParams,
    read_snapshots_jsonl,
    run_tracker,
    write_snapshots_jsonl,
)

TRACKER_STEPS = {"gnn": gnn_step, "jpda": jpda_step}

# fixed slots so birth streams do not depend on grid composition
_TRACKER_SLOT = {"gnn": 0, "jpda": 1}

_SPOOF_STREAM_TAG = 101
_BIRTH_STREAM_TAG = 202


def _name_slot(name: str) -> int:
    # stable across processes and machines, unlike hash()
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "big")


@dataclass(frozen=True)
class BenchmarkConfig:
    scenario: ScenarioConfig
    sensor: SensorConfig
    spoof_grid: tuple  # of (name, SpoofConfig)
    trackers: tuple
    seeds: tuple
    tracker_params: Optional[TrackerParams] = None
    output_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.spoof_grid:
            raise ConfigError("spoof_grid must not be empty")
        if not self.trackers:
            raise ConfigError("trackers must not be empty")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        for tracker in self.trackers:
            if tracker not in TRACKER_STEPS:
                raise ConfigError(
                    f"unknown tracker {tracker!r}; choose from {sorted(TRACKER_STEPS)}"
                )
        names = [name for name, _ in self.spoof_grid]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate spoof names: {names}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("duplicate seeds")

    def resolved_params(self) -> TrackerParams:
        if self.tracker_params is not None:
            return self.tracker_params
        return TrackerParams(
            dt_s=self.scenario.dt_s,
            p_detect=self.sensor.p_detect,
            clutter_density=self.sensor.clutter_rate / self.sensor.fov.area,
        )

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario.as_dict(),
            "sensor": self.sensor.as_dict(),
            "spoof_grid": [
                {"name": name, **cfg.as_dict()} for name, cfg in self.spoof_grid
            ],
            "trackers": list(self.trackers),
            "seeds": list(self.seeds),
            "tracker_params": self.resolved_params().as_dict(),
            "output_dir": self.output_dir,
        }

    def digest(self) -> str:
        payload = self.as_dict()
        payload.pop("output_dir")
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkConfig":
        if not isinstance(d, dict):
            raise ConfigError("benchmark config must be an object")
        allowed = {
            "scenario",
            "sensor",
            "spoof_grid",
            "trackers",
            "seeds",
            "tracker_params",
            "output_dir",
        }
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown benchmark keys: {sorted(unknown)}")
        missing = {"scenario", "spoof_grid", "trackers", "seeds"} - set(d)
        if missing:
            raise ConfigError(f"benchmark config missing keys: {sorted(missing)}")
        scenario = ScenarioConfig.from_dict(d["scenario"])
        sensor = SensorConfig.from_dict(d.get("sensor", {}))
        if not isinstance(d["spoof_grid"], list) or not d["spoof_grid"]:
            raise ConfigError("spoof_grid must be a non-empty list")
        grid = tuple(
            _resolve_spoof_template(raw, scenario, sensor) for raw in d["spoof_grid"]
        )
        trackers = d["trackers"]
        if not isinstance(trackers, list):
            raise ConfigError("trackers must be a list")
        seeds = _resolve_seeds(d["seeds"])
        params = None
        if "tracker_params" in d:
            base = {
                "dt_s": scenario.dt_s,
                "p_detect": sensor.p_detect,
                "clutter_density": sensor.clutter_rate / sensor.fov.area,
            }
            merged = {**base, **d["tracker_params"]}
            merged["dt_s"] = scenario.dt_s  # the scenario clock always wins
            params = TrackerParams.from_dict(merged)
        return cls(
            scenario=scenario,
            sensor=sensor,
            spoof_grid=grid,
            trackers=tuple(str(t) for t in trackers),
            seeds=seeds,
            tracker_params=params,
            output_dir=d.get("output_dir"),
        )


def _resolve_seeds(raw) -> tuple:
    if isinstance(raw, list):
        if not raw:
            raise ConfigError("seeds list must not be empty")
        return tuple(int(s) for s in raw)
    if isinstance(raw, dict):
        unknown = set(raw) - {"base_seed", "count"}
        if unknown:
            raise ConfigError(f"unknown seed keys: {sorted(unknown)}")
        base = int(raw.get("base_seed", 0))
        count = int(raw.get("count", 1))
        if count < 1:
            raise ConfigError("seed count must be at least 1")
        return tuple(base + i for i in range(count))
    raise ConfigError("seeds must be a list or {base_seed, count}")


def _resolve_spoof_template(
    raw: dict, scenario: ScenarioConfig, sensor: SensorConfig
) -> tuple:
    """Fill scenario/sensor-dependent defaults into one grid entry."""
    if not isinstance(raw, dict):
        raise ConfigError("spoof grid entries must be objects")
    raw = dict(raw)
    name = str(raw.pop("name", raw.get("spoof_type", "")))
    if not name:
        raise ConfigError("spoof grid entry needs spoof_type or name")
    if "injection_window" not in raw and raw.get("spoof_type") != "clean":
        # default window: the middle 60% of the scenario
        T = scenario.n_steps
        raw["injection_window"] = [int(T * 0.2), int(T * 0.8)]
    if raw.get("spoof_type") == "ghost":
        raw.setdefault("ghost_sigma_m", sensor.noise_sigma_m)
        if raw.get("ghost_mode", "uniform") == "uniform" and "ghost_region" not in raw:
            raw["ghost_region"] = sensor.fov.as_dict()
    raw["dt_s"] = scenario.dt_s
    return name, SpoofConfig.from_dict(raw)


def load_benchmark_config(path) -> BenchmarkConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return BenchmarkConfig.from_dict(raw)


def default_benchmark_config(
    seeds: Sequence[int] = (0, 1, 2), output_dir: Optional[str] = None
) -> BenchmarkConfig:
    """Stock benchmark: the default scenario under all three spoof types
    plus a clean cell, both trackers."""
    scenario = default_scenario_config()
    sensor = SensorConfig()
    T = scenario.n_steps
    window = (int(T * 0.2), int(T * 0.8))
    grid = (
        ("drift", SpoofConfig(
            spoof_type=SpoofType.DRIFT,
            injection_window=window,
            alpha=3.0,
            drift_dir=(1.0, 0.0),
            dt_s=scenario.dt_s,
        )),
        ("ghost", SpoofConfig(
            spoof_type=SpoofType.GHOST,
            injection_window=window,
            ghost_rate=6.0,
            ghost_mode="near_track",
            ghost_region=sensor.fov,
            ghost_radius_m=8.0,
            ghost_offset_m=15.0,
            ghost_offset_dir=(1.0, 0.0),
            ghost_sigma_m=sensor.noise_sigma_m,
            dt_s=scenario.dt_s,
        )),
        ("mirror", SpoofConfig(
            spoof_type=SpoofType.MIRROR,
            injection_window=window,
            mirror_x0=0.0,
            dt_s=scenario.dt_s,
        )),
        ("clean", SpoofConfig(spoof_type=SpoofType.CLEAN, dt_s=scenario.dt_s)),
    )
    return BenchmarkConfig(
        scenario=scenario,
        sensor=sensor,
        spoof_grid=grid,
        trackers=("gnn", "jpda"),
        seeds=tuple(seeds),
        output_dir=output_dir,
    )


@dataclass(frozen=True)
class RunSpec:
    run_id: str
    spoof_name: str
    spoof_cfg: SpoofConfig
    tracker: str
    seed: int


def plan_runs(cfg: BenchmarkConfig) -> list[RunSpec]:
    specs: list[RunSpec] = []
    for spoof_name, template in cfg.spoof_grid:
        for tracker in cfg.trackers:
            for seed in cfg.seeds:
                run_seed_spoof = derive_seed(seed, _SPOOF_STREAM_TAG, _name_slot(spoof_name))
                specs.append(
                    RunSpec(
                        run_id=f"{spoof_name}-{tracker}-s{seed}",
                        spoof_name=spoof_name,
                        spoof_cfg=replace(template, seed=run_seed_spoof),
                        tracker=tracker,
                        seed=seed,
                    )
                )
    return specs


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, allow_nan=False)
        fh.write("\n")


def execute_run(
    spec: RunSpec,
    scenario: ScenarioConfig,
    sensor: SensorConfig,
    params: TrackerParams,
    out_dir: str,
    config_digest: str,
) -> dict:
    """Build, spoof, track, measure, and write one run folder.

    Top-level function so worker pools can pickle it.
    """
    truth = build_scenario(scenario)
    clean_frames = generate_clean_run(truth, sensor, seed=spec.seed)
    spoofed_run = apply_spoof(clean_frames, spec.spoof_cfg)
    birth_seed = derive_seed(spec.seed, _BIRTH_STREAM_TAG, _TRACKER_SLOT[spec.tracker])
    run = run_tracker(
        spoofed_run.spoofed_frames,
        params,
        TRACKER_STEPS[spec.tracker],
        birth_seed=birth_seed,
        tracker_name=spec.tracker,
        include_beta=spec.tracker == "jpda",
    )
    report = compute_run_report(
        run,
        truth,
        spoofed_run,
        tracker_name=spec.tracker,
        spoof_name=spec.spoof_name,
        seed=spec.seed,
        config_digest=config_digest,
        noise_sigma_m=sensor.noise_sigma_m,
    )
    run_dir = Path(out_dir) / spec.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    # detection CSVs are keyed by stream, not by benchmark cell: the clean
    # stream of a spoofed run must byte-equal the clean-only run's CSV,
    # and both trackers share one spoofed stream
    write_detection_csv(run_dir / "clean.csv", spoofed_run.clean_frames, f"sense-s{spec.seed}")
    write_detection_csv(
        run_dir / "spoofed.csv", spoofed_run.spoofed_frames, f"{spec.spoof_name}-s{spec.seed}"
    )
    write_spoof_log_csv(run_dir / "spoof_log.csv", spoofed_run.spoof_log)
    write_snapshots_jsonl(
        run_dir / "snapshots.jsonl", run, include_beta=spec.tracker == "jpda"
    )
    write_report_json(run_dir / "report.json", report)
    _write_json(
        run_dir / "manifest.json",
        {
            "run_id": spec.run_id,
            "tracker": spec.tracker,
            "spoof_name": spec.spoof_name,
            "spoof_type": spec.spoof_cfg.spoof_type.value,
            "seed": spec.seed,
            "config_digest": config_digest,
            "created_utc": _utc_now(),
            "derived_seeds": {
                "sensing": spec.seed,
                "spoof": spec.spoof_cfg.seed,
                "birth": birth_seed,
            },
            "scenario": scenario.as_dict(),
            "sensor": sensor.as_dict(),
            "spoof": spec.spoof_cfg.as_dict(),
            "tracker_params": params.as_dict(),
        },
    )
    return {
        "run_id": spec.run_id,
        "tracker": spec.tracker,
        "spoof_name": spec.spoof_name,
        "spoof_type": spec.spoof_cfg.spoof_type.value,
        "seed": spec.seed,
        "mean_drift_m": report.mean_drift_m,
        "switch_count": report.switch_count,
    }


def run_benchmark(
    cfg: BenchmarkConfig, out_dir: Optional[str] = None, jobs: int = 1
) -> Path:
    """Execute the full grid and write the report directory.

    Fails before any run starts on invalid config or unwritable output.
    Returns the report directory path.
    """
    target = out_dir or cfg.output_dir
    if not target:
        raise ConfigError("no output directory: set output_dir or pass --out")
    out_path = Path(target)
    out_path.mkdir(parents=True, exist_ok=True)
    specs = plan_runs(cfg)
    digest = cfg.digest()
    params = cfg.resolved_params()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(
                pool.map(
                    _execute_run_star,
                    [
                        (spec, cfg.scenario, cfg.sensor, params, str(out_path), digest)
                        for spec in specs
                    ],
                )
            )
    else:
        summaries = [
            execute_run(spec, cfg.scenario, cfg.sensor, params, str(out_path), digest)
            for spec in specs
        ]
    _write_json(
        out_path / "manifest.json",
        {
            "config_digest": digest,
            "created_utc": _utc_now(),
            "trackers": list(cfg.trackers),
            "spoofs": [
                {"name": name, "spoof_type": c.spoof_type.value}
                for name, c in cfg.spoof_grid
            ],
            "seeds": list(cfg.seeds),
            "runs": summaries,
        },
    )
    return out_path


def _execute_run_star(args) -> dict:
    return execute_run(*args)


@dataclass(frozen=True)
class CellStats:
    tracker: str
    spoof_name: str
    drift_m: float
    impact_pct: float
    n_runs: int


@dataclass(frozen=True)
class ComparisonTable:
    """Mean drift and normalized impact per (tracker, spoof) cell, with
    unweighted group averages. Per-tracker averages cover spoofed cells
    only; the clean cell keeps its own per-spoof average row."""

    cells: dict
    tracker_averages: dict
    spoof_averages: dict
    missing: list

    def rows(self) -> list:
        out = []
        for (tracker, spoof_name), cell in self.cells.items():
            out.append((tracker, spoof_name, cell.drift_m, cell.impact_pct))
        for tracker, (drift, impact) in self.tracker_averages.items():
            out.append((tracker, "average", drift, impact))
        for spoof_name, (drift, impact) in self.spoof_averages.items():
            out.append(("average", spoof_name, drift, impact))
        return out


def compare_trackers(report_dir) -> ComparisonTable:
    """Aggregate run reports into the cross-tracker comparison and write
    comparison.csv next to the manifest. Missing or drift-less cells are
    reported in the table's missing list, never silently dropped."""
    report_path = Path(report_dir)
    manifest_file = report_path / "manifest.json"
    if not manifest_file.exists():
        raise ConfigError(f"no manifest.json under {report_path}")
    with open(manifest_file, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    trackers = list(manifest["trackers"])
    spoofs = [(s["name"], s["spoof_type"]) for s in manifest["spoofs"]]
    drifts: dict = {}
    for entry in manifest["runs"]:
        run_dir = report_path / entry["run_id"]
        report_file = run_dir / "report.json"
        if not report_file.exists():
            continue
        report = read_report_json(report_file)
        if report.mean_drift_m is None:
            continue
        drifts.setdefault((entry["tracker"], entry["spoof_name"]), []).append(
            report.mean_drift_m
        )
    cells: dict = {}
    missing: list = []
    for tracker in trackers:
        for spoof_name, _ in spoofs:
            values = drifts.get((tracker, spoof_name), [])
            if not values:
                missing.append(f"{tracker}/{spoof_name}")
                continue
            drift = float(sum(values) / len(values))
            cells[(tracker, spoof_name)] = CellStats(
                tracker=tracker,
                spoof_name=spoof_name,
                drift_m=drift,
                impact_pct=normalized_impact(drift),
                n_runs=len(values),
            )
    spoofed_names = [name for name, stype in spoofs if stype != SpoofType.CLEAN.value]
    tracker_averages: dict = {}
    for tracker in trackers:
        members = [
            cells[(tracker, name)].drift_m
            for name in spoofed_names
            if (tracker, name) in cells
        ]
        if members:
            drift = float(sum(members) / len(members))
            tracker_averages[tracker] = (drift, normalized_impact(drift))
    spoof_averages: dict = {}
    for spoof_name, _ in spoofs:
        members = [
            cells[(tracker, spoof_name)].drift_m
            for tracker in trackers
            if (tracker, spoof_name) in cells
        ]
        if members:
            drift = float(sum(members) / len(members))
            spoof_averages[spoof_name] = (drift, normalized_impact(drift))
    table = ComparisonTable(
        cells=cells,
        tracker_averages=tracker_averages,
        spoof_averages=spoof_averages,
        missing=missing,
    )
    with open(report_path / "comparison.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tracker", "spoof_type", "drift_m", "impact_pct"])
        for tracker, spoof_name, drift, impact in table.rows():
            writer.writerow([tracker, spoof_name, repr(drift), repr(impact)])
    return table


def _load_run_context(run_dir: Path):
    with open(run_dir / "manifest.json", "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    scenario = ScenarioConfig.from_dict(manifest["scenario"])
    truth = build_scenario(scenario)
    snapshots = read_snapshots_jsonl(run_dir / "snapshots.jsonl")
    return manifest, truth, snapshots


def export_plot_data(report_dir) -> list:
    """Write per-run plot-data CSVs: drift matrix (platforms x steps),
    purity timeline, assignment/switch events with spoof-window
    annotations, and the trajectory overlay. Returns the written paths.
    """
    report_path = Path(report_dir)
    manifest_file = report_path / "manifest.json"
    if not manifest_file.exists():
        raise ConfigError(f"no manifest.json under {report_path}")
    with open(manifest_file, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    written: list = []
    for entry in manifest["runs"]:
        run_dir = report_path / entry["run_id"]
        if not (run_dir / "manifest.json").exists():
            continue
        written.extend(_export_run(run_dir))
    return written


def _export_run(run_dir: Path) -> list:
    manifest, truth, snapshots = _load_run_context(run_dir)
    report = read_report_json(run_dir / "report.json")
    correspondence = match_tracks_to_truth(snapshots, truth)
    by_step: dict = {}
    for record in snapshots:
        by_step.setdefault(record.t, {})[record.track_id] = record
    T = truth.n_steps
    written = []

    path = run_dir / "drift_matrix.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["platform_id"] + [str(t) for t in range(T)])
        for pid in truth.platform_ids:
            row: list = [pid]
            for t in range(T):
                track_id = correspondence.track_of(t, pid)
                record = by_step.get(t, {}).get(track_id) if track_id is not None else None
                if record is None:
                    row.append("")
                else:
                    err = float(
                        ((record.x - truth.positions[pid][t][0]) ** 2
                         + (record.y - truth.positions[pid][t][1]) ** 2) ** 0.5
                    )
                    row.append(repr(err))
            writer.writerow(row)
    written.append(path)

    path = run_dir / "purity_timeline.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "purity", "spoof_majority_fraction"])
        for point in report.purity_timeline:
            writer.writerow([point.t, repr(point.purity), repr(point.spoof_majority_fraction)])
    written.append(path)

    path = run_dir / "events.csv"
    rows: list = []
    for t in sorted(by_step):
        for track_id in sorted(by_step[t]):
            record = by_step[t][track_id]
            if record.detection_id is None:
                continue
            pid = correspondence.platform_of(t, track_id)
            rows.append(
                (t, "assignment", "" if pid is None else pid, track_id,
                 record.detection_id, "" if record.score is None else repr(record.score))
            )
    matched_seq: dict = {}
    for t in sorted(correspondence.by_step):
        for track_id, pid in correspondence.by_step[t].items():
            matched_seq.setdefault(pid, []).append((t, track_id))
    for pid in sorted(matched_seq):
        seq = matched_seq[pid]
        for (_, prev), (t, cur) in zip(seq, seq[1:]):
            if prev != cur:
                rows.append((t, "switch", pid, cur, "", f"from={prev}"))
    window = manifest["spoof"]["injection_window"]
    if manifest["spoof"]["spoof_type"] != SpoofType.CLEAN.value:
        for t in range(max(0, window[0]), min(T - 1, window[1]) + 1):
            rows.append((t, "spoof_window", "", "", "", manifest["spoof_name"]))
    rows.sort(key=lambda r: (r[0], r[1], str(r[2]), str(r[3])))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "kind", "platform_id", "track_id", "detection_id", "info"])
        writer.writerows(rows)
    written.append(path)

    path = run_dir / "overlay.csv"
    _, clean_frames = read_detection_csv(run_dir / "clean.csv")
    _, spoofed_frames = read_detection_csv(run_dir / "spoofed.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "t", "id", "x", "y", "label"])
        for pid in truth.platform_ids:
            for t in range(T):
                pos = truth.positions[pid][t]
                writer.writerow(["truth", t, pid, repr(float(pos[0])), repr(float(pos[1])), ""])
        for kind, frames in (("clean_detection", clean_frames), ("spoofed_detection", spoofed_frames)):
            for frame in frames:
                for det in frame.detections:
                    writer.writerow(
                        [kind, det.t, det.detection_id,
                         repr(float(det.z[0])), repr(float(det.z[1])), det.label.encode()]
                    )
        for record in snapshots:
            writer.writerow(
                ["estimate", record.t, record.track_id,
                 repr(record.x), repr(record.y), record.status]
            )
    written.append(path)
    return written
