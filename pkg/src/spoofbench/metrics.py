"""Run-level metrics: drift from truth, assignment divergence, cluster
purity, spoof statistics, and normalized impact.

All metrics are pure post-processing over snapshot records, ground
truth, and provenance labels. Track-to-truth correspondence is solved
per timestep as a min-cost one-to-one matching between confirmed track
positions and true platform positions with a hard distance cutoff.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .scenario import GroundTruth
from .tracker_gnn import CostMatrix, hungarian
from .tracking import SnapshotRecord, TrackStatus

# matching cutoff between a track and a platform, meters
MATCH_CUTOFF_M = 100.0

# drift normalization distance for the impact percentage, meters
D_NORM_M = 500.0


@dataclass(frozen=True)
class TruthCorrespondence:
    """Per timestep, the one-to-one mapping confirmed track -> platform."""

    by_step: dict

    def platform_of(self, t: int, track_id: int) -> Optional[int]:
        return self.by_step.get(t, {}).get(track_id)

    def track_of(self, t: int, platform_id: int) -> Optional[int]:
        for track_id, pid in self.by_step.get(t, {}).items():
            if pid == platform_id:
                return track_id
        return None


def _by_step(snapshots: Sequence[SnapshotRecord]) -> dict:
    steps: dict = {}
    for record in snapshots:
        steps.setdefault(record.t, []).append(record)
    return steps


def match_tracks_to_truth(
    snapshots: Sequence[SnapshotRecord],
    truth: GroundTruth,
    cutoff_m: float = MATCH_CUTOFF_M,
) -> TruthCorrespondence:
    """Assign confirmed tracks to platforms per timestep.

    Cost is Euclidean distance; pairs beyond cutoff_m stay unmatched.
    The assignment is solved with the same machinery as the tracker,
    with the cutoff as the no-assignment cost.
    """
    by_step = _by_step(snapshots)
    correspondence: dict = {}
    platform_ids = tuple(truth.platform_ids)
    for t, records in sorted(by_step.items()):
        confirmed = [
            r for r in records if r.status == TrackStatus.CONFIRMED.value
        ]
        if not confirmed or t >= truth.n_steps:
            continue
        confirmed.sort(key=lambda r: r.track_id)
        costs = np.full((len(confirmed), len(platform_ids)), np.inf)
        for i, record in enumerate(confirmed):
            pos = np.array([record.x, record.y])
            for j, pid in enumerate(platform_ids):
                dist = float(np.linalg.norm(pos - truth.positions[pid][t]))
                if dist <= cutoff_m:
                    costs[i, j] = dist
        matrix = CostMatrix(
            costs=costs,
            track_ids=tuple(r.track_id for r in confirmed),
            detection_ids=platform_ids,
            unassigned_cost=cutoff_m,
        )
        matched = hungarian(matrix)
        if matched:
            correspondence[t] = dict(sorted(matched.items()))
    return TruthCorrespondence(by_step=correspondence)


@dataclass(frozen=True)
class PlatformDrift:
    mean_m: Optional[float]
    max_m: Optional[float]
    matched_steps: int
    gap_steps: int


@dataclass(frozen=True)
class DriftReport:
    """Euclidean error of matched tracks against their platforms.

    Overall mean/max pool every matched (platform, step) sample;
    unmatched platform-steps are reported as coverage gaps, not errors.
    The empty flag marks runs with no matched samples at all.
    """

    per_platform: dict
    mean_m: Optional[float]
    max_m: Optional[float]
    matched_steps: int
    empty: bool


def drift_from_truth(
    snapshots: Sequence[SnapshotRecord],
    correspondence: TruthCorrespondence,
    truth: GroundTruth,
) -> DriftReport:
    by_step = _by_step(snapshots)
    errors: dict = {pid: [] for pid in truth.platform_ids}
    for t, mapping in correspondence.by_step.items():
        records = {r.track_id: r for r in by_step.get(t, [])}
        for track_id, pid in mapping.items():
            record = records.get(track_id)
            if record is None:
                continue
            pos = np.array([record.x, record.y])
            errors[pid].append(float(np.linalg.norm(pos - truth.positions[pid][t])))
    per_platform: dict = {}
    pooled: list[float] = []
    T = truth.n_steps
    for pid in truth.platform_ids:
        samples = errors[pid]
        pooled.extend(samples)
        per_platform[pid] = PlatformDrift(
            mean_m=float(np.mean(samples)) if samples else None,
            max_m=float(np.max(samples)) if samples else None,
            matched_steps=len(samples),
            gap_steps=T - len(samples),
        )
    return DriftReport(
        per_platform=per_platform,
        mean_m=float(np.mean(pooled)) if pooled else None,
        max_m=float(np.max(pooled)) if pooled else None,
        matched_steps=len(pooled),
        empty=not pooled,
    )


def _collapse_origin(origin: str) -> str:
    # confusion buckets: per-platform sources, clutter, and one spoof
    # bucket regardless of spoof type
    return "spoof" if origin.startswith("spoof") else origin


@dataclass(frozen=True)
class DivergenceReport:
    switch_count: int
    per_platform_switches: dict
    confusion: dict


def assignment_divergence(
    snapshots: Sequence[SnapshotRecord], correspondence: TruthCorrespondence
) -> DivergenceReport:
    """Identity switches and detection-origin confusion.

    A switch is a change of matched track id between consecutive matched
    steps of one platform (coverage gaps neither count nor reset).
    Confusion row r holds the fraction of detection weight, consumed by
    tracks matched to platform r, that originated from each source;
    rows sum to 1.
    """
    by_step = _by_step(snapshots)
    track_seq: dict = {}
    weight_rows: dict = {}
    for t in sorted(correspondence.by_step):
        records = {r.track_id: r for r in by_step.get(t, [])}
        for track_id, pid in correspondence.by_step[t].items():
            track_seq.setdefault(pid, []).append(track_id)
            record = records.get(track_id)
            if record is None or not record.weights:
                continue
            row = weight_rows.setdefault(pid, {})
            for det_id, weight in record.weights.items():
                source = _collapse_origin(record.origins[det_id])
                row[source] = row.get(source, 0.0) + weight
    per_platform = {
        pid: sum(a != b for a, b in zip(seq, seq[1:]))
        for pid, seq in track_seq.items()
    }
    confusion: dict = {}
    for pid, row in weight_rows.items():
        total = sum(row.values())
        if total > 0.0:
            confusion[pid] = {src: w / total for src, w in sorted(row.items())}
    return DivergenceReport(
        switch_count=int(sum(per_platform.values())),
        per_platform_switches=per_platform,
        confusion=confusion,
    )


@dataclass(frozen=True)
class PurityPoint:
    """Track-averaged purity at one step; spoof_majority_fraction is the
    share of contributing tracks whose majority source is a spoof."""

    t: int
    purity: float
    spoof_majority_fraction: float


def cluster_purity(snapshots: Sequence[SnapshotRecord]) -> list[PurityPoint]:
    """Per step: purity = (weight of the majority origin source) /
    (total consumed weight), averaged over tracks that consumed weight.
    Steps where no track consumed anything are absent from the timeline.
    """
    timeline: list[PurityPoint] = []
    for t, records in sorted(_by_step(snapshots).items()):
        purities: list[float] = []
        spoof_major = 0
        for record in records:
            total = sum(record.weights.values())
            if total <= 0.0:
                continue
            sums: dict = {}
            for det_id, weight in record.weights.items():
                origin = record.origins[det_id]
                sums[origin] = sums.get(origin, 0.0) + weight
            majority = max(sorted(sums), key=lambda k: sums[k])
            purities.append(sums[majority] / total)
            if majority.startswith("spoof"):
                spoof_major += 1
        if purities:
            timeline.append(
                PurityPoint(
                    t=t,
                    purity=float(np.mean(purities)),
                    spoof_majority_fraction=spoof_major / len(purities),
                )
            )
    return timeline


@dataclass(frozen=True)
class SpoofStats:
    inclusion_rate: float
    recovery_rate: float
    false_attribution: float


def spoof_stats(
    snapshots: Sequence[SnapshotRecord],
    spoof_log,
    correspondence: TruthCorrespondence,
    truth: GroundTruth,
    noise_sigma_m: float,
    injection_window: tuple[int, int],
    recovery_eps_m: Optional[float] = None,
    min_recovery_steps: int = 5,
) -> SpoofStats:
    """Spoof inclusion, post-window recovery, and false attribution.

    inclusion: fraction of track updates whose consumed weight is
    majority spoof-labeled. recovery: fraction of spoof-affected
    platforms (their matched track consumed spoof weight inside the
    window) whose matched track returns within eps = 3 * noise_sigma_m
    of truth for at least min_recovery_steps consecutive steps after the
    window; vacuously 1 when nothing was affected. false_attribution:
    weight share of clean detections consumed by tracks matched to a
    different platform.
    """
    eps = 3.0 * noise_sigma_m if recovery_eps_m is None else recovery_eps_m
    t_end = injection_window[1]
    by_step = _by_step(snapshots)

    updates = 0
    spoof_dominated = 0
    for record in snapshots:
        total = sum(record.weights.values())
        if total <= 0.0:
            continue
        updates += 1
        spoof_weight = sum(
            w for d, w in record.weights.items() if record.origins[d].startswith("spoof")
        )
        if spoof_weight > 0.5 * total:
            spoof_dominated += 1
    inclusion = spoof_dominated / updates if updates else 0.0

    affected: set[int] = set()
    for t, mapping in correspondence.by_step.items():
        if not injection_window[0] <= t <= t_end:
            continue
        records = {r.track_id: r for r in by_step.get(t, [])}
        for track_id, pid in mapping.items():
            record = records.get(track_id)
            if record is None:
                continue
            spoof_weight = sum(
                w
                for d, w in record.weights.items()
                if record.origins[d].startswith("spoof")
            )
            if spoof_weight > 0.0:
                affected.add(pid)

    recovered = 0
    for pid in sorted(affected):
        run_length = 0
        ok = False
        for t in range(t_end + 1, truth.n_steps):
            track_id = correspondence.track_of(t, pid)
            record = None
            if track_id is not None:
                record = next(
                    (r for r in by_step.get(t, []) if r.track_id == track_id), None
                )
            in_band = False
            if record is not None:
                pos = np.array([record.x, record.y])
                in_band = float(np.linalg.norm(pos - truth.positions[pid][t])) <= eps
            run_length = run_length + 1 if in_band else 0
            if run_length >= min_recovery_steps:
                ok = True
                break
        recovered += int(ok)
    recovery = recovered / len(affected) if affected else 1.0

    clean_weight = 0.0
    misattributed = 0.0
    for t, mapping in correspondence.by_step.items():
        records = {r.track_id: r for r in by_step.get(t, [])}
        for track_id, pid in mapping.items():
            record = records.get(track_id)
            if record is None:
                continue
            for det_id, weight in record.weights.items():
                origin = record.origins[det_id]
                if not origin.startswith("platform:"):
                    continue
                clean_weight += weight
                if int(origin.split(":", 1)[1]) != pid:
                    misattributed += weight
    false_attribution = misattributed / clean_weight if clean_weight > 0.0 else 0.0

    return SpoofStats(
        inclusion_rate=inclusion,
        recovery_rate=recovery,
        false_attribution=false_attribution,
    )


def normalized_impact(mean_drift_m: float, d_norm_m: float = D_NORM_M) -> float:
    """Mean drift as a percentage of the normalization distance."""
    if mean_drift_m < 0.0:
        raise ValueError("mean drift must be non-negative")
    return 100.0 * mean_drift_m / d_norm_m


@dataclass
class RunReport:
    """Metric bundle of one (tracker, spoof, seed) run."""

    tracker: str
    spoof_type: str
    seed: int
    config_digest: str
    mean_drift_m: Optional[float]
    max_drift_m: Optional[float]
    normalized_impact_pct: Optional[float]
    matched_steps: int
    per_platform_drift: dict
    switch_count: int
    per_platform_switches: dict
    confusion: dict
    purity_timeline: list
    spoof_inclusion_rate: float
    recovery_rate: float
    false_association_ratio: float

    def to_json_dict(self) -> dict:
        return {
            "tracker": self.tracker,
            "spoof_type": self.spoof_type,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "mean_drift_m": self.mean_drift_m,
            "max_drift_m": self.max_drift_m,
            "normalized_impact_pct": self.normalized_impact_pct,
            "matched_steps": self.matched_steps,
            "per_platform_drift": {
                str(pid): {
                    "mean_m": d.mean_m,
                    "max_m": d.max_m,
                    "matched_steps": d.matched_steps,
                    "gap_steps": d.gap_steps,
                }
                for pid, d in sorted(self.per_platform_drift.items())
            },
            "switch_count": self.switch_count,
            "per_platform_switches": {
                str(pid): count
                for pid, count in sorted(self.per_platform_switches.items())
            },
            "confusion": {
                str(pid): row for pid, row in sorted(self.confusion.items())
            },
            "purity_timeline": [
                [p.t, p.purity, p.spoof_majority_fraction] for p in self.purity_timeline
            ],
            "spoof_inclusion_rate": self.spoof_inclusion_rate,
            "recovery_rate": self.recovery_rate,
            "false_association_ratio": self.false_association_ratio,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "RunReport":
        return cls(
            tracker=d["tracker"],
            spoof_type=d["spoof_type"],
            seed=int(d["seed"]),
            config_digest=d["config_digest"],
            mean_drift_m=d["mean_drift_m"],
            max_drift_m=d["max_drift_m"],
            normalized_impact_pct=d["normalized_impact_pct"],
            matched_steps=int(d["matched_steps"]),
            per_platform_drift={
                int(pid): PlatformDrift(
                    mean_m=row["mean_m"],
                    max_m=row["max_m"],
                    matched_steps=int(row["matched_steps"]),
                    gap_steps=int(row["gap_steps"]),
                )
                for pid, row in d["per_platform_drift"].items()
            },
            switch_count=int(d["switch_count"]),
            per_platform_switches={
                int(pid): int(count)
                for pid, count in d["per_platform_switches"].items()
            },
            confusion={int(pid): row for pid, row in d["confusion"].items()},
            purity_timeline=[
                PurityPoint(t=int(t), purity=p, spoof_majority_fraction=s)
                for t, p, s in d["purity_timeline"]
            ],
            spoof_inclusion_rate=float(d["spoof_inclusion_rate"]),
            recovery_rate=float(d["recovery_rate"]),
            false_association_ratio=float(d["false_association_ratio"]),
        )


def compute_run_report(
    run,
    truth: GroundTruth,
    spoofed_run,
    tracker_name: str,
    spoof_name: str,
    seed: int,
    config_digest: str,
    noise_sigma_m: float,
    d_norm_m: float = D_NORM_M,
) -> RunReport:
    """Assemble the full metric bundle for one finished run."""
    correspondence = match_tracks_to_truth(run.snapshots, truth)
    drift = drift_from_truth(run.snapshots, correspondence, truth)
    divergence = assignment_divergence(run.snapshots, correspondence)
    purity = cluster_purity(run.snapshots)
    stats = spoof_stats(
        run.snapshots,
        spoofed_run.spoof_log,
        correspondence,
        truth,
        noise_sigma_m=noise_sigma_m,
        injection_window=spoofed_run.config.injection_window,
    )
    impact = (
        normalized_impact(drift.mean_m, d_norm_m) if drift.mean_m is not None else None
    )
    return RunReport(
        tracker=tracker_name,
        spoof_type=spoof_name,
        seed=seed,
        config_digest=config_digest,
        mean_drift_m=drift.mean_m,
        max_drift_m=drift.max_m,
        normalized_impact_pct=impact,
        matched_steps=drift.matched_steps,
        per_platform_drift=drift.per_platform,
        switch_count=divergence.switch_count,
        per_platform_switches=divergence.per_platform_switches,
        confusion=divergence.confusion,
        purity_timeline=purity,
        spoof_inclusion_rate=stats.inclusion_rate,
        recovery_rate=stats.recovery_rate,
        false_association_ratio=stats.false_attribution,
    )


def write_report_json(path, report: RunReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, allow_nan=False)
        fh.write("\n")


def read_report_json(path) -> RunReport:
    with open(path, "r", encoding="utf-8") as fh:
        return RunReport.from_json_dict(json.load(fh))
