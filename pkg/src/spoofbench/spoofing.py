"""Spoof injection: drift, ghost, and mirror attacks on detection runs.

The clean stream is never mutated. Drift moves a targeted platform's
own detection (same detection_id, relabeled); mirror appends a
reflected echo and keeps the original; ghost appends detections with no
platform origin. Every spoofed detection is recorded in a spoof log
that preserves the original position where one exists.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .geometry import Region
from .sensing import Detection, DetectionFrame, Label
from .streams import TAG_SPOOF, substream

GHOST_MODE_UNIFORM = "uniform"
GHOST_MODE_NEAR_TRACK = "near_track"


class SpoofType(str, Enum):
    DRIFT = "drift"
    GHOST = "ghost"
    MIRROR = "mirror"
    # pass-through pseudo type so benchmark grids can include an
    # unspoofed cell through the same code path
    CLEAN = "clean"


@dataclass(frozen=True)
class SpoofConfig:
    """Parameters of one spoof campaign.

    target_platform_ids=None targets every platform; an explicit empty
    set targets none. dt_s converts timestep offsets into the seconds
    used by the drift law.
    """

    spoof_type: SpoofType
    injection_window: tuple[int, int] = (0, 0)
    seed: int = 0
    alpha: float = 0.0
    drift_dir: tuple[float, float] = (1.0, 0.0)
    mirror_x0: float = 0.0
    ghost_rate: float = 0.0
    ghost_mode: str = GHOST_MODE_UNIFORM
    ghost_region: Optional[Region] = None
    ghost_radius_m: float = 50.0
    # inner radius of the near-track annulus; 0 degenerates to a disc
    ghost_inner_m: float = 0.0
    # displacement of the annulus center from the anchoring detection.
    # Symmetric ghost mass cancels under soft association; an offset
    # cloud is what actually drags a beta-weighted tracker off target
    ghost_offset_m: float = 0.0
    ghost_offset_dir: tuple[float, float] = (1.0, 0.0)
    ghost_sigma_m: float = 5.0
    target_platform_ids: Optional[frozenset[int]] = None
    dt_s: float = 1.0

    def __post_init__(self) -> None:
        t_start, t_end = self.injection_window
        if t_start < 0 or t_start > t_end:
            raise ConfigError(f"malformed injection window [{t_start}, {t_end}]")
        if self.spoof_type is SpoofType.DRIFT:
            if self.alpha < 0.0:
                raise ConfigError("drift rate alpha must be non-negative")
            norm = math.hypot(*self.drift_dir)
            if abs(norm - 1.0) > 1e-9:
                raise ConfigError(f"drift_dir must be a unit vector, |v|={norm}")
        if self.spoof_type is SpoofType.GHOST:
            if self.ghost_rate < 0.0:
                raise ConfigError("ghost_rate must be non-negative")
            if self.ghost_mode not in (GHOST_MODE_UNIFORM, GHOST_MODE_NEAR_TRACK):
                raise ConfigError(f"unknown ghost_mode {self.ghost_mode!r}")
            if self.ghost_sigma_m <= 0.0:
                raise ConfigError("ghost_sigma_m must be positive")
            if self.ghost_radius_m <= 0.0:
                raise ConfigError("ghost_radius_m must be positive")
            if not 0.0 <= self.ghost_inner_m < self.ghost_radius_m:
                raise ConfigError(
                    f"ghost_inner_m must lie in [0, ghost_radius_m); got "
                    f"{self.ghost_inner_m} vs {self.ghost_radius_m}"
                )
            if self.ghost_offset_m < 0.0:
                raise ConfigError("ghost_offset_m must be non-negative")
            if self.ghost_offset_m > 0.0:
                norm = math.hypot(*self.ghost_offset_dir)
                if abs(norm - 1.0) > 1e-9:
                    raise ConfigError(
                        f"ghost_offset_dir must be a unit vector, |v|={norm}"
                    )
        if self.dt_s <= 0.0:
            raise ConfigError("dt_s must be positive")

    def targets(self, truth_id: Optional[int]) -> bool:
        if truth_id is None:
            return False
        if self.target_platform_ids is None:
            return True
        return truth_id in self.target_platform_ids

    def in_window(self, t: int) -> bool:
        return self.injection_window[0] <= t <= self.injection_window[1]

    def as_dict(self) -> dict:
        return {
            "spoof_type": self.spoof_type.value,
            "injection_window": list(self.injection_window),
            "seed": self.seed,
            "alpha": self.alpha,
            "drift_dir": list(self.drift_dir),
            "mirror_x0": self.mirror_x0,
            "ghost_rate": self.ghost_rate,
            "ghost_mode": self.ghost_mode,
            "ghost_region": None if self.ghost_region is None else self.ghost_region.as_dict(),
            "ghost_radius_m": self.ghost_radius_m,
            "ghost_inner_m": self.ghost_inner_m,
            "ghost_offset_m": self.ghost_offset_m,
            "ghost_offset_dir": list(self.ghost_offset_dir),
            "ghost_sigma_m": self.ghost_sigma_m,
            "target_platform_ids": (
                None
                if self.target_platform_ids is None
                else sorted(self.target_platform_ids)
            ),
            "dt_s": self.dt_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpoofConfig":
        if not isinstance(d, dict):
            raise ConfigError("spoof config must be an object")
        allowed = {
            "spoof_type",
            "injection_window",
            "seed",
            "alpha",
            "drift_dir",
            "mirror_x0",
            "ghost_rate",
            "ghost_mode",
            "ghost_region",
            "ghost_radius_m",
            "ghost_inner_m",
            "ghost_offset_m",
            "ghost_offset_dir",
            "ghost_sigma_m",
            "target_platform_ids",
            "dt_s",
        }
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown spoof keys: {sorted(unknown)}")
        if "spoof_type" not in d:
            raise ConfigError("spoof config needs spoof_type")
        try:
            spoof_type = SpoofType(d["spoof_type"])
        except ValueError as exc:
            raise ConfigError(f"unknown spoof_type {d['spoof_type']!r}") from exc
        kwargs: dict = {"spoof_type": spoof_type}
        if "injection_window" in d:
            window = d["injection_window"]
            if not isinstance(window, (list, tuple)) or len(window) != 2:
                raise ConfigError("injection_window must be [t_start, t_end]")
            kwargs["injection_window"] = (int(window[0]), int(window[1]))
        for key in ("alpha", "mirror_x0", "ghost_rate", "ghost_radius_m",
                    "ghost_inner_m", "ghost_offset_m", "ghost_sigma_m", "dt_s"):
            if key in d:
                kwargs[key] = float(d[key])
        if "seed" in d:
            kwargs["seed"] = int(d["seed"])
        for key in ("drift_dir", "ghost_offset_dir"):
            if key in d:
                direction = d[key]
                if not isinstance(direction, (list, tuple)) or len(direction) != 2:
                    raise ConfigError(f"{key} must be [vx, vy]")
                kwargs[key] = (float(direction[0]), float(direction[1]))
        if "ghost_mode" in d:
            kwargs["ghost_mode"] = str(d["ghost_mode"])
        if "ghost_region" in d and d["ghost_region"] is not None:
            kwargs["ghost_region"] = Region.from_dict(d["ghost_region"])
        if "target_platform_ids" in d and d["target_platform_ids"] is not None:
            kwargs["target_platform_ids"] = frozenset(int(i) for i in d["target_platform_ids"])
        return cls(**kwargs)


@dataclass(frozen=True)
class SpoofLogEntry:
    t: int
    detection_id: int
    spoof_type: str
    orig_x: Optional[float]
    orig_y: Optional[float]


@dataclass(frozen=True)
class SpoofedRun:
    """Clean and spoofed streams of one run, kept separate and labeled."""

    clean_frames: tuple[DetectionFrame, ...]
    spoofed_frames: tuple[DetectionFrame, ...]
    spoof_log: tuple[SpoofLogEntry, ...]
    config: SpoofConfig


def reflect_across_axis(position, x0: float) -> np.ndarray:
    """Reflect (x, y) across the vertical axis x = x0: (2*x0 - x, y)."""
    p = np.asarray(position, dtype=float)
    return np.array([2.0 * x0 - p[0], p[1]])


def _drift_frame(
    frame: DetectionFrame, cfg: SpoofConfig, t_rel: float
) -> tuple[DetectionFrame, list[SpoofLogEntry]]:
    offset = cfg.alpha * t_rel * np.asarray(cfg.drift_dir, dtype=float)
    detections: list[Detection] = []
    entries: list[SpoofLogEntry] = []
    for det in frame.detections:
        if det.label.kind == "clean" and cfg.targets(det.label.truth_id):
            moved = replace(
                det,
                z=det.z + offset,
                label=Label.spoof(SpoofType.DRIFT.value, det.label.truth_id),
            )
            detections.append(moved)
            entries.append(
                SpoofLogEntry(
                    t=frame.t,
                    detection_id=det.detection_id,
                    spoof_type=SpoofType.DRIFT.value,
                    orig_x=float(det.z[0]),
                    orig_y=float(det.z[1]),
                )
            )
        else:
            detections.append(det)
    return DetectionFrame(t=frame.t, detections=tuple(detections)), entries


def inject_drift(frame: DetectionFrame, cfg: SpoofConfig, t_rel: float) -> DetectionFrame:
    """Move targeted clean detections by alpha * t_rel along drift_dir.

    t_rel is seconds since injection start; the offset grows linearly
    from zero at the start of the window. Labels become spoof:drift and
    detection ids are preserved (the true detection itself is moved).
    """
    return _drift_frame(frame, cfg, t_rel)[0]


def _ghost_frame(
    frame: DetectionFrame, cfg: SpoofConfig, rng: np.random.Generator, next_id: int
) -> tuple[DetectionFrame, list[SpoofLogEntry], int]:
    count = int(rng.poisson(cfg.ghost_rate))
    if count == 0:
        return frame, [], next_id
    R = np.eye(2) * cfg.ghost_sigma_m * cfg.ghost_sigma_m
    clean = [d for d in frame.detections if d.label.kind == "clean"]
    added: list[Detection] = []
    entries: list[SpoofLogEntry] = []
    for _ in range(count):
        if cfg.ghost_mode == GHOST_MODE_NEAR_TRACK and clean:
            anchor = clean[int(rng.integers(len(clean)))].z
            center = anchor + cfg.ghost_offset_m * np.asarray(cfg.ghost_offset_dir, dtype=float)
            # uniform over the annulus [ghost_inner_m, ghost_radius_m]
            r2_lo = cfg.ghost_inner_m * cfg.ghost_inner_m
            r2_hi = cfg.ghost_radius_m * cfg.ghost_radius_m
            radius = math.sqrt(r2_lo + rng.random() * (r2_hi - r2_lo))
            theta = rng.uniform(0.0, 2.0 * math.pi)
            z = center + radius * np.array([math.cos(theta), math.sin(theta)])
        elif cfg.ghost_region is not None:
            z = cfg.ghost_region.sample(rng, 1)[0]
        else:
            # near_track with nothing to anchor on and no fallback
            # region: skip the draw rather than invent a position
            continue
        added.append(
            Detection(
                t=frame.t,
                detection_id=next_id,
                z=z,
                R=R.copy(),
                label=Label.spoof(SpoofType.GHOST.value, None),
            )
        )
        entries.append(
            SpoofLogEntry(
                t=frame.t,
                detection_id=next_id,
                spoof_type=SpoofType.GHOST.value,
                orig_x=None,
                orig_y=None,
            )
        )
        next_id += 1
    out = DetectionFrame(t=frame.t, detections=frame.detections + tuple(added))
    return out, entries, next_id


def inject_ghost(
    frame: DetectionFrame, cfg: SpoofConfig, rng_state: np.random.Generator
) -> DetectionFrame:
    """Append Poisson(ghost_rate) detections with no platform origin.

    Placement is uniform over ghost_region, or, in near_track mode,
    uniform in a disc of ghost_radius_m around a randomly chosen clean
    detection of the frame. Existing detections are untouched.
    """
    next_id = max((d.detection_id for d in frame.detections), default=-1) + 1
    return _ghost_frame(frame, cfg, rng_state, next_id)[0]


def _mirror_frame(
    frame: DetectionFrame, cfg: SpoofConfig, next_id: int
) -> tuple[DetectionFrame, list[SpoofLogEntry], int]:
    added: list[Detection] = []
    entries: list[SpoofLogEntry] = []
    for det in frame.detections:
        if det.label.kind != "clean" or not cfg.targets(det.label.truth_id):
            continue
        added.append(
            Detection(
                t=frame.t,
                detection_id=next_id,
                z=reflect_across_axis(det.z, cfg.mirror_x0),
                R=det.R.copy(),
                label=Label.spoof(SpoofType.MIRROR.value, det.label.truth_id),
            )
        )
        entries.append(
            SpoofLogEntry(
                t=frame.t,
                detection_id=next_id,
                spoof_type=SpoofType.MIRROR.value,
                orig_x=float(det.z[0]),
                orig_y=float(det.z[1]),
            )
        )
        next_id += 1
    out = DetectionFrame(t=frame.t, detections=frame.detections + tuple(added))
    return out, entries, next_id


def inject_mirror(frame: DetectionFrame, cfg: SpoofConfig) -> DetectionFrame:
    """Append, for each targeted clean detection, its reflection across
    x = mirror_x0. Originals are retained; echoes get fresh ids."""
    next_id = max((d.detection_id for d in frame.detections), default=-1) + 1
    return _mirror_frame(frame, cfg, next_id)[0]


def apply_spoof(clean_run: Sequence[DetectionFrame], cfg: SpoofConfig) -> SpoofedRun:
    """Apply one spoof campaign over its injection window.

    Deterministic given (clean_run, cfg): ghost draws come from streams
    keyed by (cfg.seed, timestep). Frames outside the window pass
    through unchanged; a window starting beyond the final frame is a
    no-op. The clean input is returned untouched alongside the spoofed
    stream.
    """
    if cfg.spoof_type is SpoofType.GHOST and cfg.ghost_mode == GHOST_MODE_UNIFORM:
        if cfg.ghost_region is None:
            raise ConfigError("uniform ghost mode requires ghost_region")
    clean_frames = tuple(clean_run)
    if cfg.spoof_type is SpoofType.CLEAN:
        return SpoofedRun(clean_frames, clean_frames, (), cfg)
    next_id = max(
        (d.detection_id for f in clean_frames for d in f.detections), default=-1
    ) + 1
    t_start = cfg.injection_window[0]
    spoofed: list[DetectionFrame] = []
    log: list[SpoofLogEntry] = []
    for frame in clean_frames:
        if not cfg.in_window(frame.t):
            spoofed.append(frame)
            continue
        if cfg.spoof_type is SpoofType.DRIFT:
            t_rel = (frame.t - t_start) * cfg.dt_s
            out, entries = _drift_frame(frame, cfg, t_rel)
        elif cfg.spoof_type is SpoofType.GHOST:
            rng = substream(cfg.seed, TAG_SPOOF, frame.t)
            out, entries, next_id = _ghost_frame(frame, cfg, rng, next_id)
        else:
            out, entries, next_id = _mirror_frame(frame, cfg, next_id)
        spoofed.append(out)
        log.extend(entries)
    return SpoofedRun(clean_frames, tuple(spoofed), tuple(log), cfg)


SPOOF_LOG_CSV_HEADER = ["t", "detection_id", "spoof_type", "orig_x", "orig_y"]


def write_spoof_log_csv(path, log: Sequence[SpoofLogEntry]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SPOOF_LOG_CSV_HEADER)
        for entry in log:
            writer.writerow(
                [
                    entry.t,
                    entry.detection_id,
                    entry.spoof_type,
                    "" if entry.orig_x is None else repr(float(entry.orig_x)),
                    "" if entry.orig_y is None else repr(float(entry.orig_y)),
                ]
            )


def read_spoof_log_csv(path) -> tuple[SpoofLogEntry, ...]:
    entries: list[SpoofLogEntry] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != SPOOF_LOG_CSV_HEADER:
            raise ConfigError(f"unexpected spoof log header: {header}")
        for row in reader:
            entries.append(
                SpoofLogEntry(
                    t=int(row[0]),
                    detection_id=int(row[1]),
                    spoof_type=row[2],
                    orig_x=float(row[3]) if row[3] != "" else None,
                    orig_y=float(row[4]) if row[4] != "" else None,
                )
            )
    return tuple(entries)
