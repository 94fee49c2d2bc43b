"""Noisy detection generation: misses, Gaussian position noise, clutter.

Every draw comes from a stream keyed by (seed, tag, timestep, slot), so
regenerating any frame, or layering spoofs on top later, never shifts
the draws of other frames or platforms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import ConfigError
from .geometry import Region
from .streams import TAG_SENSE, substream

# substream slot reserved for the clutter draws of a frame; platform
# slots are their indices, which stay far below this
CLUTTER_SLOT = 2**20

DEFAULT_FOV = Region(-600.0, 600.0, -600.0, 600.0)

LABEL_CLEAN = "clean"
LABEL_CLUTTER = "clutter"
LABEL_SPOOF = "spoof"


@dataclass(frozen=True)
class Label:
    """Provenance of one detection; trackers never read it.

    kind is "clean", "clutter", or "spoof". Spoof labels carry the spoof
    type and, when derived from a real platform, that platform's id.
    """

    kind: str
    spoof_type: Optional[str] = None
    truth_id: Optional[int] = None

    @classmethod
    def clean(cls, truth_id: int) -> "Label":
        return cls(kind=LABEL_CLEAN, truth_id=truth_id)

    @classmethod
    def clutter(cls) -> "Label":
        return cls(kind=LABEL_CLUTTER)

    @classmethod
    def spoof(cls, spoof_type: str, truth_id: Optional[int] = None) -> "Label":
        return cls(kind=LABEL_SPOOF, spoof_type=spoof_type, truth_id=truth_id)

    @property
    def is_spoof(self) -> bool:
        return self.kind == LABEL_SPOOF

    def encode(self) -> str:
        if self.kind == LABEL_SPOOF:
            return f"spoof:{self.spoof_type}"
        return self.kind

    @classmethod
    def decode(cls, text: str, truth_id: Optional[int]) -> "Label":
        if text == LABEL_CLEAN:
            if truth_id is None:
                raise ValueError("clean label requires truth_id")
            return cls.clean(truth_id)
        if text == LABEL_CLUTTER:
            return cls.clutter()
        if text.startswith("spoof:"):
            return cls.spoof(text.split(":", 1)[1], truth_id)
        raise ConfigError(f"unknown label encoding {text!r}")


@dataclass(frozen=True)
class Detection:
    """One measured position with its reported covariance and provenance."""

    t: int
    detection_id: int
    z: np.ndarray
    R: np.ndarray
    label: Label

    def origin_key(self) -> str:
        """Source bucket used by the metrics: platform:<id>, clutter,
        or spoof:<type>."""
        if self.label.kind == LABEL_CLEAN:
            return f"platform:{self.label.truth_id}"
        if self.label.kind == LABEL_CLUTTER:
            return "clutter"
        return f"spoof:{self.label.spoof_type}"


@dataclass(frozen=True)
class DetectionFrame:
    """All detections of one timestep, ordered by detection_id."""

    t: int
    detections: tuple[Detection, ...]

    def __post_init__(self) -> None:
        if any(d.t != self.t for d in self.detections):
            raise ValueError("frame contains detections from another timestep")
        ids = [d.detection_id for d in self.detections]
        if ids != sorted(ids):
            object.__setattr__(
                self,
                "detections",
                tuple(sorted(self.detections, key=lambda d: d.detection_id)),
            )


@dataclass(frozen=True)
class SensorConfig:
    p_detect: float = 0.9
    noise_sigma_m: float = 5.0
    clutter_rate: float = 2.0
    fov: Region = DEFAULT_FOV
    seed_stream_tag: int = TAG_SENSE

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_detect <= 1.0:
            raise ConfigError(f"p_detect {self.p_detect} outside [0, 1]")
        if self.noise_sigma_m <= 0.0:
            raise ConfigError("noise_sigma_m must be positive")
        if self.clutter_rate < 0.0:
            raise ConfigError("clutter_rate must be non-negative")

    def as_dict(self) -> dict:
        return {
            "p_detect": self.p_detect,
            "noise_sigma_m": self.noise_sigma_m,
            "clutter_rate": self.clutter_rate,
            "fov": self.fov.as_dict(),
            "seed_stream_tag": self.seed_stream_tag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SensorConfig":
        if not isinstance(d, dict):
            raise ConfigError("sensor config must be an object")
        allowed = {"p_detect", "noise_sigma_m", "clutter_rate", "fov", "seed_stream_tag"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown sensor keys: {sorted(unknown)}")
        kwargs: dict = {}
        for key in ("p_detect", "noise_sigma_m", "clutter_rate"):
            if key in d:
                kwargs[key] = float(d[key])
        if "fov" in d:
            kwargs["fov"] = Region.from_dict(d["fov"])
        if "seed_stream_tag" in d:
            kwargs["seed_stream_tag"] = int(d["seed_stream_tag"])
        return cls(**kwargs)


def generate_clean_run(truth, cfg: SensorConfig, seed: int) -> list[DetectionFrame]:
    """Simulate the detection stream of a ground-truth scenario.

    Per timestep, each platform inside the field of view is detected
    with probability p_detect; the measurement is the true position plus
    isotropic Gaussian noise with covariance R = noise_sigma_m^2 * I.
    Clutter counts are Poisson(clutter_rate) with positions uniform over
    the field of view.

    Replay is bit-exact: every draw is addressed by
    (seed, seed_stream_tag, timestep, platform slot).
    """
    sigma = cfg.noise_sigma_m
    R = np.eye(2) * sigma * sigma
    frames: list[DetectionFrame] = []
    next_id = 0
    for k in range(truth.n_steps):
        detections: list[Detection] = []
        for idx, pid in enumerate(truth.platform_ids):
            pos = truth.positions[pid][k]
            if not cfg.fov.contains(pos):
                continue
            rng = substream(seed, cfg.seed_stream_tag, k, idx)
            if rng.random() >= cfg.p_detect:
                continue
            z = pos + rng.normal(0.0, sigma, size=2)
            detections.append(
                Detection(t=k, detection_id=next_id, z=z, R=R.copy(), label=Label.clean(pid))
            )
            next_id += 1
        rng = substream(seed, cfg.seed_stream_tag, k, CLUTTER_SLOT)
        n_clutter = int(rng.poisson(cfg.clutter_rate))
        if n_clutter:
            points = cfg.fov.sample(rng, n_clutter)
            for point in points:
                detections.append(
                    Detection(
                        t=k,
                        detection_id=next_id,
                        z=np.asarray(point, dtype=float),
                        R=R.copy(),
                        label=Label.clutter(),
                    )
                )
                next_id += 1
        frames.append(DetectionFrame(t=k, detections=tuple(detections)))
    return frames


DETECTION_CSV_HEADER = [
    "run_id",
    "t",
    "detection_id",
    "x",
    "y",
    "r_xx",
    "r_xy",
    "r_yy",
    "label",
    "truth_id",
]


def _fmt(value: float) -> str:
    # repr of a Python float is the shortest round-trip form, which keeps
    # the files byte-stable across runs
    return repr(float(value))


def write_detection_csv(path, frames: Iterable[DetectionFrame], run_id: str) -> None:
    """Serialize frames to CSV, one row per detection."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DETECTION_CSV_HEADER)
        for frame in frames:
            for det in frame.detections:
                writer.writerow(
                    [
                        run_id,
                        det.t,
                        det.detection_id,
                        _fmt(det.z[0]),
                        _fmt(det.z[1]),
                        _fmt(det.R[0, 0]),
                        _fmt(det.R[0, 1]),
                        _fmt(det.R[1, 1]),
                        det.label.encode(),
                        "" if det.label.truth_id is None else det.label.truth_id,
                    ]
                )


def read_detection_csv(path) -> tuple[str, list[DetectionFrame]]:
    """Inverse of write_detection_csv; returns (run_id, frames)."""
    by_step: dict[int, list[Detection]] = {}
    run_id = ""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != DETECTION_CSV_HEADER:
            raise ConfigError(f"unexpected detection CSV header: {header}")
        for row in reader:
            run_id = row[0]
            t = int(row[1])
            truth_id = int(row[9]) if row[9] != "" else None
            r_xx, r_xy, r_yy = float(row[5]), float(row[6]), float(row[7])
            det = Detection(
                t=t,
                detection_id=int(row[2]),
                z=np.array([float(row[3]), float(row[4])]),
                R=np.array([[r_xx, r_xy], [r_xy, r_yy]]),
                label=Label.decode(row[8], truth_id),
            )
            by_step.setdefault(t, []).append(det)
    if not by_step:
        return run_id, []
    t_max = max(by_step)
    return run_id, [
        DetectionFrame(t=k, detections=tuple(by_step.get(k, ()))) for k in range(t_max + 1)
    ]
