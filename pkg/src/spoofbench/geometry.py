"""Axis-aligned rectangular regions used for scenario bounds, sensor
fields of view, and spoof placement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Region:
    """Axis-aligned box [x_min, x_max] x [y_min, y_max] in metres."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ConfigError(
                f"degenerate region: x [{self.x_min}, {self.x_max}], "
                f"y [{self.y_min}, {self.y_max}]"
            )

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def contains(self, point) -> bool:
        """True if the (x, y) point lies inside the box (boundary counts)."""
        x, y = float(point[0]), float(point[1])
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n points uniformly over the box, shape (n, 2)."""
        xs = rng.uniform(self.x_min, self.x_max, size=n)
        ys = rng.uniform(self.y_min, self.y_max, size=n)
        return np.column_stack([xs, ys])

    def as_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "y_min": self.y_min,
            "y_max": self.y_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Region":
        if not isinstance(d, dict):
            raise ConfigError(f"region must be an object, got {type(d).__name__}")
        keys = {"x_min", "x_max", "y_min", "y_max"}
        unknown = set(d) - keys
        if unknown:
            raise ConfigError(f"unknown region keys: {sorted(unknown)}")
        missing = keys - set(d)
        if missing:
            raise ConfigError(f"region missing keys: {sorted(missing)}")
        try:
            vals = {k: float(d[k]) for k in keys}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"region values must be numbers: {exc}") from exc
        return cls(**vals)
