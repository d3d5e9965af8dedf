"""Pose type and degree-based angle helpers shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass


def normalize_deg(angle: float) -> float:
    """Wrap into [0, 360)."""
    a = float(angle) % 360.0
    # -tiny % 360.0 rounds up to 360.0
    return 0.0 if a == 360.0 else a


def signed_diff_deg(a: float, b: float) -> float:
    """Smallest signed rotation taking ``b`` to ``a``, in (-180, 180]."""
    d = normalize_deg(a - b)
    return d - 360.0 if d > 180.0 else d


def unit(angle_deg: float) -> tuple[float, float]:
    """Unit vector for a heading; exact on multiples of 90 degrees."""
    a = normalize_deg(angle_deg)
    if a % 90.0 == 0.0:
        return {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}[a]
    rad = math.radians(a)
    return (math.cos(rad), math.sin(rad))


@dataclass(frozen=True)
class Pose:
    """Planar pose; ``theta`` in degrees, normalized into [0, 360)."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_deg(self.theta))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    @classmethod
    def parse(cls, text: str) -> "Pose":
        """Parse ``"X,Y,THETA_DEG"``."""
        parts = text.split(",")
        if len(parts) != 3:
            raise ValueError(f"pose must be X,Y,THETA_DEG, got {text!r}")
        x, y, th = (float(p) for p in parts)
        return cls(x, y, th)
