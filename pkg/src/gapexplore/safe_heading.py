"""Allowable heading regions (gaps), forward half-planes and heading choice.

A gap is a maximal run of consecutive scan bearings whose range exceeds the
obstacle threshold. Its boundaries are the first and last safe bearings of
the run, so widths are multiples of the scan's angular step. Bearings are
kept relative to the scan heading internally; the bisector is formed in that
frame and only then rotated into the world frame, which keeps an
obstacle-free scan's heading bit-identical to the pose heading.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .geometry import Pose, normalize_deg, unit
from .lidar import Scan

POLICIES = ("widest", "paper-min", "first-safe")


@dataclass(frozen=True)
class HalfPlane:
    """Closed half-plane ``{q : (q - anchor) . normal >= 0}``."""

    anchor: tuple[float, float]
    normal: tuple[float, float]

    @classmethod
    def forward_of(cls, pose: Pose) -> "HalfPlane":
        return cls(pose.xy, unit(pose.theta))

    def contains(self, point: tuple[float, float]) -> bool:
        return (point[0] - self.anchor[0]) * self.normal[0] + (
            point[1] - self.anchor[1]
        ) * self.normal[1] >= 0.0


@dataclass
class FeasibleRegion:
    """Intersection of the most recent ``window`` half-planes.

    ``window=None`` keeps the full history. An empty region accepts every
    point.
    """

    window: int | None = 3
    planes: deque = field(default_factory=deque)

    def __post_init__(self) -> None:
        if self.window is not None and self.window < 1:
            raise ValueError("half-plane window must be >= 1")
        self.planes = deque(self.planes, maxlen=self.window)

    def push(self, plane: HalfPlane) -> None:
        self.planes.append(plane)

    def clear(self) -> None:
        self.planes.clear()

    def __len__(self) -> int:
        return len(self.planes)

    def contains(self, point: tuple[float, float]) -> bool:
        return all(p.contains(point) for p in self.planes)


def intersect_forward(
    region: FeasibleRegion, candidate_heading: float, pose: Pose, d_tilde: float
) -> bool:
    """Whether the waypoint ``d_tilde`` ahead along ``candidate_heading`` is in the region."""
    ux, uy = unit(candidate_heading)
    return region.contains((pose.x + d_tilde * ux, pose.y + d_tilde * uy))


@dataclass(frozen=True)
class Gap:
    """One allowable angular region.

    ``lo_bearing``/``hi_bearing`` are relative to ``reference`` (the scan
    heading); ``lo``/``hi`` are the world-frame boundaries, with ``hi``
    unwrapped so that ``hi = lo + width``.
    """

    lo_bearing: float
    hi_bearing: float
    reference: float
    clearance_ok: bool = True

    @property
    def width(self) -> float:
        return self.hi_bearing - self.lo_bearing

    @property
    def lo(self) -> float:
        return normalize_deg(self.reference + self.lo_bearing)

    @property
    def hi(self) -> float:
        return self.lo + self.width

    @property
    def bisector_bearing(self) -> float:
        return self.lo_bearing + self.width / 2.0

    @property
    def heading(self) -> float:
        """The gap's bisector in the world frame."""
        return normalize_deg(self.reference + self.bisector_bearing)

    def as_csv_row(self) -> str:
        return f"{self.lo!r},{self.hi!r},{self.width!r},{str(self.clearance_ok).lower()}"


@dataclass(frozen=True)
class GapSet:
    gaps: tuple[Gap, ...]
    policy: str = "widest"

    @property
    def n(self) -> int:
        return len(self.gaps)

    def __iter__(self) -> Iterator[Gap]:
        return iter(self.gaps)

    def __len__(self) -> int:
        return len(self.gaps)

    def __getitem__(self, i: int) -> Gap:
        return self.gaps[i]


def chord_clears(width_deg: float, d_tilde: float, r: float) -> bool:
    """The chord subtended by the gap at ``d_tilde`` admits a disc of radius ``r``."""
    return width_deg > 0 and 2.0 * d_tilde * math.sin(math.radians(width_deg) / 2.0) >= 2.0 * r


def safe_runs(safe: Sequence[bool]) -> list[tuple[int, int]]:
    """Inclusive index ranges of maximal runs of True."""
    mask = np.asarray(safe, dtype=bool)
    if not mask.any():
        return []
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return [(int(a), int(b) - 1) for a, b in zip(edges[0::2], edges[1::2])]


def policy_key(gap: Gap, policy: str) -> tuple:
    turn = abs(gap.bisector_bearing)
    if policy == "widest":
        return (-gap.width, turn, gap.lo_bearing)
    if policy == "paper-min":
        return (gap.width, turn, gap.lo_bearing)
    if policy == "first-safe":
        return (turn, gap.lo_bearing)
    raise ValueError(f"unknown heading policy {policy!r}")


def order_gaps(gaps: Iterable[Gap], policy: str) -> tuple[Gap, ...]:
    return tuple(sorted(gaps, key=lambda g: policy_key(g, policy)))


def extract_gaps(
    scan: Scan,
    r: float,
    d_tilde: float,
    obstacle_threshold: float | None = None,
    policy: str = "widest",
) -> GapSet:
    """Group safe bearings into gaps, drop those too narrow for the robot.

    A bearing is safe when its range exceeds ``obstacle_threshold``
    (default ``d_tilde + r``) or the ray is Clear.
    """
    if r <= 0 or d_tilde <= 0:
        raise ValueError("radius and step distance must be positive")
    threshold = d_tilde + r if obstacle_threshold is None else obstacle_threshold
    safe = scan.ranges > threshold
    gaps = []
    for a, b in safe_runs(safe):
        width = float(scan.bearings[b] - scan.bearings[a])
        if not chord_clears(width, d_tilde, r):
            continue
        gaps.append(Gap(float(scan.bearings[a]), float(scan.bearings[b]), scan.pose.theta))
    return GapSet(order_gaps(gaps, policy), policy)


def select_heading(gaps: GapSet, policy: str | None = None) -> tuple[int, float] | None:
    """Pick a gap and return ``(index in gaps, bisector heading)``.

    ``widest`` maximizes width, ``paper-min`` minimizes it, ``first-safe``
    takes the set's first gap. Ties go to the smaller turn, then lower ``lo``.
    """
    policy = policy or gaps.policy
    candidates = [(i, g) for i, g in enumerate(gaps.gaps) if g.clearance_ok]
    if not candidates:
        return None
    if policy == "first-safe":
        i, g = candidates[0]
    else:
        i, g = min(candidates, key=lambda ig: policy_key(ig[1], policy))
    return i, g.heading
