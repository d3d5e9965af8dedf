"""Unicycle motion between waypoints: rotate in place, then drive straight.

Rates follow the unicycle model ``x' = v cos(theta)``, ``y' = v sin(theta)``,
``theta' = omega``. Speed is ``|p'|`` and yaw rate the signed curvature
quotient ``(x'y'' - y'x'') / |p'|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose, signed_diff_deg, unit
from .grid_world import OccupancyGrid, is_traversable

DEFAULT_SPEED = 0.5  # m/s
DEFAULT_TURN_RATE = 90.0  # deg/s


class CollisionReport(Exception):
    """A sampled disc along the motion is not traversable."""

    def __init__(self, sample: Pose, index: int) -> None:
        super().__init__(f"collision at sample {index}: ({sample.x:.3f}, {sample.y:.3f})")
        self.sample = sample
        self.index = index


class DegenerateSample(ValueError):
    """The centre sample has zero velocity, so yaw rate is undefined."""


@dataclass(frozen=True)
class MotionSegment:
    start: Pose
    end: Pose
    samples: tuple[Pose, ...]
    v: float
    omega: float
    rotation_time: float
    dt: float

    @property
    def translation(self) -> tuple[Pose, ...]:
        """Samples of the straight part, starting at the rotated start pose."""
        return self.samples[1:] if self.rotation_time > 0 else self.samples

    @property
    def length(self) -> float:
        return self.start.distance_to(self.end)


def translation_points(
    p0: tuple[float, float], p1: tuple[float, float], spacing: float
) -> list[tuple[float, float]]:
    """Evenly spaced points from ``p0`` to ``p1`` inclusive, gaps <= ``spacing``."""
    dist = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
    n = max(1, math.ceil(dist / spacing - 1e-12))
    pts = [
        (p0[0] + (p1[0] - p0[0]) * i / n, p0[1] + (p1[1] - p0[1]) * i / n) for i in range(n)
    ]
    pts.append((p1[0], p1[1]))
    return pts


def segment_clear(
    grid: OccupancyGrid, p0: tuple[float, float], p1: tuple[float, float], r: float
) -> bool:
    return all(is_traversable(grid, p, r) for p in translation_points(p0, p1, grid.resolution))


def execute_move(
    pose: Pose,
    target: Pose,
    grid: OccupancyGrid,
    r: float,
    v: float = DEFAULT_SPEED,
    omega: float = DEFAULT_TURN_RATE,
) -> MotionSegment:
    """Rotate from ``pose.theta`` to ``target.theta`` then translate to ``target``.

    Raises ``CollisionReport`` at the first sample whose disc is blocked.
    """
    turn = signed_diff_deg(target.theta, pose.theta)
    samples: list[Pose] = [pose]
    if turn != 0.0:
        samples.append(Pose(pose.x, pose.y, target.theta))
    if pose.xy == target.xy:
        pts = [pose.xy]
    else:
        pts = translation_points(pose.xy, target.xy, grid.resolution)
    samples.extend(Pose(x, y, target.theta) for x, y in pts[1:])
    if len(samples) > 1:
        # exact end pose, not an interpolated copy
        samples[-1] = target
    for i, s in enumerate(samples):
        if not is_traversable(grid, s.xy, r):
            raise CollisionReport(s, i)
    dt = (pose.distance_to(target) / (len(pts) - 1)) / v if len(pts) > 1 else 0.0
    return MotionSegment(
        start=pose,
        end=target,
        samples=tuple(samples),
        v=v,
        omega=math.copysign(omega, turn) if turn else 0.0,
        rotation_time=abs(turn) / omega,
        dt=dt,
    )


def unicycle_rates(
    p_prev: tuple[float, float],
    p_now: tuple[float, float],
    p_next: tuple[float, float],
    dt: float,
) -> tuple[float, float]:
    """Speed (m/s) and yaw rate (deg/s) at ``p_now`` by central differences."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    xd = (p_next[0] - p_prev[0]) / (2.0 * dt)
    yd = (p_next[1] - p_prev[1]) / (2.0 * dt)
    xdd = (p_next[0] - 2.0 * p_now[0] + p_prev[0]) / (dt * dt)
    ydd = (p_next[1] - 2.0 * p_now[1] + p_prev[1]) / (dt * dt)
    speed2 = xd * xd + yd * yd
    if speed2 == 0.0:
        raise DegenerateSample("zero velocity at the centre sample")
    omega = (xd * ydd - yd * xdd) / speed2
    return math.sqrt(speed2), math.degrees(omega)


def integrate_segment(segment: MotionSegment) -> Pose:
    """Forward-Euler integration of the rates recovered from the samples.

    The in-place turn contributes ``omega * rotation_time``; each straight
    step uses the speed recovered from its neighbouring samples.
    """
    s = segment.start
    x, y, theta = s.x, s.y, s.theta + segment.omega * segment.rotation_time
    pts = [p.xy for p in segment.translation]
    if len(pts) < 2 or segment.dt == 0.0:
        return Pose(x, y, theta)
    dt = segment.dt
    for i in range(len(pts) - 1):
        if 0 < i < len(pts) - 1:
            v, _ = unicycle_rates(pts[i - 1], pts[i], pts[i + 1], dt)
        else:
            v = math.hypot(pts[i + 1][0] - pts[i][0], pts[i + 1][1] - pts[i][1]) / dt
        ux, uy = unit(theta)
        x += v * ux * dt
        y += v * uy * dt
    return Pose(x, y, theta)
