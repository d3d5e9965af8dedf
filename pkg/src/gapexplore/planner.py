"""Waypoint exploration loop: gap choice, waypoint memory and reverse fallback."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .geometry import Pose, normalize_deg, unit
from .grid_world import OccupancyGrid, is_traversable
from .kinematics import segment_clear
from .lidar import Scan
from .safe_heading import (
    POLICIES,
    FeasibleRegion,
    Gap,
    HalfPlane,
    extract_gaps,
    intersect_forward,
)

DEFAULT_A_R = math.cos(math.radians(30.0))


class Outcome(Enum):
    ADVANCED = "Advanced"
    SKIPPED = "Skipped"
    REVERSED = "Reversed"


@dataclass(frozen=True)
class WaypointRecord:
    pose: Pose
    k: int
    outcome: Outcome


@dataclass
class WaypointLog:
    """Append-only memory of visited waypoints."""

    revisit_radius: float
    a_r: float = DEFAULT_A_R
    records: list[WaypointRecord] = field(default_factory=list)

    def append(self, pose: Pose, outcome: Outcome) -> WaypointRecord:
        k = self.records[-1].k + 1 if self.records else 0
        rec = WaypointRecord(pose, k, outcome)
        self.records.append(rec)
        return rec

    def neighbours(self, candidate: Pose) -> list[WaypointRecord]:
        rr = self.revisit_radius
        return [
            rec
            for rec in self.records
            if math.hypot(rec.pose.x - candidate.x, rec.pose.y - candidate.y) <= rr
        ]

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class PlannerConfig:
    """Tunables for one exploration run.

    ``d_tilde=None`` means half the LiDAR range and ``revisit_radius=None``
    half the step. ``window=None`` intersects the full half-plane history.
    """

    l: float = 5.0
    d_tilde: float | None = None
    window: int | None = 3
    r: float = 0.3
    a_r: float = DEFAULT_A_R
    policy: str = "widest"
    max_waypoints: int = 400
    revisit_radius: float | None = None
    obstacle_threshold: float | None = None
    angular_step: float = 1.0

    def __post_init__(self) -> None:
        if not self.l > 0:
            raise ValueError("l must be > 0")
        if self.d_tilde is not None and not self.d_tilde > 0:
            raise ValueError("d_tilde must be > 0")
        if self.window is not None and self.window < 1:
            raise ValueError("window L must be >= 1")
        if not self.r > 0:
            raise ValueError("robot radius must be > 0")
        if not -1.0 <= self.a_r <= 1.0:
            raise ValueError("a_r must lie in [-1, 1]")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if self.max_waypoints <= 0:
            raise ValueError("max_waypoints must be > 0")

    @property
    def step(self) -> float:
        return 0.5 * self.l if self.d_tilde is None else self.d_tilde

    @property
    def revisit(self) -> float:
        return 0.5 * self.step if self.revisit_radius is None else self.revisit_radius

    @property
    def threshold(self) -> float:
        return self.step + self.r if self.obstacle_threshold is None else self.obstacle_threshold


def next_waypoint(pose: Pose, heading: float, d_tilde: float) -> Pose:
    """Advance ``d_tilde`` along ``heading`` and arrive facing it."""
    if not d_tilde > 0:
        raise ValueError("d_tilde must be > 0")
    ux, uy = unit(heading)
    return Pose(pose.x + d_tilde * ux, pose.y + d_tilde * uy, heading)


def is_revisit(log: WaypointLog, candidate: Pose) -> bool:
    return bool(log.neighbours(candidate))


def orientation_similar(theta_a: float, theta_b: float, a_r: float) -> bool:
    """True when the two headings are too alike (cosine at least ``a_r``).

    ``a_r = 1`` only matches identical headings, which disables the rule.
    """
    if a_r >= 1.0:
        return normalize_deg(theta_a) == normalize_deg(theta_b)
    ax, ay = unit(theta_a)
    bx, by = unit(theta_b)
    return ax * bx + ay * by >= a_r


class Action(Enum):
    ADVANCE = "ADVANCE"
    REVERSE = "REVERSE"
    HALT = "HALT"


@dataclass(frozen=True)
class Decision:
    action: Action
    target: Pose | None = None
    gap: Gap | None = None
    cleared_region: bool = False


@dataclass
class PlannerState:
    pose: Pose
    log: WaypointLog
    region: FeasibleRegion

    @classmethod
    def start(cls, pose: Pose, cfg: PlannerConfig) -> "PlannerState":
        log = WaypointLog(cfg.revisit, cfg.a_r)
        log.append(pose, Outcome.SKIPPED)
        return cls(pose, log, FeasibleRegion(cfg.window))


def _acceptable(
    state: PlannerState, target: Pose, grid: OccupancyGrid, cfg: PlannerConfig, a_r: float
) -> bool:
    if not is_traversable(grid, target.xy, cfg.r):
        return False
    if not segment_clear(grid, state.pose.xy, target.xy, cfg.r):
        return False
    for rec in state.log.neighbours(target):
        if orientation_similar(target.theta, rec.pose.theta, a_r):
            return False
    return True


def _find_next_heading(
    state: PlannerState, gaps, grid: OccupancyGrid, cfg: PlannerConfig
) -> tuple[Gap, Pose] | None:
    d = cfg.step
    for gap in gaps:
        if not gap.clearance_ok:
            continue
        heading = gap.heading
        if not intersect_forward(state.region, heading, state.pose, d):
            continue
        target = next_waypoint(state.pose, heading, d)
        if _acceptable(state, target, grid, cfg, cfg.a_r):
            return gap, target
    return None


def plan_step(
    state: PlannerState, scan: Scan, cfg: PlannerConfig, grid: OccupancyGrid
) -> Decision:
    """Decide the next move from ``state.pose`` given a scan taken there.

    Gaps are tried in policy order against the retained half-planes; if none
    fits, the half-planes are dropped and the gaps retried; if still none,
    the heading is flipped and the revisit rule suspended for that move. The
    reversed move steps ``d_tilde`` backwards, or turns in place when that
    step is blocked. Halt means both were already tried from this spot.
    Does not mutate ``state``; see ``apply_decision``.
    """
    gaps = extract_gaps(scan, cfg.r, cfg.step, cfg.threshold, cfg.policy)
    found = _find_next_heading(state, gaps, grid, cfg)
    if found is not None:
        return Decision(Action.ADVANCE, found[1], found[0])
    cleared = len(state.region) > 0
    if cleared:
        bare = PlannerState(state.pose, state.log, FeasibleRegion(cfg.window))
        found = _find_next_heading(bare, gaps, grid, cfg)
        if found is not None:
            return Decision(Action.ADVANCE, found[1], found[0], cleared_region=True)
    flipped = state.pose.theta + 180.0
    backward = next_waypoint(state.pose, flipped, cfg.step)
    if _acceptable(state, backward, grid, cfg, a_r=1.0):
        return Decision(Action.REVERSE, backward, cleared_region=cleared)
    # no room behind: turn around on the spot unless already done here
    turned = Pose(state.pose.x, state.pose.y, flipped)
    if not any(orientation_similar(turned.theta, rec.pose.theta, 1.0)
               for rec in state.log.neighbours(turned)):
        return Decision(Action.REVERSE, turned, cleared_region=cleared)
    return Decision(Action.HALT, cleared_region=cleared)


def apply_decision(state: PlannerState, decision: Decision) -> WaypointRecord | None:
    """Commit a decision: update half-planes, log the waypoint, move the pose."""
    if decision.action is Action.HALT:
        return None
    departed = state.pose
    if decision.cleared_region or decision.action is Action.REVERSE:
        state.region.clear()
    if decision.action is Action.ADVANCE:
        state.region.push(HalfPlane.forward_of(departed))
        outcome = Outcome.ADVANCED
    else:
        outcome = Outcome.REVERSED
    state.pose = decision.target
    return state.log.append(decision.target, outcome)
