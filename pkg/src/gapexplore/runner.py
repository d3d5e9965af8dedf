"""Episode orchestration: scan, plan, move, account coverage, write artifacts."""

from __future__ import annotations

import math
import os
import tempfile
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import ndimage

from .geometry import Pose, normalize_deg
from .grid_world import (
    CoverageLedger,
    OccupancyGrid,
    coverage_fraction,
    is_traversable,
    load_map_file,
    mark_seen,
)
from .kinematics import CollisionReport, MotionSegment, execute_move, segment_clear
from .lidar import acquire_scan, add_range_noise
from .planner import Action, PlannerConfig, PlannerState, apply_decision, plan_step


class HaltReason(str, Enum):
    MAX_WAYPOINTS = "MaxWaypoints"
    NO_SAFE_HEADING = "NoSafeHeading"
    NO_FRONTIERS = "NoFrontiers"
    USER_STOP = "UserStop"


class StartNotTraversable(ValueError):
    pass


@dataclass
class EpisodeConfig:
    map_path: str | None = None
    start: Pose = field(default_factory=lambda: Pose(1.0, 1.0, 0.0))
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    noise_sigma: float = 0.0
    seed: int = 0
    strategy: str = "gap"
    trace_out: str | None = None
    report_out: str | None = None
    render_out: str | None = None
    trace_samples: bool = False
    grid: OccupancyGrid | None = None

    def load_grid(self) -> OccupancyGrid:
        if self.grid is not None:
            return self.grid
        if self.map_path is None:
            raise ValueError("episode needs a map path or an in-memory grid")
        return load_map_file(self.map_path)


@dataclass
class TraceRow:
    k: int
    pose: Pose
    decision: str


@dataclass
class EpisodeReport:
    strategy: str
    waypoint_count: int
    path_length: float
    coverage_series: list[float]
    reverse_count: int
    halt_reason: HaltReason
    wall_clock: float
    seed: int = 0
    trace: list[TraceRow] = field(default_factory=list, repr=False)
    segments: list[MotionSegment] = field(default_factory=list, repr=False)
    ledger: CoverageLedger | None = field(default=None, repr=False)

    @property
    def coverage(self) -> float:
        return self.coverage_series[-1] if self.coverage_series else 0.0

    @property
    def final_pose(self) -> Pose:
        return self.trace[-1].pose

    def path_length_to(self, fraction: float) -> float | None:
        """Distance driven when coverage first reached ``fraction``; None if never."""
        for i, c in enumerate(self.coverage_series):
            if c >= fraction:
                return sum(seg.length for seg in self.segments[:i])
        return None

    def waypoints(self) -> list[Pose]:
        return [row.pose for row in self.trace if row.decision != "SAMPLE"]


def _step_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def _check_start(grid: OccupancyGrid, start: Pose, r: float) -> None:
    if not is_traversable(grid, start.xy, r):
        raise StartNotTraversable(f"start ({start.x}, {start.y}) is not traversable at r={r}")


def run_episode(cfg: EpisodeConfig) -> EpisodeReport:
    """Explore with the gap strategy, or the frontier baseline if configured."""
    if cfg.strategy == "frontier":
        return run_frontier_baseline(cfg)
    if cfg.strategy != "gap":
        raise ValueError(f"unknown strategy {cfg.strategy!r}")
    t0 = time.perf_counter()
    grid = cfg.load_grid()
    pcfg = cfg.planner
    _check_start(grid, cfg.start, pcfg.r)

    state = PlannerState.start(cfg.start, pcfg)
    ledger = CoverageLedger.for_grid(grid, cfg.start.xy)
    series: list[float] = []
    trace: list[TraceRow] = []
    segments: list[MotionSegment] = []
    reverses = 0
    path = 0.0
    k = 0
    try:
        while True:
            scan = acquire_scan(grid, state.pose, pcfg.l, pcfg.angular_step)
            mark_seen(ledger, grid, scan.footprint)
            series.append(coverage_fraction(ledger, grid))
            if len(state.log) >= pcfg.max_waypoints:
                trace.append(TraceRow(k, state.pose, Action.HALT.value))
                halt = HaltReason.MAX_WAYPOINTS
                break
            sensed = add_range_noise(scan, cfg.noise_sigma, _step_seed(cfg.seed, k))
            decision = plan_step(state, sensed, pcfg, grid)
            trace.append(TraceRow(k, state.pose, decision.action.value))
            if decision.action is Action.HALT:
                halt = HaltReason.NO_SAFE_HEADING
                break
            seg = execute_move(state.pose, decision.target, grid, pcfg.r)
            segments.append(seg)
            path += seg.length
            if decision.action is Action.REVERSE:
                reverses += 1
            apply_decision(state, decision)
            k += 1
    except KeyboardInterrupt:
        halt = HaltReason.USER_STOP
        if not trace or trace[-1].pose != state.pose:
            trace.append(TraceRow(k, state.pose, Action.HALT.value))
        series = series[: len(state.log)]

    report = EpisodeReport(
        strategy="gap",
        waypoint_count=len(state.log),
        path_length=path,
        coverage_series=series,
        reverse_count=reverses,
        halt_reason=halt,
        wall_clock=time.perf_counter() - t0,
        seed=cfg.seed,
        trace=trace,
        segments=segments,
        ledger=ledger,
    )
    write_artifacts(cfg, grid, report)
    return report


# ---------------------------------------------------------------- baseline


def configuration_space(grid: OccupancyGrid, r: float) -> np.ndarray:
    """Cells whose centre admits the robot disc (same test as ``is_traversable``)."""
    reach = int(math.ceil(r / grid.resolution + 0.5))
    off = np.arange(-reach, reach + 1, dtype=float)
    gap = np.maximum(np.abs(off) - 0.5, 0.0) * grid.resolution
    kernel = gap[:, None] ** 2 + gap[None, :] ** 2 <= r * r
    blocked = ndimage.binary_dilation(grid.blocked, structure=kernel, border_value=1)
    return ~blocked


def _frontier_mask(grid: OccupancyGrid, seen: np.ndarray) -> np.ndarray:
    free_seen = seen & ~grid.blocked
    unseen = np.pad(~seen, 1, constant_values=False)
    h, w = seen.shape
    touch = (
        unseen[:-2, 1:-1][:h, :w]
        | unseen[2:, 1:-1][:h, :w]
        | unseen[1:-1, :-2][:h, :w]
        | unseen[1:-1, 2:][:h, :w]
    )
    return free_seen & touch


def _bfs_path(
    passable: np.ndarray, start: tuple[int, int], goal_mask: np.ndarray
) -> list[tuple[int, int]] | None:
    """Shortest 4-connected path from ``start`` to the nearest goal cell."""
    h, w = passable.shape
    sx, sy = start
    parent = {(sx, sy): None}
    queue = deque([(sx, sy)])
    while queue:
        cx, cy = queue.popleft()
        if goal_mask[cy, cx] and (cx, cy) != (sx, sy):
            out = []
            node = (cx, cy)
            while node is not None:
                out.append(node)
                node = parent[node]
            return out[::-1]
        for nx, ny in ((cx + 1, cy), (cx, cy + 1), (cx - 1, cy), (cx, cy - 1)):
            if 0 <= nx < w and 0 <= ny < h and passable[ny, nx] and (nx, ny) not in parent:
                parent[(nx, ny)] = (cx, cy)
                queue.append((nx, ny))
    return None


def run_frontier_baseline(cfg: EpisodeConfig) -> EpisodeReport:
    """Greedy nearest-frontier exploration with grid BFS paths.

    On reaching a goal the robot turns through four headings, scanning at
    each, so that the forward-only sensor can see the frontier it came for.
    """
    t0 = time.perf_counter()
    grid = cfg.load_grid()
    pcfg = cfg.planner
    r = pcfg.r
    _check_start(grid, cfg.start, r)
    cspace = configuration_space(grid, r)
    ledger = CoverageLedger.for_grid(grid, cfg.start.xy)
    near = max(1, int(math.ceil((r + 2 * grid.resolution) / grid.resolution)))
    near_struct = np.ones((2 * near + 1, 2 * near + 1), dtype=bool)
    banned = np.zeros_like(cspace)
    ban = max(1, int(round(0.5 / grid.resolution)))

    pose = cfg.start
    series: list[float] = []
    trace: list[TraceRow] = []
    segments: list[MotionSegment] = []
    path = 0.0
    k = 0

    def look(p: Pose, around: bool) -> None:
        headings = [p.theta + 90.0 * i for i in range(4)] if around else [p.theta]
        for h in headings:
            scan = acquire_scan(grid, Pose(p.x, p.y, h), pcfg.l, pcfg.angular_step)
            mark_seen(ledger, grid, scan.footprint)

    look(pose, around=True)
    series.append(coverage_fraction(ledger, grid))
    while True:
        if len(series) >= pcfg.max_waypoints:
            trace.append(TraceRow(k, pose, Action.HALT.value))
            halt = HaltReason.MAX_WAYPOINTS
            break
        cx, cy = grid.world_to_cell(pose.x, pose.y)
        passable = cspace & ledger.seen
        passable[cy, cx] = True
        goals = ndimage.binary_dilation(_frontier_mask(grid, ledger.seen), near_struct)
        goals &= passable & ~banned
        route = _bfs_path(passable, (cx, cy), goals)
        if route is None:
            trace.append(TraceRow(k, pose, Action.HALT.value))
            halt = HaltReason.NO_FRONTIERS
            break
        # farthest route cell within one step that is reachable in a straight line
        centres = [grid.cell_to_world(ix, iy) for ix, iy in route]
        chosen = None
        for j in range(len(centres) - 1, 0, -1):
            d = math.hypot(centres[j][0] - pose.x, centres[j][1] - pose.y)
            if d <= pcfg.step and segment_clear(grid, pose.xy, centres[j], r):
                chosen = j
                break
        goal_cell = route[-1]
        if chosen is None:
            banned[max(goal_cell[1] - ban, 0) : goal_cell[1] + ban + 1,
                   max(goal_cell[0] - ban, 0) : goal_cell[0] + ban + 1] = True
            continue
        tx, ty = centres[chosen]
        heading = normalize_deg(math.degrees(math.atan2(ty - pose.y, tx - pose.x)))
        target = Pose(tx, ty, heading)
        try:
            seg = execute_move(pose, target, grid, r)
        except CollisionReport:
            banned[goal_cell[1], goal_cell[0]] = True
            continue
        trace.append(TraceRow(k, pose, Action.ADVANCE.value))
        segments.append(seg)
        path += seg.length
        pose = target
        k += 1
        arrived = chosen == len(route) - 1
        look(pose, around=arrived)
        if arrived:
            banned[max(goal_cell[1] - ban, 0) : goal_cell[1] + ban + 1,
                   max(goal_cell[0] - ban, 0) : goal_cell[0] + ban + 1] = True
        series.append(coverage_fraction(ledger, grid))

    report = EpisodeReport(
        strategy="frontier",
        waypoint_count=len(series),
        path_length=path,
        coverage_series=series,
        reverse_count=0,
        halt_reason=halt,
        wall_clock=time.perf_counter() - t0,
        seed=cfg.seed,
        trace=trace,
        segments=segments,
        ledger=ledger,
    )
    write_artifacts(cfg, grid, report)
    return report


# --------------------------------------------------------------- artifacts


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    """Write via a temporary sibling file and rename into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_trace(report: EpisodeReport, samples: bool = False) -> str:
    lines = ["k,x,y,theta_deg,decision"]
    for row in report.trace:
        p = row.pose
        lines.append(f"{row.k},{p.x!r},{p.y!r},{p.theta!r},{row.decision}")
        if samples and row.k < len(report.segments) and row.decision != "HALT":
            for s in report.segments[row.k].samples[1:-1]:
                lines.append(f"{row.k},{s.x!r},{s.y!r},{s.theta!r},sample")
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> list[TraceRow]:
    rows = []
    for line in text.strip().splitlines()[1:]:
        k, x, y, th, decision = line.split(",")
        if decision == "sample":
            continue
        rows.append(TraceRow(int(k), Pose(float(x), float(y), float(th)), decision))
    return rows


def format_report(report: EpisodeReport, map_path: str | None = None) -> str:
    """Plain ``key: value`` lines; wall-clock time is left out to keep runs byte-identical."""
    fields = [
        ("strategy", report.strategy),
        ("map", map_path or "<memory>"),
        ("seed", report.seed),
        ("waypoints", report.waypoint_count),
        ("path_length_m", f"{report.path_length:.6f}"),
        ("reverse_count", report.reverse_count),
        ("halt_reason", report.halt_reason.value),
        ("coverage_final", f"{report.coverage:.6f}"),
        ("coverage_series", ",".join(f"{c:.6f}" for c in report.coverage_series)),
    ]
    return "".join(f"{key}: {value}\n" for key, value in fields)


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        key, _, value = line.partition(": ")
        out[key] = value
    return out


def write_artifacts(cfg: EpisodeConfig, grid: OccupancyGrid, report: EpisodeReport) -> None:
    from .render import render_episode

    if cfg.trace_out:
        atomic_write(cfg.trace_out, format_trace(report, cfg.trace_samples).encode())
    if cfg.report_out:
        atomic_write(cfg.report_out, format_report(report, cfg.map_path).encode())
    if cfg.render_out:
        atomic_write(cfg.render_out, render_episode(grid, report.ledger, report.waypoints()))
