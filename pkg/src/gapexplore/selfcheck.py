"""Embedded oracle comparisons run by ``gapexplore selfcheck``.

Each check pits a production routine against a slow, obviously-correct
reimplementation and returns a ``CheckResult``. ``fault`` lets a test build
corrupt one routine on purpose to prove the check can fail.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import fixtures, safe_heading
from .geometry import Pose
from .grid_world import OccupancyGrid, is_traversable
from .lidar import Scan, acquire_scan, scan_bearings
from .planner import PlannerConfig, PlannerState, apply_decision, plan_step

FAULTS = ("gap-grouping",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail} ({self.seconds:.2f}s)"


def march_ray(grid: OccupancyGrid, x: float, y: float, angle_deg: float, l: float) -> float:
    """First non-free sample along a ray stepped at resolution/10; ``inf`` if none within ``l``."""
    step = grid.resolution / 10.0
    dx, dy = math.cos(math.radians(angle_deg)), math.sin(math.radians(angle_deg))
    n = int(math.ceil(l / step))
    for i in range(1, n + 1):
        t = i * step
        px, py = x + t * dx, y + t * dy
        if not grid.contains_point(px, py):
            return t if t <= l else math.inf
        ix, iy = grid.world_to_cell(px, py)
        if grid.blocked[iy, ix]:
            return t if t <= l else math.inf
    return math.inf


def ray_box_interval(x: float, y: float, dx: float, dy: float,
                     box: tuple[float, float, float, float]) -> tuple[float, float] | None:
    """Parameter interval where the ray ``(x, y) + t (dx, dy)`` lies in a closed box."""
    lo, hi = 0.0, math.inf
    for p, d, a, b in ((x, dx, box[0], box[2]), (y, dy, box[1], box[3])):
        if d == 0.0:
            if not a <= p <= b:
                return None
            continue
        t0, t1 = sorted(((a - p) / d, (b - p) / d))
        lo, hi = max(lo, t0), min(hi, t1)
    return (lo, hi) if lo <= hi else None


def oracle_tunnelled(grid: OccupancyGrid, x: float, y: float, angle_deg: float,
                     hit: float) -> bool:
    """Whether a blocked cell near ``hit`` is crossed for less than one march step.

    Such a clip is real but invisible to a fixed-step march, so the
    disagreement is the oracle's, not the raycaster's.
    """
    step = grid.resolution / 10.0
    dx, dy = math.cos(math.radians(angle_deg)), math.sin(math.radians(angle_deg))
    hx, hy = x + hit * dx, y + hit * dy
    cx, cy = grid.world_to_cell(hx, hy)
    res = grid.resolution
    ox, oy = grid.origin
    for iy in range(cy - 1, cy + 2):
        for ix in range(cx - 1, cx + 2):
            if not grid.in_bounds(ix, iy) or not grid.blocked[iy, ix]:
                continue
            box = (ox + ix * res, oy + iy * res, ox + (ix + 1) * res, oy + (iy + 1) * res)
            span = ray_box_interval(x, y, dx, dy, box)
            if span is not None and abs(span[0] - hit) <= 1e-9 + res * 1e-6 \
                    and span[1] - span[0] < step:
                return True
    return False


def gap_oracle(ranges: np.ndarray, bearings: np.ndarray, threshold: float,
               d_tilde: float, r: float) -> list[tuple[float, float]]:
    """Per-bearing safe labels grouped into runs by a plain loop."""
    out = []
    start = None
    for i in range(len(ranges) + 1):
        safe = i < len(ranges) and ranges[i] > threshold
        if safe and start is None:
            start = i
        elif not safe and start is not None:
            lo, hi = float(bearings[start]), float(bearings[i - 1])
            w = hi - lo
            if w > 0 and d_tilde * math.sin(math.radians(w) / 2.0) >= r:
                out.append((lo, hi))
            start = None
    return out


def random_scan(rng: np.random.Generator, l: float = 5.0) -> Scan:
    """Synthetic scan with clustered obstacles and Clear stretches."""
    bearings = scan_bearings(1.0)
    n = bearings.size
    ranges = np.full(n, np.inf)
    i = 0
    while i < n:
        run = int(rng.integers(1, 40))
        kind = rng.random()
        if kind < 0.4:
            ranges[i : i + run] = rng.uniform(0.05, l, size=min(run, n - i))
        elif kind < 0.6:
            ranges[i : i + run] = rng.uniform(0.05, 3.0, size=min(run, n - i))
        i += run
    pose = Pose(0.0, 0.0, float(rng.uniform(0.0, 360.0)))
    return Scan(pose, l, 1.0, bearings, ranges, np.empty((0, 2), dtype=np.int64))


@contextmanager
def injected(fault: str | None) -> Iterator[None]:
    if fault is None:
        yield
        return
    if fault != "gap-grouping":
        raise ValueError(f"unknown fault {fault!r}")
    original = safe_heading.safe_runs

    def broken(mask):
        # drops the last bearing of every run
        return [(a, b - 1) for a, b in original(mask) if b > a]

    safe_heading.safe_runs = broken
    try:
        yield
    finally:
        safe_heading.safe_runs = original


def check_raycast(n_poses: int = 60, seed: int = 11) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    maps = [fixtures.cluttered(), fixtures.apartment(), fixtures.corridor()]
    l = 5.0
    worst = 0.0
    clipped = 0
    for i in range(n_poses):
        grid = maps[i % len(maps)]
        diag = grid.resolution * math.sqrt(2.0)
        while True:
            x = rng.uniform(0.0, grid.width_m)
            y = rng.uniform(0.0, grid.height_m)
            ix, iy = grid.world_to_cell(x, y)
            if not grid.blocked[iy, ix]:
                break
        pose = Pose(x, y, rng.uniform(0.0, 360.0))
        scan = acquire_scan(grid, pose, l)
        for b, got in zip(scan.bearings, scan.ranges):
            want = march_ray(grid, x, y, pose.theta + b, l)
            if math.isinf(got) and math.isinf(want):
                continue
            # one side Clear: the other must lie within a diagonal of l
            g = min(got, l) if math.isinf(got) else got
            w = min(want, l) if math.isinf(want) else want
            err = abs(g - w)
            if err > diag and got < want and oracle_tunnelled(grid, x, y, pose.theta + b, got):
                clipped += 1
                continue
            worst = max(worst, err)
            if err > diag:
                return False, f"pose {pose} bearing {b}: {got} vs oracle {want}"
    return True, f"{n_poses} poses, worst error {worst:.4f} m, {clipped} corner clips"


def check_gaps(n_scans: int = 300, seed: int = 5) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    r, d = 0.3, 2.5
    for i in range(n_scans):
        scan = random_scan(rng)
        got = sorted((g.lo_bearing, g.hi_bearing) for g in safe_heading.extract_gaps(scan, r, d))
        want = gap_oracle(scan.ranges, scan.bearings, d + r, d, r)
        if got != want:
            return False, f"scan {i}: {got} vs oracle {want}"
    return True, f"{n_scans} scans identical"


def check_straight_line(n_starts: int = 20, seed: int = 3) -> tuple[bool, str]:
    """Unobstructed scans keep the heading and the line exactly."""
    rng = np.random.default_rng(seed)
    grid = OccupancyGrid.empty(50.0, 50.0, 0.1)
    cfg = PlannerConfig()
    steps = 0
    for _ in range(n_starts):
        start = Pose(rng.uniform(10, 40), rng.uniform(10, 40), rng.uniform(0, 360))
        poses = unobstructed_prefix(grid, start, cfg)
        steps += len(poses) - 1
        ok, why = straight_and_constant(poses)
        if not ok:
            return False, f"start {start}: {why}"
    return True, f"{n_starts} starts, {steps} unobstructed steps"


def unobstructed_prefix(grid: OccupancyGrid, start: Pose, cfg: PlannerConfig,
                  limit: int = 50) -> list[Pose]:
    """Waypoints visited while every ray of the scan is safe."""
    state = PlannerState.start(start, cfg)
    poses = [start]
    for _ in range(limit):
        scan = acquire_scan(grid, state.pose, cfg.l, cfg.angular_step)
        if not (scan.ranges > cfg.threshold).all():
            break
        decision = plan_step(state, scan, cfg, grid)
        if decision.target is None or not is_traversable(grid, decision.target.xy, cfg.r):
            break
        apply_decision(state, decision)
        poses.append(state.pose)
    return poses


def straight_and_constant(poses: list[Pose], tol: float = 1e-9) -> tuple[bool, str]:
    th = poses[0].theta
    for p in poses[1:]:
        if p.theta != th:
            return False, f"heading changed {th} -> {p.theta}"
    ux, uy = math.cos(math.radians(th)), math.sin(math.radians(th))
    x0, y0 = poses[0].xy
    dev = max((abs((p.x - x0) * uy - (p.y - y0) * ux) for p in poses), default=0.0)
    if dev >= tol:
        return False, f"perpendicular deviation {dev:.3e}"
    return True, "ok"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "raycast-vs-marching": check_raycast,
    "gaps-vs-per-degree": check_gaps,
    "straight-line": check_straight_line,
}


def run_all(fault: str | None = None) -> list[CheckResult]:
    results = []
    with injected(fault):
        for name, fn in CHECKS.items():
            t0 = time.perf_counter()
            try:
                ok, detail = fn()
            except Exception as exc:  # a crash is a failed check
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            results.append(CheckResult(name, ok, detail, time.perf_counter() - t0))
    return results
