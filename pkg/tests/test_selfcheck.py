import math
import time

import numpy as np
import pytest

import oracles
from gapexplore import fixtures, safe_heading, selfcheck
from gapexplore.geometry import Pose
from gapexplore.grid_world import CellState, OccupancyGrid
from gapexplore.planner import PlannerConfig


def test_march_ray_agrees_with_test_oracle():
    g = fixtures.cluttered()
    rng = np.random.default_rng(1)
    for _ in range(30):
        x, y = rng.uniform(0.5, g.width_m - 0.5), rng.uniform(0.5, g.height_m - 0.5)
        a = rng.uniform(0, 360)
        assert selfcheck.march_ray(g, x, y, a, 5.0) == pytest.approx(
            oracles.march(g.cells, g.resolution, x, y, a, 5.0))


def test_ray_box_interval():
    assert selfcheck.ray_box_interval(0, 0.5, 1, 0, (1, 0, 2, 1)) == (1.0, 2.0)
    assert selfcheck.ray_box_interval(0, 1.5, 1, 0, (1, 0, 2, 1)) is None
    assert selfcheck.ray_box_interval(0, 0, -1, 0, (1, 0, 2, 1)) is None


def test_oracle_tunnelled_detects_corner_clip():
    cells = np.zeros((10, 10), dtype=np.uint8)
    cells[5, 5] = CellState.OCCUPIED
    g = OccupancyGrid(10, 10, 0.1, cells)
    # ray through the cell's lower-right corner region, clipping about 2 mm
    x, y = 0.0, 0.0
    a = math.degrees(math.atan2(0.5 + 0.002, 0.6 - 0.002))
    box = (0.5, 0.5, 0.6, 0.6)
    dx, dy = math.cos(math.radians(a)), math.sin(math.radians(a))
    span = selfcheck.ray_box_interval(x, y, dx, dy, box)
    assert span is not None and span[1] - span[0] < 0.01
    assert selfcheck.oracle_tunnelled(g, x, y, a, span[0])
    # a straight hit is not a clip
    assert not selfcheck.oracle_tunnelled(g, 0.0, 0.55, 0.0, 0.5)


def test_gap_oracle_matches_per_degree_oracle():
    rng = np.random.default_rng(2)
    for _ in range(100):
        s = selfcheck.random_scan(rng)
        a = selfcheck.gap_oracle(s.ranges, s.bearings, 2.8, 2.5, 0.3)
        b = oracles.per_degree_gaps(s.ranges, 2.8, 2.5, 0.3)
        assert a == [(float(lo), float(hi)) for lo, hi in b]


def test_straight_and_constant():
    poses = [Pose(0, 0, 30), Pose(math.cos(math.pi / 6), 0.5, 30)]
    assert selfcheck.straight_and_constant(poses)[0]
    assert not selfcheck.straight_and_constant([Pose(0, 0, 0), Pose(1, 0, 1)])[0]
    assert not selfcheck.straight_and_constant([Pose(0, 0, 0), Pose(1, 0.01, 0)])[0]


def test_unobstructed_prefix_stops_near_walls():
    g = OccupancyGrid.empty(50.0, 50.0, 0.1)
    poses = selfcheck.unobstructed_prefix(g, Pose(25, 25, 0), PlannerConfig())
    assert len(poses) > 2
    assert 50.0 - poses[-1].x <= 5.0 + 2.5


def test_all_checks_pass_quickly():
    t0 = time.perf_counter()
    results = selfcheck.run_all()
    assert time.perf_counter() - t0 < 30
    assert [r.name for r in results] == list(selfcheck.CHECKS)
    assert all(r.passed for r in results), [r.line() for r in results]
    assert results[0].line().startswith("PASS raycast-vs-marching")


def test_injected_fault_is_caught_and_undone():
    original = safe_heading.safe_runs
    results = {r.name: r for r in selfcheck.run_all("gap-grouping")}
    assert not results["gaps-vs-per-degree"].passed
    assert safe_heading.safe_runs is original
    with pytest.raises(ValueError):
        with selfcheck.injected("bit-flip"):
            pass


def test_crashing_check_reports_failure(monkeypatch):
    def boom():
        raise RuntimeError("kaput")

    monkeypatch.setitem(selfcheck.CHECKS, "gaps-vs-per-degree", boom)
    monkeypatch.setitem(selfcheck.CHECKS, "raycast-vs-marching", lambda: (True, "skip"))
    monkeypatch.setitem(selfcheck.CHECKS, "straight-line", lambda: (True, "skip"))
    res = selfcheck.run_all()
    assert not res[1].passed and "kaput" in res[1].detail
