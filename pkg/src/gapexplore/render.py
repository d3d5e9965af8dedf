"""Binary PPM (P6) snapshot of an episode: map, sensor coverage and path."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .geometry import Pose
from .grid_world import CellState, CoverageLedger, OccupancyGrid

OCCUPIED = (0, 0, 0)
FREE_SEEN = (255, 255, 255)
FREE_UNSEEN = (160, 160, 160)
UNKNOWN = (64, 64, 64)
PATH = (220, 40, 40)
WAYPOINT = (30, 80, 220)
START = (20, 170, 60)
END = (200, 0, 200)


def _line(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Integer Bresenham line, both endpoints included."""
    pts = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        pts.append((x0, y0))
        if x0 == x1 and y0 == y1:
            return pts
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def base_image(grid: OccupancyGrid, ledger: CoverageLedger | None, scale: int) -> np.ndarray:
    img = np.empty((grid.height, grid.width, 3), dtype=np.uint8)
    cells = grid.cells
    seen = ledger.seen if ledger is not None else np.zeros_like(cells, dtype=bool)
    img[cells == CellState.OCCUPIED] = OCCUPIED
    img[cells == CellState.UNKNOWN] = UNKNOWN
    img[(cells == CellState.FREE) & seen] = FREE_SEEN
    img[(cells == CellState.FREE) & ~seen] = FREE_UNSEEN
    # image row 0 is the top of the map
    img = img[::-1]
    return np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)


def render_episode(
    grid: OccupancyGrid,
    ledger: CoverageLedger | None,
    trace: Sequence[Pose],
    scale: int = 4,
) -> bytes:
    """Deterministic raster; identical inputs give identical bytes."""
    img = base_image(grid, ledger, scale)
    h, w = img.shape[:2]
    ox, oy = grid.origin

    def px(p: Pose) -> tuple[int, int]:
        col = int((p.x - ox) / grid.resolution * scale)
        row = h - 1 - int((p.y - oy) / grid.resolution * scale)
        return min(max(col, 0), w - 1), min(max(row, 0), h - 1)

    def dot(c: tuple[int, int], half: int, color: tuple[int, int, int]) -> None:
        x, y = c
        img[max(y - half, 0) : y + half + 1, max(x - half, 0) : x + half + 1] = color

    pts = [px(p) for p in trace]
    for a, b in zip(pts, pts[1:]):
        for x, y in _line(*a, *b):
            img[y, x] = PATH
    for c in pts[1:-1]:
        dot(c, 1, WAYPOINT)
    if pts:
        dot(pts[0], 3, START)
        dot(pts[-1], 2, END)
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    return header + img.tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
