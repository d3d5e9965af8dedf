"""Scenario maps used by the test suite, the self-check and the examples.

Every builder is deterministic; ``write_all`` regenerates the committed
``fixtures/*.grid`` files.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Pose
from .grid_world import CellState, OccupancyGrid, save_map

RES = 0.1
WALL = 0.2


class _Canvas:
    def __init__(self, width_m: float, height_m: float, res: float = RES) -> None:
        self.res = res
        self.cells = np.zeros((round(height_m / res), round(width_m / res)), dtype=np.uint8)

    def _idx(self, v: float) -> int:
        return int(round(v / self.res))

    def fill(self, x0: float, y0: float, x1: float, y1: float, state: CellState) -> None:
        self.cells[self._idx(y0) : self._idx(y1), self._idx(x0) : self._idx(x1)] = state

    def wall(self, x0: float, y0: float, x1: float, y1: float) -> None:
        self.fill(x0, y0, x1, y1, CellState.OCCUPIED)

    def open(self, x0: float, y0: float, x1: float, y1: float) -> None:
        self.fill(x0, y0, x1, y1, CellState.FREE)

    def border(self, t: float = WALL) -> None:
        h, w = self.cells.shape
        self.wall(0, 0, w * self.res, t)
        self.wall(0, h * self.res - t, w * self.res, h * self.res)
        self.wall(0, 0, t, h * self.res)
        self.wall(w * self.res - t, 0, w * self.res, h * self.res)

    def grid(self) -> OccupancyGrid:
        h, w = self.cells.shape
        return OccupancyGrid(w, h, self.res, self.cells)


@dataclass(frozen=True)
class Box:
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


def empty() -> OccupancyGrid:
    """20 x 20 m of free space; the map edge is the only obstacle."""
    return OccupancyGrid.empty(20.0, 20.0, RES)


# open hall on the left, 1.6 m wide corridor closed at its east end
CORRIDOR_BOX = Box(8.0, 3.4, 16.0, 5.0)
CORRIDOR_START = Pose(9.0, 4.2, 0.0)


def corridor() -> OccupancyGrid:
    c = _Canvas(16.0, 10.0)
    c.border()
    c.wall(8.0, 0.0, 16.0, 3.4)
    c.wall(8.0, 5.0, 16.0, 10.0)
    c.wall(15.8, 0.0, 16.0, 10.0)
    return c.grid()


ROOM_BOX = Box(0.2, 0.2, 6.2, 6.2)
ROOM_START = Pose(2.0, 2.0, 0.0)


def room_one_door() -> OccupancyGrid:
    """6 x 6 m room with a single 1.2 m door in its east wall, open floor outside."""
    c = _Canvas(14.0, 10.0)
    c.border()
    c.wall(6.2, 0.0, 6.4, 6.4)
    c.wall(0.0, 6.2, 6.4, 6.4)
    c.open(6.2, 2.6, 6.4, 3.8)
    return c.grid()


def single_room() -> OccupancyGrid:
    c = _Canvas(8.0, 6.0)
    c.border()
    return c.grid()


WALLED_START = Pose(2.0, 3.0, 0.0)


def walled_off() -> OccupancyGrid:
    """A room with a sealed neighbour that no path reaches."""
    c = _Canvas(12.0, 6.0)
    c.border()
    c.wall(7.0, 0.0, 7.2, 6.0)
    return c.grid()


ELBOW_START = Pose(1.1, 1.1, 0.0)


def elbow() -> OccupancyGrid:
    """1.8 m corridor running east that bends 90 degrees north at its far end."""
    c = _Canvas(12.0, 12.0)
    c.border()
    c.wall(0.0, 2.0, 10.0, 12.0)
    return c.grid()


APARTMENT_START = Pose(1.5, 2.45, 0.0)
APARTMENT_ROOM_WIDTHS = (5.0, 5.5, 5.0, 6.0, 5.0)
APARTMENT_DEPTH = 4.5
_DOOR_OFFSETS = (0.0, 0.3, -0.2, 0.1)


def apartment() -> OccupancyGrid:
    """Five rooms in a row joined by 0.9 m doorways, with furniture blocks."""
    depth = APARTMENT_DEPTH
    widths = APARTMENT_ROOM_WIDTHS
    total = sum(widths) + WALL * (len(widths) + 1)
    c = _Canvas(round(total, 1), depth + 2 * WALL)
    c.border()
    x = WALL
    for w, off in zip(widths[:-1], _DOOR_OFFSETS):
        x += w
        c.wall(x, 0.0, x + WALL, depth + 2 * WALL)
        yc = WALL + depth / 2 + off
        c.open(x, round(yc - 0.45, 1), x + WALL, round(yc + 0.45, 1))
        x += WALL
    for box in [
        (0.2, 0.2, 1.8, 0.8),
        (6.0, 4.0, 7.5, 4.7),
        (12.5, 0.2, 13.3, 1.4),
        (18.5, 3.8, 19.5, 4.7),
        (25.0, 0.2, 26.5, 0.9),
    ]:
        c.wall(*box)
    return c.grid()


def cluttered() -> OccupancyGrid:
    c = _Canvas(12.0, 10.0)
    c.border()
    for x0, y0, x1, y1 in [
        (3.0, 2.0, 3.6, 2.6),
        (6.0, 5.0, 7.0, 5.4),
        (8.5, 2.0, 9.0, 4.0),
        (2.5, 7.0, 4.0, 7.5),
        (9.0, 7.5, 9.5, 8.0),
    ]:
        c.wall(x0, y0, x1, y1)
    return c.grid()


BUILDERS = {
    "empty": empty,
    "corridor": corridor,
    "room_one_door": room_one_door,
    "single_room": single_room,
    "walled_off": walled_off,
    "apartment": apartment,
    "elbow": elbow,
    "cluttered": cluttered,
}

STARTS = {
    "empty": Pose(10.0, 10.0, 0.0),
    "corridor": CORRIDOR_START,
    "room_one_door": ROOM_START,
    "single_room": Pose(1.0, 3.0, 0.0),
    "walled_off": WALLED_START,
    "apartment": APARTMENT_START,
    "elbow": ELBOW_START,
    "cluttered": Pose(1.5, 1.5, 45.0),
}


def write_all(directory: str | Path) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, build in BUILDERS.items():
        path = out / f"{name}.grid"
        path.write_bytes(save_map(build()))
        written.append(path)
    return written


if __name__ == "__main__":
    for p in write_all(sys.argv[1] if len(sys.argv) > 1 else "fixtures"):
        print(p)
