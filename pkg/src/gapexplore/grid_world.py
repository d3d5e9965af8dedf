"""Static 2D occupancy grid, map I/O, traversability and coverage accounting.

Cells are indexed ``(ix, iy)`` with ``iy = 0`` at the bottom of the map, so the
backing array ``cells[iy, ix]`` is row-major with world y increasing with the
row index. ASCII and PGM files store the top row first; the loaders flip.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import BinaryIO, Iterable

import numpy as np


class MalformedMap(ValueError):
    """Raised when a map stream does not conform to its declared format."""


class NoFreeCells(ValueError):
    """Raised when coverage is requested on a map without reachable free space."""


class CellState(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


ASCII_SYMBOLS = {".": CellState.FREE, "#": CellState.OCCUPIED, "?": CellState.UNKNOWN}
_SYMBOL_OF = {v: k for k, v in ASCII_SYMBOLS.items()}

PGM_OCCUPIED_BELOW = 64
PGM_FREE_ABOVE = 191


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Immutable occupancy grid.

    ``origin`` is the world position of the bottom-left corner of cell (0, 0).
    """

    width: int
    height: int
    resolution: float
    cells: np.ndarray
    origin: tuple[float, float] = (0.0, 0.0)
    blocked: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise MalformedMap(f"non-positive dimensions {self.width}x{self.height}")
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise MalformedMap(f"resolution must be > 0, got {self.resolution}")
        cells = np.asarray(self.cells, dtype=np.uint8)
        if cells.size != self.width * self.height:
            raise MalformedMap(
                f"{cells.size} cells for a {self.width}x{self.height} grid"
            )
        cells = cells.reshape(self.height, self.width).copy()
        if cells.size and cells.max() > CellState.UNKNOWN:
            raise MalformedMap("cell values must be CellState members")
        cells.setflags(write=False)
        blocked = cells != CellState.FREE
        blocked.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "blocked", blocked)

    @classmethod
    def empty(cls, width_m: float, height_m: float, resolution: float) -> "OccupancyGrid":
        w = int(round(width_m / resolution))
        h = int(round(height_m / resolution))
        return cls(w, h, resolution, np.zeros((h, w), dtype=np.uint8))

    @property
    def width_m(self) -> float:
        return self.width * self.resolution

    @property
    def height_m(self) -> float:
        return self.height * self.resolution

    def state(self, ix: int, iy: int) -> CellState:
        return CellState(int(self.cells[iy, ix]))

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def contains_point(self, x: float, y: float) -> bool:
        ox, oy = self.origin
        return ox <= x < ox + self.width_m and oy <= y < oy + self.height_m

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        ox, oy = self.origin
        return (
            int(math.floor((x - ox) / self.resolution)),
            int(math.floor((y - oy) / self.resolution)),
        )

    def cell_to_world(self, ix: int, iy: int) -> tuple[float, float]:
        """Center of cell ``(ix, iy)`` in world coordinates."""
        ox, oy = self.origin
        return (ox + (ix + 0.5) * self.resolution, oy + (iy + 0.5) * self.resolution)

    def with_cells(self, cells: np.ndarray) -> "OccupancyGrid":
        return OccupancyGrid(self.width, self.height, self.resolution, cells, self.origin)


# --------------------------------------------------------------------------- I/O


def _read_all(source: bytes | BinaryIO | str) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, str):
        return source.encode("ascii")
    return source.read()


def load_map(
    source: bytes | BinaryIO | str,
    fmt: str = "ascii-grid",
    resolution: float | None = None,
) -> OccupancyGrid:
    """Parse a map from bytes or a binary stream.

    ``fmt`` is ``"ascii-grid"`` or ``"pgm"``. PGM carries no scale, so
    ``resolution`` is required for it.
    """
    data = _read_all(source)
    if fmt == "ascii-grid":
        return _load_ascii(data)
    if fmt == "pgm":
        if resolution is None:
            raise MalformedMap("pgm maps need an explicit resolution")
        return _load_pgm(data, resolution)
    raise ValueError(f"unknown map format {fmt!r}")


def load_map_file(path: str, resolution: float | None = None) -> OccupancyGrid:
    fmt = "pgm" if str(path).lower().endswith(".pgm") else "ascii-grid"
    with open(path, "rb") as fh:
        return load_map(fh, fmt, resolution)


def _load_ascii(data: bytes) -> OccupancyGrid:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise MalformedMap("ascii map contains non-ascii bytes") from exc
    lines = text.splitlines()
    if not lines:
        raise MalformedMap("empty map")
    header = lines[0].split()
    if len(header) != 3:
        raise MalformedMap(f"header must be 'W H RES', got {lines[0]!r}")
    try:
        w, h, res = int(header[0]), int(header[1]), float(header[2])
    except ValueError as exc:
        raise MalformedMap(f"bad header {lines[0]!r}") from exc
    if not (res > 0 and math.isfinite(res)):
        raise MalformedMap(f"resolution must be > 0, got {header[2]}")
    rows = lines[1:]
    # tolerate a single trailing blank line only
    while rows and rows[-1] == "":
        rows.pop()
    if len(rows) != h:
        raise MalformedMap(f"expected {h} rows, found {len(rows)}")
    cells = np.empty((h, w), dtype=np.uint8)
    for r, row in enumerate(rows):
        if len(row) != w:
            raise MalformedMap(f"row {r} has {len(row)} characters, expected {w}")
        for c, ch in enumerate(row):
            try:
                cells[h - 1 - r, c] = ASCII_SYMBOLS[ch]
            except KeyError:
                raise MalformedMap(f"illegal symbol {ch!r} at row {r}, column {c}") from None
    return OccupancyGrid(w, h, res, cells)


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens: list[bytes] = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace() and data[i : i + 1] != b"#":
            i += 1
        if start == i:
            raise MalformedMap("truncated pgm header")
        tokens.append(data[start:i])
    # exactly one whitespace byte separates the header from the raster
    if i >= n or not data[i : i + 1].isspace():
        raise MalformedMap("pgm header not followed by whitespace")
    return tokens, i + 1


def _load_pgm(data: bytes, resolution: float) -> OccupancyGrid:
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise MalformedMap(f"unsupported pgm magic {tokens[0]!r}")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise MalformedMap("non-integer pgm header field") from exc
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise MalformedMap(f"bad pgm header {w}x{h} maxval={maxval}")
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    expected = w * h * dtype.itemsize
    raster = data[offset : offset + expected]
    if len(raster) != expected:
        raise MalformedMap(f"pgm raster has {len(raster)} bytes, expected {expected}")
    pix = np.frombuffer(raster, dtype=dtype).reshape(h, w).astype(np.int64)
    # thresholds are on the 0..255 scale; compare exactly, without rounding
    scaled = pix * 255
    cells = np.full((h, w), CellState.UNKNOWN, dtype=np.uint8)
    cells[scaled < PGM_OCCUPIED_BELOW * maxval] = CellState.OCCUPIED
    cells[scaled > PGM_FREE_ABOVE * maxval] = CellState.FREE
    return OccupancyGrid(w, h, resolution, cells[::-1])


def save_map(grid: OccupancyGrid) -> bytes:
    """Canonical ASCII encoding: ``W H RES`` header, top row first, LF endings."""
    out = io.StringIO()
    out.write(f"{grid.width} {grid.height} {grid.resolution!r}\n")
    for iy in range(grid.height - 1, -1, -1):
        out.write("".join(_SYMBOL_OF[CellState(v)] for v in grid.cells[iy]))
        out.write("\n")
    return out.getvalue().encode("ascii")


# ------------------------------------------------------------------ geometry


def is_traversable(grid: OccupancyGrid, p: tuple[float, float], r: float) -> bool:
    """True iff every cell touching the closed disc of radius ``r`` at ``p`` is free.

    A disc that leaves the map is not traversable.
    """
    if r <= 0:
        raise ValueError("robot radius must be positive")
    x, y = p
    ox, oy = grid.origin
    res = grid.resolution
    if x - r < ox or y - r < oy or x + r > ox + grid.width_m or y + r > oy + grid.height_m:
        return False
    gx = (x - ox) / res
    gy = (y - oy) / res
    rr = r / res
    ix0 = max(int(math.floor(gx - rr)), 0)
    ix1 = min(int(math.floor(gx + rr)), grid.width - 1)
    iy0 = max(int(math.floor(gy - rr)), 0)
    iy1 = min(int(math.floor(gy + rr)), grid.height - 1)
    window = grid.blocked[iy0 : iy1 + 1, ix0 : ix1 + 1]
    if not window.any():
        return True
    xs = np.arange(ix0, ix1 + 1, dtype=float)
    ys = np.arange(iy0, iy1 + 1, dtype=float)
    # distance from the disc center to each cell rectangle, in cell units
    dx = np.maximum(np.maximum(xs - gx, gx - (xs + 1.0)), 0.0)
    dy = np.maximum(np.maximum(ys - gy, gy - (ys + 1.0)), 0.0)
    touching = dy[:, None] ** 2 + dx[None, :] ** 2 <= rr * rr
    return not bool(np.any(window & touching))


# ------------------------------------------------------------------ coverage


def reachable_free(grid: OccupancyGrid, start_cell: tuple[int, int]) -> np.ndarray:
    """Boolean mask of free cells 4-connected to ``start_cell``."""
    from scipy import ndimage

    free = grid.cells == CellState.FREE
    mask = np.zeros_like(free)
    ix, iy = start_cell
    if not grid.in_bounds(ix, iy) or not free[iy, ix]:
        return mask
    labels, _ = ndimage.label(free)
    return labels == labels[iy, ix]


@dataclass
class CoverageLedger:
    """Cells touched by the sensor during one episode.

    ``reachable`` fixes the coverage denominator; it is computed once, from
    the episode's start cell.
    """

    seen: np.ndarray
    reachable: np.ndarray
    seen_count: int = 0

    @classmethod
    def for_grid(
        cls, grid: OccupancyGrid, start: tuple[float, float] | None = None
    ) -> "CoverageLedger":
        if start is None:
            reachable = grid.cells == CellState.FREE
        else:
            reachable = reachable_free(grid, grid.world_to_cell(*start))
        seen = np.zeros((grid.height, grid.width), dtype=bool)
        return cls(seen=seen, reachable=reachable)


def mark_seen(
    ledger: CoverageLedger,
    grid: OccupancyGrid,
    ray_cells: Iterable[tuple[int, int]] | np.ndarray,
) -> CoverageLedger:
    """Set the listed ``(ix, iy)`` cells; returns the same ledger."""
    arr = np.asarray(ray_cells, dtype=np.int64).reshape(-1, 2)
    if arr.size:
        ix, iy = arr[:, 0], arr[:, 1]
        if (ix < 0).any() or (iy < 0).any() or (ix >= grid.width).any() or (iy >= grid.height).any():
            raise IndexError("ray cell outside the grid")
        ledger.seen[iy, ix] = True
        ledger.seen_count = int(np.count_nonzero(ledger.seen))
    return ledger


def coverage_fraction(ledger: CoverageLedger, grid: OccupancyGrid) -> float:
    """Seen reachable free cells over all reachable free cells."""
    denom = int(np.count_nonzero(ledger.reachable))
    if denom == 0:
        raise NoFreeCells("map has no reachable free cell")
    num = int(np.count_nonzero(ledger.seen & ledger.reachable))
    return num / denom
