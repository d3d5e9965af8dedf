"""Slow reference implementations used only by the tests.

None of these import the package's own geometry helpers, so a shared bug
cannot hide on both sides of a comparison.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

FREE, OCCUPIED, UNKNOWN = 0, 1, 2


def decode_pgm(data: bytes) -> tuple[int, int, int, list[int]]:
    """Tokenize a P5 file by hand; returns width, height, maxval and raw pixels."""
    assert data[:2] == b"P5"
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while data[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = tokens
    if maxval < 256:
        pixels = list(data[pos : pos + w * h])
    else:
        pixels = [int.from_bytes(data[pos + 2 * i : pos + 2 * i + 2], "big") for i in range(w * h)]
    return w, h, maxval, pixels


def pgm_state(value: int, maxval: int = 255) -> int:
    """Thresholds 64 and 191 on the 0..255 scale, compared as exact fractions."""
    from fractions import Fraction

    v = Fraction(value * 255, maxval)
    if v < 64:
        return OCCUPIED
    if v > 191:
        return FREE
    return UNKNOWN


def flood_fill(cells: np.ndarray, start: tuple[int, int]) -> set[tuple[int, int]]:
    """4-connected Free cells reachable from ``start`` (ix, iy); cells indexed [iy, ix]."""
    h, w = cells.shape
    sx, sy = start
    if cells[sy, sx] != FREE:
        return set()
    seen = {(sx, sy)}
    q = deque([(sx, sy)])
    while q:
        x, y = q.popleft()
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < w and 0 <= ny < h and (nx, ny) not in seen and cells[ny, nx] == FREE:
                seen.add((nx, ny))
                q.append((nx, ny))
    return seen


def disc_hits_cell(px: float, py: float, r: float, x0: float, y0: float, res: float) -> bool:
    """Closed disc vs closed square, by nearest point on the square."""
    nx = min(max(px, x0), x0 + res)
    ny = min(max(py, y0), y0 + res)
    return (px - nx) ** 2 + (py - ny) ** 2 <= r * r


def traversable_oracle(cells: np.ndarray, res: float, px: float, py: float, r: float) -> bool:
    """Scan every cell of the map; out-of-map discs are not traversable."""
    h, w = cells.shape
    if px - r < 0 or py - r < 0 or px + r > w * res or py + r > h * res:
        return False
    for iy in range(h):
        for ix in range(w):
            if cells[iy, ix] != FREE and disc_hits_cell(px, py, r, ix * res, iy * res, res):
                return False
    return True


def min_distance_to_blocked(cells: np.ndarray, res: float, px: float, py: float) -> float:
    """Euclidean distance from a point to the nearest non-Free cell or the map edge."""
    h, w = cells.shape
    iy, ix = np.nonzero(cells != FREE)
    edge = min(px, py, w * res - px, h * res - py)
    if iy.size == 0:
        return edge
    x0 = ix * res
    y0 = iy * res
    dx = np.maximum(np.maximum(x0 - px, px - (x0 + res)), 0.0)
    dy = np.maximum(np.maximum(y0 - py, py - (y0 + res)), 0.0)
    return float(min(edge, np.sqrt(dx * dx + dy * dy).min()))


def march(cells: np.ndarray, res: float, x: float, y: float, angle_deg: float, l: float) -> float:
    """Ray march at res/10; leaving the map counts as a hit."""
    h, w = cells.shape
    step = res / 10.0
    c, s = math.cos(math.radians(angle_deg)), math.sin(math.radians(angle_deg))
    t = step
    while t <= l + 1e-12:
        px, py = x + t * c, y + t * s
        ix, iy = math.floor(px / res), math.floor(py / res)
        if not (0 <= ix < w and 0 <= iy < h) or cells[iy, ix] != FREE:
            return t
        t += step
    return math.inf


def per_degree_gaps(ranges, threshold: float, d_tilde: float, r: float) -> list[tuple[int, int]]:
    """Label each 1-degree bearing, group runs, keep runs wide enough for the disc."""
    labels = ["S" if (math.isinf(v) or v > threshold) else "U" for v in ranges]
    runs = []
    i = 0
    while i < len(labels):
        if labels[i] == "S":
            j = i
            while j + 1 < len(labels) and labels[j + 1] == "S":
                j += 1
            runs.append((i - 90, j - 90))
            i = j + 1
        else:
            i += 1
    half = lambda lo, hi: math.sin(math.radians((hi - lo) / 2.0))  # noqa: E731
    return [(lo, hi) for lo, hi in runs if hi > lo and 2 * d_tilde * half(lo, hi) >= 2 * r]


def menger_omega(p0, p1, p2, dt: float) -> float:
    """Yaw rate in deg/s from the circle through three samples, times speed."""
    a = math.dist(p0, p1)
    b = math.dist(p1, p2)
    c = math.dist(p0, p2)
    cross = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
    kappa = 2.0 * cross / (a * b * c)
    speed = c / (2.0 * dt)
    return math.degrees(kappa * speed)
