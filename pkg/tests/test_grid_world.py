import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from gapexplore import fixtures
from gapexplore.grid_world import (
    CellState,
    CoverageLedger,
    MalformedMap,
    NoFreeCells,
    OccupancyGrid,
    coverage_fraction,
    is_traversable,
    load_map,
    load_map_file,
    mark_seen,
    save_map,
)


def ascii_map(rows, res=0.5):
    return f"{len(rows[0])} {len(rows)} {res}\n" + "\n".join(rows) + "\n"


def test_all_free_3x3():
    g = load_map(ascii_map(["...", "...", "..."]))
    assert (g.cells == CellState.FREE).sum() == 9


def test_center_occupied():
    g = load_map(ascii_map(["...", ".#.", "..."]))
    assert (g.cells == CellState.FREE).sum() == 8
    assert g.state(1, 1) is CellState.OCCUPIED


def test_row_zero_is_top():
    g = load_map(ascii_map(["#..", "...", "..?"]))
    # top-left in the file is (0, H-1) in world cell indices
    assert g.state(0, 2) is CellState.OCCUPIED
    assert g.state(2, 0) is CellState.UNKNOWN


@pytest.mark.parametrize(
    "text",
    [
        "3 3 0.5\n...\n...\n",  # missing row
        "3 2 0.5\n...\n....\n",  # row too long
        "3 1 0.5\n.x.\n",  # illegal symbol
        "3 1 0\n...\n",  # zero resolution
        "3 1\n...\n",  # short header
        "a b c\n...\n",
    ],
)
def test_malformed_ascii(text):
    with pytest.raises(MalformedMap):
        load_map(text)


def _pgm(w, h, pixels, maxval=255, comment=True):
    head = b"P5\n" + (b"# made by hand\n" if comment else b"") + f"{w} {h}\n{maxval}\n".encode()
    if maxval < 256:
        return head + bytes(pixels)
    return head + b"".join(int(p).to_bytes(2, "big") for p in pixels)


def test_pgm_thresholds():
    g = load_map(_pgm(3, 1, [0, 255, 128]), fmt="pgm", resolution=0.1)
    assert [g.state(i, 0) for i in range(3)] == [
        CellState.OCCUPIED, CellState.FREE, CellState.UNKNOWN]


@given(
    st.integers(1, 12), st.integers(1, 12), st.sampled_from([255, 100, 1000, 65535]), st.data()
)
def test_pgm_matches_oracle_decoder(w, h, maxval, data):
    pixels = data.draw(st.lists(st.integers(0, maxval), min_size=w * h, max_size=w * h))
    blob = _pgm(w, h, pixels, maxval)
    g = load_map(io.BytesIO(blob), fmt="pgm", resolution=0.05)
    ow, oh, omax, opix = oracles.decode_pgm(blob)
    assert (g.width, g.height) == (ow, oh)
    for row in range(oh):
        for col in range(ow):
            # file row 0 is the top of the map
            assert g.cells[oh - 1 - row, col] == oracles.pgm_state(opix[row * ow + col], omax)


def test_pgm_errors():
    with pytest.raises(MalformedMap):
        load_map(_pgm(3, 3, [0] * 5), fmt="pgm", resolution=0.1)
    with pytest.raises(MalformedMap):
        load_map(b"P2\n1 1\n255\n0", fmt="pgm", resolution=0.1)
    with pytest.raises(ValueError):
        load_map(_pgm(1, 1, [0]), fmt="pgm")


grids = st.integers(1, 10).flatmap(
    lambda w: st.integers(1, 10).flatmap(
        lambda h: st.lists(st.sampled_from(".#?"), min_size=w * h, max_size=w * h).map(
            lambda cs: ascii_map(["".join(cs[i * w : (i + 1) * w]) for i in range(h)], 0.25)
        )
    )
)


@given(grids)
def test_ascii_round_trip_byte_identical(text):
    assert save_map(load_map(text)).decode() == text


def test_fixture_files_match_builders():
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "fixtures"
    for name, build in fixtures.BUILDERS.items():
        assert (root / f"{name}.grid").read_bytes() == save_map(build()), name
        g = load_map_file(str(root / f"{name}.grid"))
        assert np.array_equal(g.cells, build().cells)


def test_traversable_examples():
    g = OccupancyGrid.empty(10.0, 10.0, 0.1)
    assert is_traversable(g, (5.0, 5.0), 0.3)
    cells = g.cells.copy()
    cells[50, 53] = CellState.OCCUPIED  # cell spans x 5.3..5.4
    g2 = g.with_cells(cells)
    assert not is_traversable(g2, (5.01, 5.05), 0.3)  # 0.29 m from the cell
    assert is_traversable(g2, (4.99, 5.05), 0.3)  # 0.31 m away
    assert not is_traversable(g, (0.2, 5.0), 0.3)  # leaves the map


def test_traversable_matches_brute_force_oracle():
    g = fixtures.cluttered()
    rng = np.random.default_rng(1)
    for _ in range(200):
        p = (rng.uniform(-0.5, g.width_m + 0.5), rng.uniform(-0.5, g.height_m + 0.5))
        r = rng.uniform(0.05, 1.0)
        assert is_traversable(g, p, r) == oracles.traversable_oracle(g.cells, g.resolution, *p, r)


@given(st.floats(0.0, 12.0), st.floats(0.0, 10.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_traversability_anti_monotone_in_r(x, y, r1, r2):
    g = fixtures.cluttered()
    lo, hi = sorted((r1, r2))
    if is_traversable(g, (x, y), hi):
        assert is_traversable(g, (x, y), lo)


def test_mark_seen_counts():
    g = OccupancyGrid.empty(2.0, 2.0, 0.5)
    led = CoverageLedger.for_grid(g)
    cells = [(0, 0), (1, 0), (2, 0), (3, 3), (1, 2)]
    mark_seen(led, g, cells)
    assert led.seen_count == 5
    mark_seen(led, g, cells)
    assert led.seen_count == 5
    with pytest.raises(IndexError):
        mark_seen(led, g, [(4, 0)])


@given(st.lists(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 5)), max_size=20), max_size=6))
def test_mark_seen_equals_set_union(batches):
    g = OccupancyGrid.empty(4.0, 3.0, 0.5)
    led = CoverageLedger.for_grid(g)
    union = set()
    last = 0
    for b in batches:
        mark_seen(led, g, b)
        union |= set(b)
        assert led.seen_count == len(union)
        assert led.seen_count >= last
        last = led.seen_count


def test_coverage_fraction_bounds_and_walled_off_denominator():
    g = fixtures.walled_off()
    led = CoverageLedger.for_grid(g, fixtures.WALLED_START.xy)
    assert coverage_fraction(led, g) == 0.0
    start_cell = g.world_to_cell(*fixtures.WALLED_START.xy)
    reach = oracles.flood_fill(g.cells, start_cell)
    mask = np.zeros_like(led.reachable)
    for ix, iy in reach:
        mask[iy, ix] = True
    assert np.array_equal(led.reachable, mask)
    assert led.reachable.sum() < (g.cells == CellState.FREE).sum()
    mark_seen(led, g, np.argwhere(mask)[:, ::-1])
    assert coverage_fraction(led, g) == 1.0


def test_no_free_cells():
    g = OccupancyGrid(2, 2, 1.0, np.ones((2, 2), dtype=np.uint8))
    with pytest.raises(NoFreeCells):
        coverage_fraction(CoverageLedger.for_grid(g), g)
