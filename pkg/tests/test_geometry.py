import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gapexplore.geometry import Pose, normalize_deg, signed_diff_deg, unit

angles = st.floats(-1e4, 1e4, allow_nan=False)


@given(angles)
def test_normalize_range(a):
    n = normalize_deg(a)
    assert 0.0 <= n < 360.0


def test_normalize_tiny_negative_wraps_to_zero():
    assert normalize_deg(-1e-20) == 0.0
    assert normalize_deg(360.0) == 0.0
    assert normalize_deg(-90.0) == 270.0


@given(angles, angles)
def test_signed_diff_range_and_inverse(a, b):
    d = signed_diff_deg(a, b)
    assert -180.0 < d <= 180.0
    assert math.isclose(normalize_deg(b + d), normalize_deg(a), abs_tol=1e-7) or math.isclose(
        abs(normalize_deg(b + d) - normalize_deg(a)), 360.0, abs_tol=1e-7
    )


@pytest.mark.parametrize("deg,vec", [(0, (1.0, 0.0)), (90, (0.0, 1.0)), (180, (-1.0, 0.0)),
                                     (270, (0.0, -1.0)), (-90, (0.0, -1.0))])
def test_unit_exact_on_axes(deg, vec):
    assert unit(deg) == vec


@given(angles)
def test_unit_norm(a):
    x, y = unit(a)
    assert abs(math.hypot(x, y) - 1.0) < 1e-12


def test_pose_normalizes_and_parses():
    p = Pose.parse("1.5,-2,450")
    assert p == Pose(1.5, -2.0, 90.0)
    assert p.xy == (1.5, -2.0)
    with pytest.raises(ValueError):
        Pose.parse("1,2")
    with pytest.raises(ValueError):
        Pose.parse("a,b,c")
