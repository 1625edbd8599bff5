from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recomap.errors import PointNotOnBoundary
from recomap.geometry import (
    boundary_path,
    clip_ring_horizontal,
    frac,
    format_frac,
    is_rectilinear,
    pt,
    ring_area,
    ring_is_simple,
)

UNIT_SQUARE = [pt(0, 0), pt(1, 0), pt(1, 1), pt(0, 1)]


def test_frac_parsing():
    assert frac("2/3") == F(2, 3)
    assert frac("0.25") == F(1, 4)
    assert frac(3) == F(3)
    assert format_frac(F(2, 6)) == "1/3"
    assert format_frac(F(4, 2)) == "2"
    with pytest.raises(TypeError):
        frac(0.5)


def test_unit_square_area():
    assert ring_area(UNIT_SQUARE) == 1


def test_triangle_area():
    assert ring_area([pt(0, 0), pt(1, 0), pt(0, 1)]) == F(1, 2)


def test_l_shape_area():
    # shoelace evaluated by hand: 3
    ring = [pt(0, 0), pt(2, 0), pt(2, 1), pt(1, 1), pt(1, 2), pt(0, 2)]
    assert ring_area(ring) == 3


def test_corridor_spur_cancels():
    # forward-and-back spur contributes zero area
    ring = [pt(0, 0), pt(1, 0), pt(1, 1), pt(F(1, 2), 1), pt(F(1, 2), 2),
            pt(F(1, 2), 1), pt(0, 1)]
    assert ring_area(ring) == 1


def test_clip_rectangle_slice():
    comps = clip_ring_horizontal(UNIT_SQUARE, F(2, 3), "above")
    assert len(comps) == 1
    assert ring_area(comps[0]) == F(1, 3)


def test_clip_no_op_below_ring():
    comps = clip_ring_horizontal(UNIT_SQUARE, F(-1), "above")
    assert len(comps) == 1
    assert ring_area(comps[0]) == 1
    assert set(map(tuple, comps[0])) == set(map(tuple, UNIT_SQUARE))


def test_clip_u_shape_two_components():
    # U = (0,0),(3,0),(3,2),(2,2),(2,1),(1,1),(1,2),(0,2); above y=3/2 gives
    # two 1 x 1/2 rectangles (oracle areas computed by hand)
    u = [pt(0, 0), pt(3, 0), pt(3, 2), pt(2, 2), pt(2, 1), pt(1, 1), pt(1, 2), pt(0, 2)]
    comps = clip_ring_horizontal(u, F(3, 2), "above")
    assert len(comps) == 2
    areas = sorted(ring_area(c) for c in comps)
    assert areas == [F(1, 2), F(1, 2)]
    for c in comps:
        assert ring_is_simple(c)


def test_clip_below_side():
    comps = clip_ring_horizontal(UNIT_SQUARE, F(2, 3), "below")
    assert len(comps) == 1
    assert ring_area(comps[0]) == F(2, 3)


def test_clip_strictly_other_side():
    assert clip_ring_horizontal(UNIT_SQUARE, 2, "above") == []
    assert clip_ring_horizontal(UNIT_SQUARE, -1, "below") == []


def test_clip_non_rectilinear_triangle():
    tri = [pt(0, 0), pt(2, 0), pt(0, 2)]
    comps = clip_ring_horizontal(tri, 1, "above")
    assert len(comps) == 1
    assert ring_area(comps[0]) == F(1, 2)
    below = clip_ring_horizontal(tri, 1, "below")
    assert ring_area(below[0]) == F(3, 2)


@settings(max_examples=60, deadline=None)
@given(
    xs=st.lists(st.integers(0, 8), min_size=4, max_size=4, unique=True),
    ys=st.lists(st.integers(0, 8), min_size=4, max_size=4, unique=True),
    cut_num=st.integers(0, 16),
)
def test_clip_partition_property(xs, ys, cut_num):
    # staircase-free sanity: an axis-aligned box; above+below partitions the area
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    ring = [pt(x0, y0), pt(x1, y0), pt(x1, y1), pt(x0, y1)]
    cut = F(cut_num, 2)
    above = clip_ring_horizontal(ring, cut, "above")
    below = clip_ring_horizontal(ring, cut, "below")
    total = sum((ring_area(c) for c in above + below), F(0))
    assert total == ring_area(ring)


def test_clip_partition_l_shape_many_cuts():
    ring = [pt(0, 0), pt(2, 0), pt(2, 1), pt(1, 1), pt(1, 2), pt(0, 2)]
    for k in range(0, 9):
        cut = F(k, 4)
        above = clip_ring_horizontal(ring, cut, "above")
        below = clip_ring_horizontal(ring, cut, "below")
        total = sum((ring_area(c) for c in above + below), F(0))
        assert total == 3


def test_boundary_path_same_edge():
    path = boundary_path(UNIT_SQUARE, pt(0, F(1, 2)), pt(0, 1))
    assert path == [pt(0, F(1, 2)), pt(0, 1)]


def test_boundary_path_tie_counterclockwise():
    # symmetric tie across the square: counterclockwise arc via (1,0)
    path = boundary_path(UNIT_SQUARE, pt(0, 0), pt(1, 1))
    assert pt(1, 0) in [tuple(p) for p in path]


def test_boundary_path_long_rectangle():
    rect = [pt(0, 0), pt(3, 0), pt(3, 1), pt(0, 1)]
    path = boundary_path(rect, pt(0, 0), pt(3, 1))
    # arc via (3,0) has length 4 < 5
    assert pt(3, 0) in [tuple(p) for p in path]


def test_boundary_path_off_boundary():
    with pytest.raises(PointNotOnBoundary):
        boundary_path(UNIT_SQUARE, pt(F(1, 2), F(1, 2)), pt(0, 0))


def test_boundary_path_complementary_cover():
    a, b = pt(0, F(1, 4)), pt(1, F(1, 4))
    p1 = boundary_path(UNIT_SQUARE, a, b)
    p2 = boundary_path(UNIT_SQUARE, b, a)
    # unique shortest arc: the two walks are reverses of each other, and the
    # complementary traversal covers the whole boundary exactly once
    assert p2 == list(reversed(p1))
    for p in (p1, p2):
        for q1, q2 in zip(p, p[1:]):
            assert q1[0] == q2[0] or q1[1] == q2[1]


def test_ring_is_simple():
    assert ring_is_simple(UNIT_SQUARE)
    bowtie = [pt(0, 0), pt(1, 1), pt(1, 0), pt(0, 1)]
    assert not ring_is_simple(bowtie)
