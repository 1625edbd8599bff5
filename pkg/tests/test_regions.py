from fractions import Fraction as F

import pytest

from recomap.geometry import pt, ring_area, ring_is_simple
from recomap.regions import RectRegion, region_components, region_to_simple_faces


def test_normal_form_merges():
    a = RectRegion.from_rects([(0, 1, 0, 1), (0, 1, 1, 2)])
    b = RectRegion.from_rect(0, 1, 0, 2)
    assert a == b
    assert a.area() == 2


def test_union_subtract_intersect():
    sq = RectRegion.from_rect(0, 4, 0, 4)
    mid = RectRegion.from_rect(1, 3, 1, 3)
    ring = sq.subtract(mid)
    assert ring.area() == 12
    assert ring.union(mid) == sq
    assert sq.intersect(mid) == mid
    assert mid.subtract(sq) == RectRegion.empty()


def test_clip_y():
    sq = RectRegion.from_rect(0, 1, 0, 1)
    top = sq.clip_y(F(2, 3), keep_above=True)
    assert top.area() == F(1, 3)
    bot = sq.clip_y(F(2, 3), keep_above=False)
    assert bot.area() == F(2, 3)
    assert top.union(bot) == sq


def test_waterline_square():
    sq = RectRegion.from_rect(0, 1, 0, 1)
    assert sq.waterline(F(1, 3)) == F(2, 3)
    assert sq.waterline(0) == 1
    assert sq.waterline(1) == 0  # target == area -> lowest y


def test_waterline_square_minus_middle_rectangle():
    # unit square minus [1/4,3/4]x[1/4,3/4], target above 1/4 -> y = 3/4
    sq = RectRegion.from_rect(0, 1, 0, 1)
    reg = sq.subtract(RectRegion.from_rect(F(1, 4), F(3, 4), F(1, 4), F(3, 4)))
    y = reg.waterline(F(1, 4))
    assert y == F(3, 4)
    # oracle: clip and measure
    assert reg.clip_y(y, keep_above=True).area() == F(1, 4)


def test_waterline_gap_plateau_takes_lowest():
    reg = RectRegion.from_rects([(0, 1, 0, 1), (0, 1, 2, 3)])
    # area above = 1 exactly for any y in [1,2]; lowest valid is y=1
    assert reg.waterline(1) == 1


def test_from_rings_round_trip():
    reg = RectRegion.from_rects([(0, 2, 0, 1), (1, 2, 1, 2)])
    loops = reg.boundary_loops()
    assert len(loops) == 1
    rebuilt = RectRegion.from_rings(loops)
    assert rebuilt == reg
    assert ring_area(loops[0]) == reg.area()


def test_boundary_loops_hole():
    sq = RectRegion.from_rect(0, 4, 0, 4)
    reg = sq.subtract(RectRegion.from_rect(1, 3, 1, 3))
    loops = reg.boundary_loops()
    areas = sorted(ring_area(lp) for lp in loops)
    assert areas == [-4, 16]


def test_components():
    reg = RectRegion.from_rects([(0, 1, 0, 1), (2, 3, 0, 1)])
    comps = region_components(reg)
    assert len(comps) == 2
    assert sum((c.area() for c in comps), F(0)) == 2


def test_corner_touch_not_connected():
    reg = RectRegion.from_rects([(0, 1, 0, 1), (1, 2, 1, 2)])
    assert len(region_components(reg)) == 2


def test_simple_faces_of_annulus():
    sq = RectRegion.from_rect(0, 4, 0, 4)
    reg = sq.subtract(RectRegion.from_rect(1, 3, 1, 3))
    faces = region_to_simple_faces(reg)
    assert sum((ring_area(f) for f in faces), F(0)) == 12
    for f in faces:
        assert ring_is_simple(f)
        assert ring_area(f) > 0
    # union of faces reproduces the region
    assert RectRegion.from_rings(faces) == reg


def test_simple_faces_plain():
    reg = RectRegion.from_rect(0, 2, 0, 1)
    faces = region_to_simple_faces(reg)
    assert len(faces) == 1
    assert ring_area(faces[0]) == 2


def test_area_above_profile():
    reg = RectRegion.from_rects([(0, 2, 0, 1), (0, 1, 1, 2)])
    assert reg.area_above(0) == 3
    assert reg.area_above(1) == 1
    assert reg.area_above(F(3, 2)) == F(1, 2)
    assert reg.area_above(2) == 0


def test_waterline_bad_target():
    reg = RectRegion.from_rect(0, 1, 0, 1)
    with pytest.raises(ValueError):
        reg.waterline(2)
