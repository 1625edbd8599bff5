from fractions import Fraction as F

import pytest

from recomap.errors import InternalInvariantError
from recomap.geometry import pt
from recomap.model import Corridor, District, DistrictMap, validate_map
from recomap.regions import RectRegion
from recomap.routing import Workspace, reconnect_district, route_corridor, make_allowed


def square4():
    return RectRegion.from_rect(0, 4, 0, 4)


def build(regions, corridors=()):
    """regions: dict id -> RectRegion covering the 4x4 square."""
    districts = []
    for did, reg in sorted(regions.items()):
        cs = tuple(c for c in corridors if c.owner == did)
        districts.append(District(did, f"d{did}", reg.area(), reg, cs))
    return DistrictMap(square4(), districts)


def two_red_corners(column_to_top: bool):
    red = RectRegion.from_rects([(0, 1, 3, 4), (3, 4, 3, 4)])
    top = 4 if column_to_top else 3
    blue = RectRegion.from_rect(1, 3, 1, top)
    green = square4().subtract(red).subtract(blue)
    return {1: red, 2: green, 3: blue}


def test_workspace_round_trip():
    m = build(two_red_corners(False))
    ws = Workspace(m)
    assert ws.to_map() == m


def test_reconnect_single_minimal_arc():
    # blue column stops below the top row: one corridor of length 2, either
    # along the blue boundary at y=3 or the domain top; deterministic result
    m = build(two_red_corners(False))
    ws = Workspace(m)
    added = reconnect_district(ws, 1, forbidden_side="bottom")
    assert len(added) == 1
    assert added[0].path == ((F(1), F(3)), (F(3), F(3)))
    m2 = ws.to_map()
    assert validate_map(m2).districts[0].connected


def test_reconnect_around_blue_column():
    # blue column reaches the top edge: route must go over it along the top
    m = build(two_red_corners(True))
    ws = Workspace(m)
    added = reconnect_district(ws, 1, forbidden_side="bottom")
    assert len(added) == 1
    m2 = ws.to_map()
    assert m2.board().district_connected(1)


def test_strand_to_top_blocks_crossing():
    # a blue strand from the column to the top edge walls off the direct
    # top-edge route; the corridor must go around the column
    regions = two_red_corners(False)
    strand = Corridor(1, 3, (pt(2, 3), pt(2, 4)))
    m = build(regions, [strand])
    ws = Workspace(m)
    added = reconnect_district(ws, 1, forbidden_side="bottom")
    assert len(added) == 1
    path = added[0].path
    # the path cannot use the top edge across x=2; it must dip below y=3
    assert any(y < 3 for _, y in path) or all(x < 2 or x > 2 for x, _ in path[1:-1])
    ys = [y for _, y in path]
    assert min(ys) <= 3
    m2 = ws.to_map()
    assert m2.board().district_connected(1)


def test_route_parallel_slot_order():
    # two corridors along the same edge acquire a consistent nesting order
    regions = two_red_corners(True)
    m = build(regions)
    ws = Workspace(m)
    reconnect_district(ws, 1, forbidden_side="bottom")
    # now force a second corridor along the same top route for district 2:
    # split green into two pieces first by recoloring nothing; instead route
    # a redundant corridor manually
    allowed = make_allowed(ws, 2)
    left_green = {(0, 0)}
    right_green = {(3, 0)}
    path, slots, reached = route_corridor(ws, 2, left_green, right_green, allowed)
    ws.add_corridor(2, path, slots)
    m2 = ws.to_map()
    # strand orders exported for any multi-passage edges are well-formed
    for axis, line, lo, hi, seq in m2.strand_orders:
        assert len(seq) >= 2
        assert lo < hi


def test_normalize_dissolves_own_adjacent():
    # a corridor of district 1 hugging its own region dissolves away
    red = RectRegion.from_rect(0, 4, 2, 4)
    green = RectRegion.from_rect(0, 4, 0, 2)
    hug = Corridor(5, 1, (pt(0, 2), pt(4, 2)))
    m = build({1: red, 2: green}, [hug])
    ws = Workspace(m)
    ws.normalize_district(1)
    assert not ws.corridors_of(1)


def test_normalize_splits_partial():
    # corridor of district 3 runs along the red|green interface and then up
    # through red territory: the interface part has green (not owner 3)
    # material on both sides, so nothing dissolves for owner 3
    red = RectRegion.from_rect(0, 4, 2, 4)
    green = RectRegion.from_rects([(0, 4, 1, 2)])
    blue = RectRegion.from_rect(0, 4, 0, 1)
    c = Corridor(9, 3, (pt(0, 2), pt(2, 2), pt(2, 4)))
    m = build({1: red, 2: green, 3: blue}, [c])
    ws = Workspace(m)
    ws.normalize_district(3)
    assert len(ws.corridors_of(3)) == 1
    # but a blue corridor hugging blue region dissolves the hugging part only
    c2 = Corridor(10, 3, (pt(0, 1), pt(2, 1), pt(2, 3)))
    m2 = build({1: red, 2: green, 3: blue}, [c2])
    ws2 = Workspace(m2)
    ws2.normalize_district(3)
    kept = ws2.corridors_of(3)
    assert len(kept) == 1
    assert kept[0].path == ((F(2), F(1)), (F(2), F(3)))


def test_route_no_path_raises():
    # target fully separated by a strand box cannot be reached
    red = RectRegion.from_rects([(0, 1, 0, 1), (3, 4, 0, 1)])
    green = square4().subtract(red)
    m = build({1: red, 2: green})
    ws = Workspace(m)

    def nothing_allowed(ek):
        return False

    with pytest.raises(InternalInvariantError):
        route_corridor(ws, 1, {(0, 0)}, {(3, 0)}, nothing_allowed)
