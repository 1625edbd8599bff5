from fractions import Fraction as F

import pytest

from recomap.errors import NotAdjacent, ParseError, SchemaError
from recomap.geometry import pt, ring_area
from recomap.model import (
    Corridor,
    District,
    DistrictMap,
    canonical_map,
    derive_faces,
    load_map,
    save_map,
    union_weak_polygon,
    unit_square,
    validate_map,
)
from recomap.regions import RectRegion


def thirds_map():
    return canonical_map([(1, F(1, 3)), (2, F(1, 3)), (3, F(1, 3))])


def test_canonical_map_valid():
    m = thirds_map()
    rep = validate_map(m)
    assert rep.valid
    for r in rep.districts:
        assert r.connected
        assert r.area_residual == 0


def test_area_residual_reported():
    m = thirds_map()
    d1 = m.district(1)
    bad = District(1, d1.name, F(1, 2), d1.region, d1.corridors)
    m2 = DistrictMap(m.domain, [bad, m.district(2), m.district(3)])
    rep = validate_map(m2)
    assert not rep.valid
    r1 = [r for r in rep.districts if r.district_id == 1][0]
    assert r1.area_residual == F(1, 3) - F(1, 2)


def test_disconnected_district_detected():
    # two disjoint squares in one district, no corridor: connectivity failure
    # (oracle: BFS over the attachment graph)
    left = RectRegion.from_rect(0, F(1, 4), 0, F(1, 4))
    right = RectRegion.from_rect(F(3, 4), 1, 0, F(1, 4))
    rest = unit_square().subtract(left).subtract(right)
    m = DistrictMap(unit_square(), [
        District(1, "a", left.area() + right.area(), left.union(right)),
        District(2, "b", rest.area(), rest),
        District(3, "c", F(0), RectRegion.empty()),
    ])
    rep = validate_map(m)
    r1 = [r for r in rep.districts if r.district_id == 1][0]
    assert not r1.connected


def test_corridor_restores_connectivity():
    left = RectRegion.from_rect(0, F(1, 4), 0, F(1, 4))
    right = RectRegion.from_rect(F(3, 4), 1, 0, F(1, 4))
    rest = unit_square().subtract(left).subtract(right)
    corr = Corridor(1, 1, (pt(F(1, 4), 0), pt(F(3, 4), 0)))
    m = DistrictMap(unit_square(), [
        District(1, "a", F(1, 8), left.union(right), (corr,)),
        District(2, "b", rest.area(), rest),
        District(3, "c", F(0), RectRegion.empty()),
    ])
    r1 = [r for r in validate_map(m).districts if r.district_id == 1][0]
    assert r1.connected
    assert not r1.corridor_violations


def test_foreign_strand_splits_faces():
    # district 2 is the top half; a corridor of district 1 crossing it splits
    # it into two faces, and district 2 becomes disconnected
    bottom = RectRegion.from_rect(0, 1, 0, F(1, 2))
    top = unit_square().subtract(bottom)
    spike = Corridor(1, 1, (pt(F(1, 2), F(1, 2)), pt(F(1, 2), 1)))
    m = DistrictMap(unit_square(), [
        District(1, "a", F(1, 2), bottom, (spike,)),
        District(2, "b", F(1, 2), top),
        District(3, "c", F(0), RectRegion.empty()),
    ])
    board = m.board()
    comps = board.district_components(2)
    assert len(comps) == 2
    assert not board.district_connected(2)
    # partial spike does not split: stop the strand at y=3/4
    spike2 = Corridor(1, 1, (pt(F(1, 2), F(1, 2)), pt(F(1, 2), F(3, 4))))
    m2 = DistrictMap(unit_square(), [
        District(1, "a", F(1, 2), bottom, (spike2,)),
        District(2, "b", F(1, 2), top),
        District(3, "c", F(0), RectRegion.empty()),
    ])
    assert len(m2.board().district_components(2)) == 1


def test_roundtrip_save_load():
    m = thirds_map()
    m2 = load_map(save_map(m))
    assert m2 == m


def test_roundtrip_with_corridor():
    left = RectRegion.from_rect(0, F(1, 4), 0, F(1, 4))
    right = RectRegion.from_rect(F(3, 4), 1, 0, F(1, 4))
    rest = unit_square().subtract(left).subtract(right)
    corr = Corridor(7, 1, (pt(F(1, 4), 0), pt(F(3, 4), 0)))
    m = DistrictMap(unit_square(), [
        District(1, "a", F(1, 8), left.union(right), (corr,)),
        District(2, "b", rest.area(), rest),
        District(3, "c", F(0), RectRegion.empty()),
    ])
    m2 = load_map(save_map(m))
    assert m2 == m


def test_load_rejects_zero_denominator():
    doc = save_map(thirds_map()).decode().replace('"1/3"', '"1/0"', 1)
    with pytest.raises(ParseError):
        load_map(doc.encode())


def test_load_rejects_overlapping_faces():
    m = thirds_map()
    doc = save_map(m).decode()
    import json

    j = json.loads(doc)
    # duplicate district 1's face into district 2 -> overlap
    j["districts"][1]["faces"] = j["districts"][0]["faces"]
    with pytest.raises(SchemaError):
        load_map(json.dumps(j).encode())


def test_load_garbage():
    with pytest.raises(ParseError):
        load_map(b"not json at all {{{")


def test_union_adjacent_rectangles():
    m = thirds_map()
    view = union_weak_polygon(m, 2, 3)
    assert len(view.faces()) == 1
    assert view.area() == F(2, 3)
    assert not view.corridors


def test_union_not_adjacent():
    # districts 1 (bottom) and 3 (top) of the canonical stack touch only
    # through district 2
    m = thirds_map()
    with pytest.raises(NotAdjacent):
        union_weak_polygon(m, 1, 3)


def test_union_corridor_only_adjacency():
    # two districts joined by a corridor of i: two faces + one connecting
    # corridor in the union view
    a = RectRegion.from_rect(0, 1, 0, F(1, 4))
    b = RectRegion.from_rect(0, 1, F(3, 4), 1)
    mid = unit_square().subtract(a).subtract(b)
    corr = Corridor(1, 1, (pt(0, F(1, 4)), pt(0, F(3, 4))))
    m = DistrictMap(unit_square(), [
        District(1, "a", F(1, 4), a, (corr,)),
        District(2, "b", F(1, 2), mid),
        District(3, "c", F(1, 4), b),
    ])
    view = union_weak_polygon(m, 1, 3)
    assert len(view.faces()) == 2
    assert len(view.corridors) == 1
    assert view.corridors[0].faces == (0, 1)


def test_union_dissolves_interior_corridor():
    # corridor of 1 along the 1|2 interface dissolves in the union of 1 and 2
    m = thirds_map()
    corr = Corridor(1, 1, (pt(0, F(1, 3)), pt(1, F(1, 3))))
    d1 = m.district(1)
    m2 = m.replace_districts({1: District(1, d1.name, d1.target_area, d1.region, (corr,))})
    view = union_weak_polygon(m2, 1, 2)
    assert len(view.faces()) == 1
    assert not view.corridors


def test_union_boundary_walk_shoelace():
    a = RectRegion.from_rect(0, 1, 0, F(1, 4))
    b = RectRegion.from_rect(0, 1, F(3, 4), 1)
    mid = unit_square().subtract(a).subtract(b)
    corr = Corridor(1, 1, (pt(0, F(1, 4)), pt(0, F(3, 4))))
    m = DistrictMap(unit_square(), [
        District(1, "a", F(1, 4), a, (corr,)),
        District(2, "b", F(1, 2), mid),
        District(3, "c", F(1, 4), b),
    ])
    view = union_weak_polygon(m, 1, 3)
    walk = view.outer_boundary_walk()
    assert ring_area(walk) == F(1, 2)


def test_derive_faces_deterministic_ids():
    m = thirds_map()
    faces = derive_faces(m)
    assert [f[0] for f in faces] == [1, 2, 3]
    assert [f[1] for f in faces] == [1, 2, 3]
    total = sum((ring_area(f[2]) for f in faces), F(0))
    assert total == 1
