"""Recombination moves on 3-district maps and the canonicalization pipeline.

The pipeline follows the classic shape: preprocessing establishes the
ordering property (simply-connected districts, both sides touched, middle
district largest), three gravity moves pull the districts into their stacked
rectangles up to corridors, and exchange sequences strip a constant fraction
of the remaining corridors per round.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    AmbiguousMatching,
    InternalInvariantError,
    NonRectilinearInExactMode,
    NotAreaCompatible,
    NotInPostGravityForm,
)
from .geometry import Point, frac, format_frac, is_rectilinear
from .model import (
    Corridor,
    District,
    DistrictMap,
    OUTER,
    WeakPolygonView,
    canonical_map,
    union_weak_polygon,
    validate_map,
)
from .regions import RectRegion
from .routing import Workspace, make_allowed, reconnect_district
from .trees import CorridorGraph, build_corridor_graph, contiguous_subtree, find_centroid

DEFAULT_TOL = Fraction(1, 2 ** 40)


@dataclass(frozen=True)
class Waterline:
    y: Fraction
    target_above: Fraction
    residual: Fraction = Fraction(0)


@dataclass(frozen=True)
class OrderingCertificate:
    order: tuple[int, ...]                  # district ids top to bottom
    left_intervals: dict
    right_intervals: dict


@dataclass(frozen=True)
class MoveRecord:
    index: int
    pair: tuple[int, int]
    kind: str
    result: DistrictMap


@dataclass
class MoveSequence:
    initial: DistrictMap
    moves: list[MoveRecord] = field(default_factory=list)

    @property
    def final(self) -> DistrictMap:
        return self.moves[-1].result if self.moves else self.initial

    def maps(self):
        out = [self.initial]
        out.extend(mv.result for mv in self.moves)
        return out


# ---------------------------------------------------------------------------
# waterline


def find_waterline(P, target_above, mode: str = "exact", tol=DEFAULT_TOL) -> Waterline:
    """Lowest horizontal line splitting P so the area above equals
    target_above.  Exact mode requires rectilinear input; approx mode bisects
    to |residual| <= tol using exact area evaluations."""
    target_above = frac(target_above)
    if isinstance(P, WeakPolygonView):
        region = P.region
    elif isinstance(P, RectRegion):
        region = P
    else:
        rings = list(P)
        if all(is_rectilinear(r) for r in rings):
            region = RectRegion.from_rings(rings)
        elif mode == "exact":
            raise NonRectilinearInExactMode(
                "exact waterlines require rectilinear input")
        else:
            return _bisect_waterline(rings, target_above, frac(tol))
    y = region.waterline(target_above)
    return Waterline(y, target_above)


def _bisect_waterline(rings, target_above, tol) -> Waterline:
    from .geometry import clip_ring_horizontal, ring_area

    def area_above(y):
        total = Fraction(0)
        for ring in rings:
            for comp in clip_ring_horizontal(ring, y, "above"):
                total += ring_area(comp)
        return total

    ys = [p[1] for ring in rings for p in ring]
    lo, hi = min(ys), max(ys)  # area_above decreasing in y
    for _ in range(200):
        mid = (lo + hi) / 2
        a = area_above(mid)
        if abs(a - target_above) <= tol:
            return Waterline(mid, target_above, a - target_above)
        if a > target_above:
            lo = mid
        else:
            hi = mid
    return Waterline(mid, target_above, area_above(mid) - target_above)


# ---------------------------------------------------------------------------
# ordering certificate


def _side_intervals(m: DistrictMap, x: Fraction) -> dict[int, list]:
    """Per-district intervals of material on the vertical line x (cells
    touching it plus corridor path contacts)."""
    out: dict[int, list] = {d.id: [] for d in m.districts}
    for d in m.districts:
        for y0, y1, ivs in d.region.rows:
            for a, b in ivs:
                if a == x or b == x:
                    out[d.id].append((y0, y1))
        for c in d.corridors:
            for (px, py) in c.path:
                if px == x:
                    out[d.id].append((py, py))
            for (p, q) in c.legs():
                if p[0] == x and q[0] == x:
                    lo, hi = sorted((p[1], q[1]))
                    out[d.id].append((lo, hi))
    merged = {}
    for did, ivs in out.items():
        ivs.sort()
        acc = []
        for lo, hi in ivs:
            if acc and lo <= acc[-1][1]:
                acc[-1] = (acc[-1][0], max(acc[-1][1], hi))
            else:
                acc.append((lo, hi))
        merged[did] = acc
    return merged


def _region_side_intervals(m: DistrictMap, x: Fraction) -> dict[int, list]:
    out: dict[int, list] = {}
    for d in m.districts:
        acc = []
        for y0, y1, ivs in d.region.rows:
            if any(a == x or b == x for a, b in ivs):
                if acc and y0 <= acc[-1][1]:
                    acc[-1] = (acc[-1][0], max(acc[-1][1], y1))
                else:
                    acc.append((y0, y1))
        out[d.id] = acc
    return out


def compute_ordering(m: DistrictMap) -> Optional[OrderingCertificate]:
    """Certificate that each district meets the left and right sides in one
    interval, with matching vertical order; None when it fails.

    Positive-length (region) contacts constrain the order on both sides;
    zero-width corridor contacts are placed by position but two districts
    related only through point contacts carry no cross-side constraint."""
    x0, x1, _, _ = m.domain.bbox()
    left = _side_intervals(m, x0)
    right = _side_intervals(m, x1)
    region_left = _region_side_intervals(m, x0)
    region_right = _region_side_intervals(m, x1)
    for side in (left, right):
        for did, ivs in side.items():
            if len(ivs) != 1:
                return None
    for side in (region_left, region_right):
        for did, ivs in side.items():
            if len(ivs) > 1:
                return None

    def order_key(side):
        # degenerate point contacts sit between the intervals they touch:
        # at equal tops the interval extending further down is lower
        return lambda d: (-side[d][0][1], -side[d][0][0], d)

    order_left = tuple(sorted(left, key=order_key(left)))
    order_right = tuple(sorted(right, key=order_key(right)))
    solid = [d for d in left if region_left.get(d) and region_right.get(d)]
    lpos = {d: order_left.index(d) for d in solid}
    rpos = {d: order_right.index(d) for d in solid}
    for u in solid:
        for v in solid:
            if (lpos[u] < lpos[v]) != (rpos[u] < rpos[v]):
                return None
    return OrderingCertificate(order_left,
                               {d: left[d][0] for d in left},
                               {d: right[d][0] for d in right})


def has_ordering_property(m: DistrictMap) -> bool:
    cert = compute_ordering(m)
    if cert is None:
        return False
    mid = cert.order[1]
    return m.district(mid).target_area == max(d.target_area for d in m.districts)


# ---------------------------------------------------------------------------
# shared recombination machinery


def _cells_in_region(ws: Workspace, region: RectRegion) -> set:
    cells = set()
    for y0, y1, ivs in region.rows:
        j0, j1 = ws.yi[y0], ws.yi[y1]
        for a, b in ivs:
            i0, i1 = ws.xi[a], ws.xi[b]
            for j in range(j0, j1):
                for i in range(i0, i1):
                    cells.add((i, j))
    return cells


def _apply_recombination(ws: Workspace, i: int, j: int, cells_i: set, cells_j: set,
                         first: int, forbidden_side: Optional[str],
                         excluded: frozenset = frozenset()):
    ws.drop_district_corridors(i)
    ws.drop_district_corridors(j)
    ws.recolor(cells_i, i)
    ws.recolor(cells_j, j)
    second = j if first == i else i
    reconnect_district(ws, first, forbidden_side, excluded)
    reconnect_district(ws, second, forbidden_side)
    ws.normalize_district(i)
    ws.normalize_district(j)
    if not ws.district_connected(i) or not ws.district_connected(j):
        raise InternalInvariantError(
            f"recombination left district {i if not ws.district_connected(i) else j} disconnected")


def _check_move(m_before: DistrictMap, m_after: DistrictMap, pair):
    i, j = pair
    for d in m_before.districts:
        if d.id in pair:
            if m_after.district(d.id).region.area() != d.target_area:
                raise InternalInvariantError(
                    f"district {d.id} area {m_after.district(d.id).region.area()} != target {d.target_area}")
        else:
            before, after = d, m_after.district(d.id)
            if before.region != after.region or before.corridors != after.corridors:
                raise InternalInvariantError(
                    f"move on {pair} modified district {d.id}")
    union_before = m_before.district(i).region.union(m_before.district(j).region)
    union_after = m_after.district(i).region.union(m_after.district(j).region)
    if union_before != union_after:
        raise InternalInvariantError(f"move on {pair} changed the pair union")


# ---------------------------------------------------------------------------
# gravity


def gravity(m: DistrictMap, upper: int, lower: int, *, bottom_pair: bool = False,
            kind: str = "gravity") -> Optional[MoveRecord]:
    """The waterline recombination of two vertically adjacent districts.

    For the top pair the region above the waterline becomes the upper
    district; the reflected variant (bottom_pair) pulls the lower district
    down instead.  Returns None when the move would not change the map.
    """
    view = union_weak_polygon(m, upper, lower)
    target_up = m.district(upper).target_area
    target_low = m.district(lower).target_area
    if bottom_pair:
        wl = find_waterline(view.region, view.area() - target_low)
    else:
        wl = find_waterline(view.region, target_up)
    ws = Workspace(m, extra_ys=[wl.y])
    jcut = ws.yi[wl.y]
    pcells = {(ci, cj) for ci, cj in ws.cells_of({upper, lower})}
    cells_up = {(ci, cj) for ci, cj in pcells if cj >= jcut}
    cells_low = pcells - cells_up
    forbidden = "top" if bottom_pair else "bottom"
    first = lower if bottom_pair else upper
    _apply_recombination(ws, upper, lower, cells_up, cells_low, first, forbidden)
    m2 = ws.to_map()
    if m2 == m:
        return None
    _check_move(m, m2, (upper, lower))
    return MoveRecord(0, (upper, lower), kind, m2)


# ---------------------------------------------------------------------------
# preprocessing


def _enclosed_cells(ws: Workspace, did: int) -> set:
    """Cells not owned by `did` that cannot reach the domain boundary without
    crossing the district's region or strands."""
    free = {(i, j) for j in range(ws.ny) for i in range(ws.nx)
            if ws.owner[j][i] != did}
    blocked_pass = set()
    for ek, passages in ws.edge_passages.items():
        if any(ws.corridor_owner[cid] == did for cid, _ in passages):
            blocked_pass.add(ek)
    seen = set()
    stack = []
    for (i, j) in free:
        if i in (0, ws.nx - 1) or j in (0, ws.ny - 1):
            # boundary cells and their outward edges
            stack.append((i, j))
            seen.add((i, j))
    # remove boundary cells whose outward contact is blocked? outward edges
    # on the domain boundary cannot carry an enclosing strand of `did` around
    # them, so boundary cells are always free.
    while stack:
        i, j = stack.pop()
        for (ni, nj), ek in (((i - 1, j), ("v", i, j)),
                             ((i + 1, j), ("v", i + 1, j)),
                             ((i, j - 1), ("h", i, j)),
                             ((i, j + 1), ("h", i, j + 1))):
            if (ni, nj) in free and (ni, nj) not in seen and ek not in blocked_pass:
                seen.add((ni, nj))
                stack.append((ni, nj))
    return free - seen


def _touches_side(m: DistrictMap, did: int, x: Fraction) -> bool:
    ivs = _side_intervals(m, x)[did]
    return bool(ivs)


def preprocess(m: DistrictMap) -> tuple[DistrictMap, list[MoveRecord], OrderingCertificate]:
    """Hole filling, side attachment and the middle-largest swap."""
    records: list[MoveRecord] = []
    cur = m

    # 1. free districts enclosed inside another district
    guard = 0
    while True:
        ws = Workspace(cur)
        acted = False
        for d in cur.districts:
            enclosed = _enclosed_cells(ws, d.id)
            if not enclosed:
                continue
            inner_ids = sorted({ws.owner[j][i] for i, j in enclosed} - {OUTER})
            e = inner_ids[0]
            ws2 = Workspace(cur)
            free_cells = {(i, j) for j in range(ws2.ny) for i in range(ws2.nx)
                          if ws2.owner[j][i] != d.id} - enclosed
            sources = {c for c in enclosed if ws2.owner[c[1]][c[0]] == e}
            from .routing import route_corridor

            def allowed(ek, _e=e, _ws=ws2):
                kind, i, _ = ek
                if kind == "v" and i in (0, _ws.nx):
                    return False
                a, b = _ws.edge_sides(ek)
                return not (a == _e and b == _e)

            path, slots, _ = route_corridor(ws2, e, sources, free_cells, allowed)
            ws2.add_corridor(e, path, slots)
            ws2.normalize_district(e)
            m2 = ws2.to_map()
            records.append(MoveRecord(0, (d.id, e), "preprocess", m2))
            cur = m2
            acted = True
            break
        guard += 1
        if not acted:
            break
        if guard > 12:
            raise InternalInvariantError("hole filling did not terminate")

    # 2. every district touches both sides
    x0, x1, _, _ = cur.domain.bbox()
    for side_x, side_name in ((x0, "left"), (x1, "right")):
        guard = 0
        while True:
            missing = [d.id for d in cur.districts if not _touches_side(cur, d.id, side_x)]
            if not missing:
                break
            ws = Workspace(cur)
            xs_idx = 0 if side_x == x0 else ws.nx

            def dist_to_side(did):
                best = None
                for i, j in ws.cells_of({did}):
                    dx = abs(ws.xs[i] - side_x) if side_x == x0 else abs(ws.xs[i + 1] - side_x)
                    best = dx if best is None else min(best, dx)
                return best

            did = min(missing, key=lambda d: (dist_to_side(d), d))
            sources = set(ws.cells_of({did}))
            from .routing import route_corridor

            allowed = make_allowed(ws, did)
            path, slots, _ = route_corridor(ws, did, sources, set(), allowed,
                                            target_side_x=(side_name, xs_idx))
            ws.add_corridor(did, path, slots)
            ws.normalize_district(did)
            m2 = ws.to_map()
            # the partner district: owner on the far side of the first edge
            partner = _partner_of_path(ws, did, path)
            records.append(MoveRecord(0, (did, partner), "preprocess", m2))
            cur = m2
            guard += 1
            if guard > 6:
                raise InternalInvariantError("side attachment did not terminate")

    # 3. ordering and middle-largest
    cert = compute_ordering(cur)
    if cert is None:
        raise InternalInvariantError(
            "ordering property unattainable: side intervals not connected")
    mid = cert.order[1]
    max_area = max(d.target_area for d in cur.districts)
    if cur.district(mid).target_area < max_area:
        big = min(d.id for d in cur.districts if d.target_area == max_area)
        pos_mid, pos_big = cert.order.index(mid), cert.order.index(big)
        upper, lower = (big, mid) if pos_big < pos_mid else (mid, big)
        view = union_weak_polygon(cur, upper, lower)
        # the middle slot receives the larger area: the label that ends on
        # top is whichever of the pair is smaller
        small, large = (mid, big)
        if pos_big < pos_mid:
            # big currently above: small label moves to the top part
            wl = find_waterline(view.region, cur.district(small).target_area)
            ws = Workspace(cur, extra_ys=[wl.y])
            jcut = ws.yi[wl.y]
            pcells = set(ws.cells_of({upper, lower}))
            cells_up = {c for c in pcells if c[1] >= jcut}
            _apply_recombination(ws, small, large, cells_up, pcells - cells_up,
                                 small, "bottom")
        else:
            # big currently below: small label moves to the bottom part
            wl = find_waterline(view.region, view.area() - cur.district(small).target_area)
            ws = Workspace(cur, extra_ys=[wl.y])
            jcut = ws.yi[wl.y]
            pcells = set(ws.cells_of({upper, lower}))
            cells_up = {c for c in pcells if c[1] >= jcut}
            _apply_recombination(ws, large, small, cells_up, pcells - cells_up,
                                 small, "top")
        m2 = ws.to_map()
        _check_move(cur, m2, (mid, big))
        records.append(MoveRecord(0, (mid, big), "swap-middle", m2))
        cur = m2
        cert = compute_ordering(cur)
        if cert is None:
            raise InternalInvariantError("swap-middle broke the ordering property")
    if len(records) > 7:
        raise InternalInvariantError(
            f"preprocessing took {len(records)} moves, expected at most 7")
    return cur, records, cert


def _partner_of_path(ws: Workspace, did: int, path) -> int:
    for (p, q) in zip(path, path[1:]):
        for ek in ws.edge_keys_on_leg(p, q):
            for owner in ws.edge_sides(ek):
                if owner not in (did, OUTER):
                    return owner
    return next(d for d in ws.meta if d != did)


# ---------------------------------------------------------------------------
# exchange sequence


def _post_gravity_bounds(m: DistrictMap, order):
    x0, x1, y0, y1 = m.domain.bbox()
    width = x1 - x0
    top, mid, bot = order
    h_bot = y0 + m.district(bot).target_area / width
    h_top = y1 - m.district(top).target_area / width
    return h_bot, h_top


def in_post_gravity_form(m: DistrictMap, order) -> bool:
    top, mid, bot = order
    h_bot, h_top = _post_gravity_bounds(m, order)
    bb_top = m.district(top).region.bbox()
    bb_mid = m.district(mid).region.bbox()
    bb_bot = m.district(bot).region.bbox()
    return (bb_top[2] >= h_top and bb_bot[3] <= h_bot
            and bb_mid[2] >= h_bot and bb_mid[3] <= h_top)


def exchange_sequence(m: DistrictMap, order, tree: Optional[CorridorGraph] = None
                      ) -> list[MoveRecord]:
    """Three recombination moves that delete the corridors of a contiguous
    centroid subtree of T(P), P being the union of the top two districts."""
    top, mid, bot = order
    if not in_post_gravity_form(m, order):
        raise NotInPostGravityForm(
            "exchange requires districts inside their canonical rectangles")
    view = union_weak_polygon(m, top, mid)
    g = tree if tree is not None else build_corridor_graph(view)
    if len(g.weights) < 2:
        raise InternalInvariantError("exchange called on a single-node corridor graph")
    c = find_centroid(g)
    split = contiguous_subtree(g, c)
    q_faces = [v for v in split.nodes - {c} if v < len(view.face_cells)]
    q_region = RectRegion.empty()
    for f in q_faces:
        q_region = q_region.union(view.face_regions[f])
    # geometric runs of the subtree-edge corridors (to clear in move 2)
    run_segments = []
    for eid in split.edges:
        corr = g.payload.get(eid)
        if corr is None:
            continue
        board = view.board
        for ek in corr.edges:
            run_segments.append(_edge_segment(board, ek))

    records = []

    # -- move 1: recombine top and mid; Q turns mid-colored, the rest is
    # split by a waterline at the top district's area
    rest = view.region.subtract(q_region)
    wl = find_waterline(rest, m.district(top).target_area)
    ws = Workspace(m, extra_ys=[wl.y])
    jcut = ws.yi[wl.y]
    q_cells = _cells_in_region(ws, q_region)
    pcells = set(ws.cells_of({top, mid}))
    cells_top = {cell for cell in (pcells - q_cells) if cell[1] >= jcut}
    cells_mid = pcells - cells_top
    excluded = frozenset(ek for seg in run_segments
                         for ek in ws.edge_keys_on_leg(*seg))
    _apply_recombination(ws, top, mid, cells_top, cells_mid, top, "bottom",
                         excluded=excluded)
    m1 = ws.to_map()
    _check_move(m, m1, (top, mid))
    records.append(MoveRecord(0, (top, mid), "exchange-1", m1))

    # -- move 2: recombine mid and bot; remove the subtree-edge corridors of
    # both, then rebuild the bottom district's corridor forest
    ws2 = Workspace(m1)
    run_edges = set()
    for seg in run_segments:
        run_edges.update(ws2.edge_keys_on_leg(*seg))
    for cid in [c2.id for c2 in list(ws2.corridors.values())
                if c2.owner in (mid, bot)]:
        covered = set()
        corr = ws2.corridors[cid]
        for p, q in corr.legs():
            covered.update(ws2.edge_keys_on_leg(p, q))
        if covered & run_edges:
            ws2.remove_corridor(cid)
    ws2.drop_district_corridors(bot)
    reconnect_district(ws2, bot, forbidden_side="top")
    reconnect_district(ws2, mid, forbidden_side=None)
    ws2.normalize_district(mid)
    ws2.normalize_district(bot)
    if not (ws2.district_connected(mid) and ws2.district_connected(bot)):
        raise InternalInvariantError("exchange move 2 broke connectivity")
    m2 = ws2.to_map()
    _check_move(m1, m2, (mid, bot))
    records.append(MoveRecord(0, (mid, bot), "exchange-2", m2))

    # -- move 3: gravity between top and mid restores the ordering property
    g3 = gravity(m2, top, mid, kind="exchange-3")
    if g3 is not None:
        records.append(g3)
    return records


def _edge_segment(board, ek):
    kind, i, j = ek
    if kind == "v":
        return ((board.xs[i], board.ys[j]), (board.xs[i], board.ys[j + 1]))
    return ((board.xs[i], board.ys[j]), (board.xs[i + 1], board.ys[j]))


# ---------------------------------------------------------------------------
# canonicalization


def canonical_layout_of(m: DistrictMap, order) -> DistrictMap:
    names = {d.id: d.name for d in m.districts}
    bottom_to_top = [(did, m.district(did).target_area) for did in reversed(order)]
    return canonical_map(bottom_to_top, names, m.domain)


def canonicalize(m: DistrictMap, mode: str = "exact", tol=DEFAULT_TOL) -> MoveSequence:
    """Transform a valid 3-district map into stacked rectangles.

    Records every recombination; asserts the exchange contraction bound and
    terminates within a logarithmic number of exchange rounds.
    """
    report = validate_map(m, mode, tol)
    if not report.valid:
        raise InternalInvariantError(f"canonicalize on invalid map: {report.to_json()}")
    seq = MoveSequence(m)
    cur, pre_records, cert = preprocess(m)
    seq.moves.extend(pre_records)
    order = cert.order
    top, mid, bot = order

    for upper, lower, bottom_pair in ((top, mid, False), (mid, bot, True), (top, mid, False)):
        rec = gravity(cur, upper, lower, bottom_pair=bottom_pair)
        if rec is not None:
            seq.moves.append(rec)
            cur = rec.result

    guard = 0
    while True:
        view = union_weak_polygon(cur, top, mid)
        g = build_corridor_graph(view)
        edges_before = len(g.edges)
        if edges_before == 0 and len(g.weights) == 1:
            break
        if len(g.weights) == 1:
            break
        records = exchange_sequence(cur, order, tree=g)
        for rec in records:
            seq.moves.append(rec)
            cur = rec.result
        g_after = build_corridor_graph(union_weak_polygon(cur, top, mid))
        edges_after = len(g_after.edges)
        if 3 * edges_after > 2 * edges_before:
            raise InternalInvariantError(
                f"exchange contraction violated: {edges_before} -> {edges_after}")
        guard += 1
        if guard > 20 + 4 * max(1, m.complexity()).bit_length():
            raise InternalInvariantError("exchange loop did not terminate")

    # final gravities: clear leftover corridors and settle the rectangles
    guard = 0
    while True:
        rec = gravity(cur, top, mid)
        if rec is not None:
            seq.moves.append(rec)
            cur = rec.result
        if not any(cur.district(d.id).corridors for d in cur.districts):
            break
        rec = gravity(cur, mid, bot, bottom_pair=True)
        if rec is not None:
            seq.moves.append(rec)
            cur = rec.result
        if not any(cur.district(d.id).corridors for d in cur.districts):
            break
        guard += 1
        if guard > 4:
            raise InternalInvariantError("final cleanup did not converge")

    target = canonical_layout_of(m, order)
    if cur != target:
        raise InternalInvariantError("canonicalization did not reach the canonical layout")
    seq.moves = [MoveRecord(k, mv.pair, mv.kind, mv.result)
                 for k, mv in enumerate(seq.moves)]
    return seq


# ---------------------------------------------------------------------------
# sequence validation


@dataclass
class SequenceReport:
    mode: str
    tol: Fraction
    move_failures: list  # (index, message)

    @property
    def valid(self) -> bool:
        return not self.move_failures

    def to_json(self):
        return {
            "valid": self.valid,
            "mode": self.mode,
            "tol": format_frac(self.tol),
            "failures": [{"index": k, "error": msg} for k, msg in self.move_failures],
        }


def validate_sequence(seq: MoveSequence, mode: str = "exact", tol=DEFAULT_TOL) -> SequenceReport:
    tol = frac(tol) if mode == "approx" else Fraction(0)
    failures = []
    prev = seq.initial
    for k, mv in enumerate(seq.moves):
        cur = mv.result
        i, j = mv.pair
        for d in prev.districts:
            if d.id in mv.pair:
                continue
            after = cur.district(d.id)
            if d.region != after.region or d.corridors != after.corridors:
                failures.append((k, f"district {d.id} outside pair {mv.pair} changed"))
        for did in mv.pair:
            res = cur.district(did).region.area() - cur.district(did).target_area
            if abs(res) > tol:
                failures.append((k, f"district {did} area residual {res}"))
        ub = prev.district(i).region.union(prev.district(j).region)
        ua = cur.district(i).region.union(cur.district(j).region)
        if ub != ua and abs(ub.area() - ua.area()) > tol:
            failures.append((k, f"union of pair {mv.pair} not preserved"))
        rep = validate_map(cur, mode, tol)
        if not rep.valid:
            failures.append((k, f"resulting map invalid: {rep.to_json()}"))
        prev = cur
    return SequenceReport(mode, tol, failures)


# ---------------------------------------------------------------------------
# perturbation generator


PERTURB_VERTEX_BUDGET = 10  # declared bound: added vertices per step


def perturb(m: DistrictMap, steps: int, seed: int) -> DistrictMap:
    """Apply `steps` random valid rectilinear recombinations; deterministic
    under `seed`.  Cut coordinates reuse the existing grid except for one
    exactly-solved coordinate per step."""
    rng = random.Random(seed)
    cur = m
    for _ in range(steps):
        pairs = [(a.id, b.id) for a in cur.districts for b in cur.districts if a.id < b.id]
        rng.shuffle(pairs)
        done = False
        for i, j in pairs:
            try:
                view = union_weak_polygon(cur, i, j)
            except Exception:
                continue
            nxt = _perturb_step(cur, view, i, j, rng)
            if nxt is not None:
                cur = nxt
                done = True
                break
        if not done:
            continue
    return cur


def _perturb_step(cur, view, i, j, rng) -> Optional[DistrictMap]:
    region = view.region
    x0, x1, y0, y1 = region.bbox()
    upper_label = rng.choice((i, j))
    lower_label = j if upper_label == i else i
    target_up = cur.district(upper_label).target_area
    # staircase column breaks: existing interior grid lines plus quarter
    # points of the union's span (bounds coordinate growth per step)
    cand_xs = sorted({x for x in cur.board().xs if x0 < x < x1}
                     | {x0 + (x1 - x0) * Fraction(n, 4) for n in (1, 2, 3)})
    k = rng.randint(1, min(2, len(cand_xs)))
    breaks = sorted(rng.sample(cand_xs, k))
    cols = [x0] + breaks + [x1]
    col_regions = []
    for a, b in zip(cols, cols[1:]):
        col_regions.append(region.clip_x(a, True).clip_x(b, False))
    # random heights for all but the last column, then solve the last exactly
    for attempt in range(6):
        ys_pool = sorted({y for r in col_regions for y0_, y1_, _ in r.rows for y in (y0_, y1_)})
        remaining = target_up
        heights = []
        ok = True
        for idx, creg in enumerate(col_regions):
            if idx == len(col_regions) - 1:
                if not (0 <= remaining <= creg.area()):
                    ok = False
                    break
                heights.append(creg.waterline(remaining))
                remaining = Fraction(0)
            else:
                cand = [y for y in ys_pool]
                h = rng.choice(cand)
                above = creg.area_above(h)
                if above > remaining:
                    h = creg.waterline(remaining) if remaining <= creg.area() else None
                    if h is None:
                        ok = False
                        break
                    above = remaining
                heights.append(h)
                remaining -= above
        if ok and remaining == 0:
            break
    else:
        return None
    try:
        ws = Workspace(cur, extra_xs=breaks, extra_ys=[h for h in heights])
        pcells = set(ws.cells_of({i, j}))
        cells_up = set()
        for creg, h in zip(col_regions, heights):
            jcut = ws.yi[h]
            for cell in _cells_in_region(ws, creg):
                if cell[1] >= jcut:
                    cells_up.add(cell)
        cells_low = pcells - cells_up
        if not cells_up or not cells_low:
            return None
        _apply_recombination(ws, upper_label, lower_label, cells_up, cells_low,
                             upper_label, None)
        m2 = ws.to_map()
        _check_move(cur, m2, (i, j))
        if not validate_map(m2).valid:
            return None
        return m2
    except InternalInvariantError:
        return None


# ---------------------------------------------------------------------------
# reconfiguration between two maps


def derive_matching(a: DistrictMap, b: DistrictMap) -> dict[int, int]:
    a_areas = {d.id: d.target_area for d in a.districts}
    b_areas = {d.id: d.target_area for d in b.districts}
    if sorted(a_areas.values()) != sorted(b_areas.values()):
        raise NotAreaCompatible("district area multisets differ")
    if len(set(a_areas.values())) != len(a_areas):
        raise AmbiguousMatching("equal areas require an explicit matching")
    inv = {v: k for k, v in b_areas.items()}
    return {did: inv[area] for did, area in a_areas.items()}


def reconfigure(a: DistrictMap, b: DistrictMap,
                matching: Optional[dict[int, int]] = None) -> MoveSequence:
    """Sequence from a to b: canonicalize(a), reorder the stacked rectangles,
    then replay canonicalize(b) in reverse."""
    if matching is None:
        matching = derive_matching(a, b)
    else:
        for ai, bi in matching.items():
            if a.district(ai).target_area != b.district(bi).target_area:
                raise NotAreaCompatible(
                    f"matching pairs districts of different areas: {ai}->{bi}")
    seq_a = canonicalize(a)
    seq_b = canonicalize(b)
    inv = {v: k for k, v in matching.items()}
    relabel = {bid: aid for bid, aid in inv.items()}
    seq_b_maps = [_relabel_map(mp, relabel, a) for mp in seq_b.maps()]

    seq = MoveSequence(a, list(seq_a.moves))
    cur = seq.final
    target = seq_b_maps[-1]

    cur_order = _stack_order(cur)
    want_order = _stack_order(target)
    guard = 0
    while cur_order != want_order:
        # bubble an adjacent transposition toward the wanted order
        pos_want = {did: k for k, did in enumerate(want_order)}
        swapped = False
        for k in range(len(cur_order) - 1):
            u, v = cur_order[k], cur_order[k + 1]
            if pos_want[u] > pos_want[v]:
                rec = _normalize_swap(cur, u, v)
                seq.moves.append(rec)
                cur = rec.result
                cur_order = _stack_order(cur)
                swapped = True
                break
        if not swapped:
            raise InternalInvariantError("normalize loop stuck")
        guard += 1
        if guard > 3:
            raise InternalInvariantError("more than 3 normalize swaps needed")
    if cur != target:
        raise InternalInvariantError("canonical forms of a and b do not align")

    for k in range(len(seq_b.moves) - 1, -1, -1):
        mv = seq_b.moves[k]
        prev_map = seq_b_maps[k]
        pair = (relabel.get(mv.pair[0], mv.pair[0]), relabel.get(mv.pair[1], mv.pair[1]))
        seq.moves.append(MoveRecord(0, pair, mv.kind, prev_map))
    seq.moves = [MoveRecord(n, mv.pair, mv.kind, mv.result)
                 for n, mv in enumerate(seq.moves)]
    return seq


def _relabel_map(mp: DistrictMap, relabel: dict[int, int], name_source: DistrictMap) -> DistrictMap:
    if all(k == v for k, v in relabel.items()):
        return mp
    districts = []
    for d in mp.districts:
        nid = relabel.get(d.id, d.id)
        name = name_source.district(nid).name
        corrs = tuple(Corridor(c.id, nid, c.path) for c in d.corridors)
        districts.append(District(nid, name, d.target_area, d.region, corrs))
    return DistrictMap(mp.domain, districts, mp.strand_orders)


def _stack_order(m: DistrictMap) -> tuple[int, ...]:
    """Top-to-bottom order of a canonical stacked map."""
    tops = [(d.region.bbox()[3], d.id) for d in m.districts]
    tops.sort(reverse=True)
    return tuple(did for _, did in tops)


def _normalize_swap(m: DistrictMap, u: int, v: int) -> MoveRecord:
    """Swap two vertically adjacent canonical rectangles (u above v)."""
    ru, rv = m.district(u).region, m.district(v).region
    union = ru.union(rv)
    x0, x1, y0, y1 = union.bbox()
    width = x1 - x0
    hv = m.district(v).target_area / width
    new_v = RectRegion.from_rect(x0, x1, y1 - hv, y1)
    new_u = union.subtract(new_v)
    m2 = m.replace_districts({
        u: District(u, m.district(u).name, m.district(u).target_area, new_u),
        v: District(v, m.district(v).name, m.district(v).target_area, new_v),
    })
    _check_move(m, m2, (u, v))
    return MoveRecord(0, (u, v), "normalize", m2)
