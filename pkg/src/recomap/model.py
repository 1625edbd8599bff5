"""District maps in weak representation.

A district owns a rectilinear region plus zero-width corridors (polylines on
the coordinate grid).  Corridor strands may overlap each other along an edge;
a per-edge linear order disambiguates the nesting.  Faces are a derived view:
connected pieces of a district's region after splitting along every foreign
strand, cut further into strictly simple rings where holes occur.

`Board` is the per-operation index: sorted coordinate axes, a cell-owner grid
and per-edge passage lists.  Maps themselves are immutable values.
"""

from __future__ import annotations

import json
from bisect import bisect_left, insort
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import MapError, NotAdjacent, ParseError, SchemaError
from .geometry import Frac, Point, frac, format_frac, ring_area, ring_is_simple
from .regions import RectRegion, region_to_simple_faces

OUTER = -1  # pseudo-owner for the outside of the domain


@dataclass(frozen=True)
class Corridor:
    """Zero-width connector owned by one district.

    The path is a polyline with axis-parallel legs whose vertices lie on the
    map's coordinate grid.  A single-point path is a degenerate attachment.
    """

    id: int
    owner: int
    path: tuple[Point, ...]

    def legs(self):
        return list(zip(self.path, self.path[1:]))

    def length(self) -> Fraction:
        total = Fraction(0)
        for (x1, y1), (x2, y2) in self.legs():
            total += abs(x2 - x1) + abs(y2 - y1)
        return total


@dataclass(frozen=True)
class District:
    id: int
    name: str
    target_area: Fraction
    region: RectRegion
    corridors: tuple[Corridor, ...] = ()


# passage identity: (corridor_id, leg_index)
Passage = tuple[int, int]
# order run: (axis, line coordinate, lo, hi, ordered passages)
OrderRun = tuple[str, Fraction, Fraction, Fraction, tuple[Passage, ...]]


class DistrictMap:
    """Immutable 3-district map of a rectilinear domain (unit square by default)."""

    def __init__(self, domain: RectRegion, districts: Sequence[District],
                 strand_orders: Sequence[OrderRun] = ()):
        self.domain = domain
        self.districts = tuple(sorted(districts, key=lambda d: d.id))
        self.strand_orders = tuple(strand_orders)
        self._board: Optional[Board] = None

    # -- conveniences --------------------------------------------------------

    def district(self, did: int) -> District:
        for d in self.districts:
            if d.id == did:
                return d
        raise KeyError(did)

    def replace_districts(self, new: dict[int, District],
                          strand_orders=None) -> "DistrictMap":
        ds = [new.get(d.id, d) for d in self.districts]
        so = self.strand_orders if strand_orders is None else tuple(strand_orders)
        return DistrictMap(self.domain, ds, so)

    def all_corridors(self) -> list[Corridor]:
        out = []
        for d in self.districts:
            out.extend(d.corridors)
        return out

    def next_corridor_id(self) -> int:
        cids = [c.id for c in self.all_corridors()]
        return max(cids, default=0) + 1

    def board(self) -> "Board":
        if self._board is None:
            self._board = Board(self)
        return self._board

    def complexity(self) -> int:
        """Total vertex count: face-ring vertices plus corridor path vertices."""
        total = 0
        for d in self.districts:
            for loop in d.region.boundary_loops():
                total += len(loop)
            for c in d.corridors:
                total += len(c.path)
        return total

    def __eq__(self, other):
        if not isinstance(other, DistrictMap):
            return NotImplemented
        return (self.domain == other.domain
                and self.districts == other.districts
                and set(self.strand_orders) == set(other.strand_orders))

    def __hash__(self):
        return hash((self.domain, self.districts))

    def __repr__(self):
        areas = ",".join(format_frac(d.region.area()) for d in self.districts)
        return f"DistrictMap(areas=[{areas}], corridors={len(self.all_corridors())})"


def unit_square() -> RectRegion:
    return RectRegion.from_rect(0, 1, 0, 1)


def canonical_map(areas_bottom_to_top: Sequence[tuple[int, Fraction]],
                  names: Optional[dict[int, str]] = None,
                  domain: Optional[RectRegion] = None) -> DistrictMap:
    """Stacked unit-width rectangles; areas listed bottom-to-top as (id, area)."""
    domain = domain or unit_square()
    x0, x1, y0, y1 = domain.bbox()
    width = x1 - x0
    y = y0
    districts = []
    for did, area in areas_bottom_to_top:
        area = frac(area)
        h = area / width
        districts.append(District(did, (names or {}).get(did, f"d{did}"), area,
                                  RectRegion.from_rect(x0, x1, y, y + h)))
        y = y + h
    if y != y1:
        raise SchemaError("target areas must sum to the domain area")
    return DistrictMap(domain, districts)


# ---------------------------------------------------------------------------
# the per-operation index


EdgeKey = tuple[str, int, int]  # ('v', xi, yj-cell) or ('h', xi-cell, yj)


class GridIndex:
    """Shared cell/edge index logic for Board (immutable view) and the moves'
    mutable workspace.  Subclasses provide xs, ys, xi, yi, nx, ny, owner,
    corridors (cid -> Corridor), corridor_owner and edge_passages."""

    xs: list
    ys: list

    # -- coordinates ---------------------------------------------------------

    def edge_keys_on_leg(self, p: Point, q: Point) -> list[EdgeKey]:
        (x1, y1), (x2, y2) = p, q
        keys: list[EdgeKey] = []
        if x1 == x2 and y1 == y2:
            return keys
        if x1 == x2:
            i = self.xi[x1]
            j1, j2 = sorted((self.yi[y1], self.yi[y2]))
            keys = [("v", i, j) for j in range(j1, j2)]
        elif y1 == y2:
            j = self.yi[y1]
            i1, i2 = sorted((self.xi[x1], self.xi[x2]))
            keys = [("h", i, j) for i in range(i1, i2)]
        else:
            raise SchemaError("corridor legs must be axis-parallel",
                              f"{p} -> {q}")
        return keys

    def edge_sides(self, ek: EdgeKey) -> tuple[int, int]:
        """Owners of the two cells flanking an edge, in strand-order direction
        (first = left side: west for vertical edges, above for horizontal)."""
        kind, i, j = ek
        if kind == "v":
            west = self.owner[j][i - 1] if i > 0 else OUTER
            east = self.owner[j][i] if i < self.nx else OUTER
            return west, east
        above = self.owner[j][i] if j < self.ny else OUTER
        below = self.owner[j - 1][i] if j > 0 else OUTER
        return above, below

    def edge_span(self, ek: EdgeKey):
        kind, i, j = ek
        if kind == "v":
            return self.xs[i], self.ys[j], self.xs[i], self.ys[j + 1]
        return self.xs[i], self.ys[j], self.xs[i + 1], self.ys[j]

    def corridors_of(self, did: int) -> list[Corridor]:
        return [c for c in self.corridors.values() if c.owner == did]

    # -- strand orders -------------------------------------------------------

    def _apply_orders(self):
        runs = {}
        for axis, line, lo, hi, seq in self.map.strand_orders:
            runs.setdefault((axis, line), []).append((lo, hi, tuple(seq)))
        for ek, passages in self.edge_passages.items():
            if len(passages) < 2:
                continue
            kind, i, j = ek
            if kind == "v":
                line, lo = self.xs[i], self.ys[j]
            else:
                line, lo = self.ys[j], self.xs[i]
            axis = "v" if kind == "v" else "h"
            ordered = None
            for rlo, rhi, seq in runs.get((axis, line), ()):
                if rlo <= lo and hi_of(ek, self) <= rhi:
                    ordered = [p for p in seq if p in passages]
                    break
            if ordered and len(ordered) == len(passages):
                self.edge_passages[ek] = ordered
            else:
                # no stored order: deterministic fallback
                self.edge_passages[ek] = sorted(passages)

    def export_orders(self) -> tuple[OrderRun, ...]:
        return export_order_runs(self.xs, self.ys, self.edge_passages)

    # -- components ----------------------------------------------------------

    def cells_of(self, owners: set[int]) -> list[tuple[int, int]]:
        return [(i, j) for j in range(self.ny) for i in range(self.nx)
                if self.owner[j][i] in owners]

    def edge_blocked_for(self, ek: EdgeKey, owners: set[int]) -> bool:
        """An edge between same-set cells is impassable iff a foreign strand
        runs along it (own strands there dissolve)."""
        for cid, _ in self.edge_passages.get(ek, ()):
            if self.corridor_owner[cid] not in owners:
                return True
        return False

    def components(self, owners: set[int]) -> list[set[tuple[int, int]]]:
        """Connected components of the owners' cells; adjacency across shared
        positive-length edges not carrying foreign strands."""
        cells = set(self.cells_of(owners))
        seen: set[tuple[int, int]] = set()
        comps: list[set[tuple[int, int]]] = []
        for start in sorted(cells):
            if start in seen:
                continue
            comp = {start}
            seen.add(start)
            stack = [start]
            while stack:
                i, j = stack.pop()
                for (ni, nj), ek in (((i - 1, j), ("v", i, j)),
                                     ((i + 1, j), ("v", i + 1, j)),
                                     ((i, j - 1), ("h", i, j)),
                                     ((i, j + 1), ("h", i, j + 1))):
                    if (ni, nj) in cells and (ni, nj) not in seen \
                            and not self.edge_blocked_for(ek, owners):
                        seen.add((ni, nj))
                        comp.add((ni, nj))
                        stack.append((ni, nj))
            comps.append(comp)
        return comps

    def cells_region(self, cells: Iterable[tuple[int, int]]) -> RectRegion:
        rows: dict[int, list] = {}
        for i, j in cells:
            rows.setdefault(j, []).append((self.xs[i], self.xs[i + 1]))
        return RectRegion([(self.ys[j], self.ys[j + 1], tuple(ivs))
                           for j, ivs in rows.items()])

    def vertex_cells(self, vi: int, vj: int) -> list[tuple[tuple[int, int], int]]:
        """Cells around grid vertex (vi, vj) with owners (OUTER if outside)."""
        out = []
        for ci, cj in ((vi - 1, vj - 1), (vi, vj - 1), (vi - 1, vj), (vi, vj)):
            if 0 <= ci < self.nx and 0 <= cj < self.ny:
                out.append(((ci, cj), self.owner[cj][ci]))
            else:
                out.append(((ci, cj), OUTER))
        return out

    # -- district structure ---------------------------------------------------

    def district_components(self, did: int) -> list[set[tuple[int, int]]]:
        return self.components({did})

    def corridor_touches(self, c: Corridor, comp_cells: set[tuple[int, int]]) -> bool:
        """True if an endpoint of the corridor lies on the component closure."""
        pts = [c.path[0], c.path[-1]]
        for x, y in pts:
            vi, vj = self.xi[x], self.yi[y]
            for (ci, cj), _ in self.vertex_cells(vi, vj):
                if (ci, cj) in comp_cells:
                    return True
        return False

    def district_connected(self, did: int) -> bool:
        comps = self.district_components(did)
        corridors = self.corridors_of(did)
        if not comps:
            return False
        if len(comps) == 1 and not corridors:
            return True
        # union-find over components and corridors
        nodes: list = [("comp", k) for k in range(len(comps))] + \
                      [("corr", c.id) for c in corridors]
        idx = {n: k for k, n in enumerate(nodes)}
        parent = list(range(len(nodes)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for c in corridors:
            for k, comp in enumerate(comps):
                if self.corridor_touches(c, comp):
                    union(idx[("corr", c.id)], idx[("comp", k)])
        # corridor-to-corridor: endpoint of one on the path of another
        from .geometry import point_on_segment

        for c in corridors:
            for p in (c.path[0], c.path[-1]):
                for other in corridors:
                    if other.id == c.id:
                        continue
                    if p in other.path or any(point_on_segment(p, a, b)
                                              for a, b in other.legs()):
                        union(idx[("corr", c.id)], idx[("corr", other.id)])
        roots = {find(k) for k in range(len(nodes))}
        return len(roots) == 1


class Board(GridIndex):
    """Indexed immutable view of a map."""

    def __init__(self, m: DistrictMap):
        self.map = m
        xs: set[Fraction] = set()
        ys: set[Fraction] = set()
        bx = m.domain.bbox()
        xs.update((bx[0], bx[1]))
        ys.update((bx[2], bx[3]))
        for d in m.districts:
            for y0, y1, ivs in d.region.rows:
                ys.update((y0, y1))
                for a, b in ivs:
                    xs.update((a, b))
            for c in d.corridors:
                for x, y in c.path:
                    xs.add(x)
                    ys.add(y)
        self.xs = sorted(xs)
        self.ys = sorted(ys)
        self.xi = {x: i for i, x in enumerate(self.xs)}
        self.yi = {y: j for j, y in enumerate(self.ys)}
        nx, ny = len(self.xs) - 1, len(self.ys) - 1
        self.nx, self.ny = nx, ny
        self.owner: list[list[int]] = [[OUTER] * nx for _ in range(ny)]
        self.overlaps: list[tuple[int, int, int]] = []  # cell owner clashes
        for d in m.districts:
            for y0, y1, ivs in d.region.rows:
                j0, j1 = self.yi[y0], self.yi[y1]
                for a, b in ivs:
                    i0, i1 = self.xi[a], self.xi[b]
                    for j in range(j0, j1):
                        row = self.owner[j]
                        for i in range(i0, i1):
                            if row[i] != OUTER:
                                self.overlaps.append((row[i], d.id, i))
                            row[i] = d.id
        self.corridors = {c.id: c for c in m.all_corridors()}
        self.corridor_owner = {c.id: c.owner for c in m.all_corridors()}
        self.edge_passages: dict[EdgeKey, list[Passage]] = {}
        for c in m.all_corridors():
            for leg_idx, (p, q) in enumerate(c.legs()):
                for ek in self.edge_keys_on_leg(p, q):
                    self.edge_passages.setdefault(ek, []).append((c.id, leg_idx))
        self._apply_orders()


# ---------------------------------------------------------------------------
# derived faces


def derive_faces(m: DistrictMap) -> list[tuple[int, int, list[Point]]]:
    """Deterministic face list: (face_id, district_id, ccw simple ring)."""
    board = m.board()
    out = []
    fid = 0
    for d in m.districts:
        comps = board.district_components(d.id)
        rings: list[list[Point]] = []
        for comp in comps:
            region = board.cells_region(comp)
            rings.extend(region_to_simple_faces(region))
        rings.sort(key=lambda r: (min(p[1] for p in r), min(p[0] for p in r)))
        for ring in rings:
            fid += 1
            out.append((fid, d.id, ring))
    return out


def hi_of(ek: EdgeKey, board: Board) -> Fraction:
    kind, i, j = ek
    return board.ys[j + 1] if kind == "v" else board.xs[i + 1]


def export_order_runs(xs, ys, edge_passages) -> tuple[OrderRun, ...]:
    """Maximal same-order runs over edges carrying >= 2 passages."""
    runs: list[OrderRun] = []
    by_line: dict[tuple[str, int], list[tuple[int, tuple[Passage, ...]]]] = {}
    for ek, passages in edge_passages.items():
        if len(passages) < 2:
            continue
        kind, i, j = ek
        if kind == "v":
            by_line.setdefault(("v", i), []).append((j, tuple(passages)))
        else:
            by_line.setdefault(("h", j), []).append((i, tuple(passages)))

    def make_run(axis, idx, k0, k1, seq) -> OrderRun:
        if axis == "v":
            return ("v", xs[idx], ys[k0], ys[k1 + 1], seq)
        return ("h", ys[idx], xs[k0], xs[k1 + 1], seq)

    for (axis, idx), entries in sorted(by_line.items()):
        entries.sort()
        start = prev = None
        seq = None
        for k, passages in entries:
            if start is not None and k == prev + 1 and passages == seq:
                prev = k
                continue
            if start is not None:
                runs.append(make_run(axis, idx, start, prev, seq))
            start = prev = k
            seq = passages
        if start is not None:
            runs.append(make_run(axis, idx, start, prev, seq))
    return tuple(runs)


# ---------------------------------------------------------------------------
# validation


@dataclass
class DistrictReport:
    district_id: int
    connected: bool
    area_residual: Fraction
    face_overlaps: list
    corridor_violations: list
    strand_violations: list

    def ok(self, tol: Fraction) -> bool:
        return (self.connected and abs(self.area_residual) <= tol
                and not self.face_overlaps and not self.corridor_violations
                and not self.strand_violations)


@dataclass
class ValidationReport:
    mode: str
    tol: Fraction
    districts: list[DistrictReport]
    map_errors: list

    @property
    def valid(self) -> bool:
        return not self.map_errors and all(r.ok(self.tol) for r in self.districts)

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "mode": self.mode,
            "tol": format_frac(self.tol),
            "map_errors": [str(e) for e in self.map_errors],
            "districts": [
                {
                    "id": r.district_id,
                    "connected": r.connected,
                    "area_residual": format_frac(r.area_residual),
                    "face_overlaps": [str(v) for v in r.face_overlaps],
                    "corridor_violations": [str(v) for v in r.corridor_violations],
                    "strand_violations": [str(v) for v in r.strand_violations],
                }
                for r in self.districts
            ],
        }


def validate_map(m: DistrictMap, mode: str = "exact", tol=Fraction(0)) -> ValidationReport:
    tol = frac(tol) if mode == "approx" else Fraction(0)
    board = m.board()
    map_errors: list[str] = []
    total = sum((d.region.area() for d in m.districts), Fraction(0))
    if abs(total - m.domain.area()) > tol:
        map_errors.append(f"district areas sum to {total}, domain is {m.domain.area()}")
    covered = RectRegion.empty()
    for d in m.districts:
        covered = covered.union(d.region)
    if covered != m.domain and abs(covered.area() - m.domain.area()) > tol:
        map_errors.append("union of district regions does not cover the domain")
    target_total = sum((d.target_area for d in m.districts), Fraction(0))
    if target_total != m.domain.area():
        map_errors.append("target areas do not sum to the domain area")

    reports = []
    for d in m.districts:
        overlaps = []
        for e in m.districts:
            if e.id <= d.id:
                continue
            inter = d.region.intersect(e.region)
            if inter.area() > 0:
                overlaps.append(f"districts {d.id} and {e.id} overlap with area {inter.area()}")
        cviol = _corridor_violations(board, d)
        sviol = _strand_violations(board, d)
        reports.append(DistrictReport(
            district_id=d.id,
            connected=board.district_connected(d.id),
            area_residual=d.region.area() - d.target_area,
            face_overlaps=overlaps,
            corridor_violations=cviol,
            strand_violations=sviol,
        ))
    return ValidationReport(mode, tol, reports, map_errors)


def _corridor_violations(board: Board, d: District) -> list[str]:
    out = []
    domain = board.map.domain
    for c in d.corridors:
        for p in c.path:
            if not domain.contains_point(p):
                out.append(f"corridor {c.id} leaves the domain at {p}")
                break
        for leg_idx, (p, q) in enumerate(c.legs()):
            if p == q:
                out.append(f"corridor {c.id} leg {leg_idx} has zero length")
                continue
            try:
                eks = board.edge_keys_on_leg(p, q)
            except SchemaError as e:
                out.append(str(e))
                continue
            for ek in eks:
                sides = board.edge_sides(ek)
                if sides[0] == d.id and sides[1] == d.id:
                    out.append(f"corridor {c.id} runs interior to its own district")
                    break
        # endpoints must touch own material or the domain boundary
        for p in (c.path[0], c.path[-1]):
            if _endpoint_attached(board, d, p):
                continue
            out.append(f"corridor {c.id} endpoint {p} attaches to nothing")
    return out


def _endpoint_attached(board: Board, d: District, p: Point) -> bool:
    x, y = p
    vi, vj = board.xi.get(x), board.yi.get(y)
    if vi is None or vj is None:
        return False
    for (ci, cj), owner in board.vertex_cells(vi, vj):
        if owner == d.id or owner == OUTER:
            return True
    for c in d.corridors:
        for (a, b) in c.legs():
            from .geometry import point_on_segment
            if point_on_segment(p, a, b):
                return True
    return False


def _strand_violations(board: Board, d: District) -> list[str]:
    out = []
    known = set(board.corridors)
    for axis, line, lo, hi, seq in board.map.strand_orders:
        for cid, leg in seq:
            if cid not in known:
                out.append(f"strand order references unknown corridor {cid}")
    return out


# ---------------------------------------------------------------------------
# weak-polygon union view


@dataclass
class WeakCorridor:
    """A corridor of the union polygon: a connected set of surviving strand
    edges, with the faces it attaches to."""

    edges: frozenset[EdgeKey]
    faces: tuple[int, ...]  # indices into the view's face list
    passages: tuple[Passage, ...]


class WeakPolygonView:
    """The union of two districts seen as one weak polygon."""

    def __init__(self, m: DistrictMap, i: int, j: int):
        self.map = m
        self.pair = (i, j)
        board = m.board()
        self.board = board
        owners = {i, j}
        if not _adjacent(board, i, j):
            raise NotAdjacent(f"districts {i} and {j} are not adjacent")
        self.region = m.district(i).region.union(m.district(j).region)
        self.face_cells = board.components(owners)
        self.face_regions = [board.cells_region(c) for c in self.face_cells]
        self.face_weights = [r.area() for r in self.face_regions]
        self.corridors = _surviving_strands(board, owners, self.face_cells)

    def area(self) -> Fraction:
        return self.region.area()

    def faces(self) -> list[RectRegion]:
        return self.face_regions

    def outer_boundary_walk(self) -> list[Point]:
        """Closed walk of the weak polygon: face outer rings stitched with
        corridor double-traversals.  Shoelace over the walk equals the sum of
        face areas exactly (corridors cancel).  Holes are not traversed."""
        board = self.board
        outers = []
        for region in self.face_regions:
            loops = region.boundary_loops()
            outers.append(max(loops, key=ring_area))
        if len(outers) == 1 and not self.corridors:
            return outers[0]

        def verts(ek):
            kind, i, j = ek
            if kind == "v":
                return ((i, j), (i, j + 1))
            return ((i, j), (i + 1, j))

        def vpt(v):
            return (board.xs[v[0]], board.ys[v[1]])

        # attachment vertex of a corridor on a face: deterministic minimum
        def attach_vertex(corr: WeakCorridor, face_idx: int):
            cells = self.face_cells[face_idx]
            cand = []
            for ek in sorted(corr.edges):
                for v in verts(ek):
                    for (ci, cj), _ in board.vertex_cells(*v):
                        if (ci, cj) in cells:
                            cand.append(v)
            return min(cand) if cand else None

        def corridor_path(corr: WeakCorridor, v_from, v_to) -> list:
            if v_from == v_to:
                return [v_from]
            adj: dict = {}
            for ek in corr.edges:
                a, b = verts(ek)
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
            prev = {v_from: None}
            queue = [v_from]
            while queue:
                cur = queue.pop(0)
                if cur == v_to:
                    break
                for nxt in sorted(adj.get(cur, ())):
                    if nxt not in prev:
                        prev[nxt] = cur
                        queue.append(nxt)
            if v_to not in prev:
                return [v_from, v_to]
            path = [v_to]
            while path[-1] != v_from:
                path.append(prev[path[-1]])
            path.reverse()
            return path

        # spanning tree over faces via corridors
        tree: dict[int, list[tuple[WeakCorridor, int]]] = {k: [] for k in range(len(outers))}
        seen = {0}
        frontier = [0]
        corr_left = list(self.corridors)
        while frontier:
            f = frontier.pop()
            for corr in list(corr_left):
                if f in corr.faces:
                    for g in corr.faces:
                        if g not in seen:
                            tree[f].append((corr, g))
                            seen.add(g)
                            frontier.append(f)
                            frontier.append(g)
                            corr_left.remove(corr)
                            break

        from .geometry import point_on_segment

        walk: list[Point] = []

        def emit_face(f: int, visited: set):
            visited.add(f)
            ring = outers[f]
            n = len(ring)
            pending = list(tree[f])
            for k in range(n + 1):
                p = ring[k % n]
                walk.append(p)
                q = ring[(k + 1) % n]
                for corr, g in list(pending):
                    av = attach_vertex(corr, f)
                    gv = attach_vertex(corr, g)
                    if av is None or gv is None:
                        pending.remove((corr, g))
                        continue
                    ap = vpt(av)
                    if point_on_segment(ap, p, q):
                        path = [vpt(v) for v in corridor_path(corr, av, gv)]
                        walk.append(ap)
                        walk.extend(path[1:])
                        emit_face(g, visited)
                        walk.extend(reversed(path[:-1]))
                        pending.remove((corr, g))
            if walk and walk[-1] == ring[0]:
                walk.pop()

        emit_face(0, set())
        return walk


def _adjacent(board: Board, i: int, j: int) -> bool:
    for (kind, a, b), _ in _iter_interface_edges(board, i, j):
        return True
    # corridor contact: a corridor of one touching the other's material
    for c in board.map.all_corridors():
        if c.owner not in (i, j):
            continue
        other = j if c.owner == i else i
        for x, y in c.path:
            vi, vj = board.xi[x], board.yi[y]
            for _, owner in board.vertex_cells(vi, vj):
                if owner == other:
                    return True
    return False


def _iter_interface_edges(board: Board, i: int, j: int):
    for cj in range(board.ny):
        for ci in range(board.nx):
            if board.owner[cj][ci] != i:
                continue
            for ek in (("v", ci, cj), ("v", ci + 1, cj), ("h", ci, cj), ("h", ci, cj + 1)):
                sides = board.edge_sides(ek)
                if set(sides) == {i, j}:
                    yield ek, sides


def _surviving_strands(board: Board, owners: set[int],
                       face_cells: list[set[tuple[int, int]]]) -> list[WeakCorridor]:
    """Strand edges of the owners' corridors that do not dissolve into the
    union region, grouped into connected components."""
    surviving: dict[EdgeKey, list[Passage]] = {}
    for ek, passages in board.edge_passages.items():
        own = [p for p in passages if board.corridor_owner[p[0]] in owners]
        if not own:
            continue
        keep = _surviving_on_edge(board, ek, passages, owners)
        if keep:
            surviving[ek] = keep
    # group edges into connected components via shared vertices
    vertex_of: dict[tuple[int, int], list[EdgeKey]] = {}

    def verts(ek):
        kind, i, j = ek
        if kind == "v":
            return ((i, j), (i, j + 1))
        return ((i, j), (i + 1, j))

    for ek in surviving:
        for v in verts(ek):
            vertex_of.setdefault(v, []).append(ek)
    seen: set[EdgeKey] = set()
    cell_face: dict[tuple[int, int], int] = {}
    for fi, cells in enumerate(face_cells):
        for c in cells:
            cell_face[c] = fi
    out: list[WeakCorridor] = []
    for start in sorted(surviving):
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        stack = [start]
        while stack:
            ek = stack.pop()
            for v in verts(ek):
                for nk in vertex_of[v]:
                    if nk not in seen:
                        seen.add(nk)
                        comp.add(nk)
                        stack.append(nk)
        # faces touched by this strand component (via any vertex contact)
        faces: set[int] = set()
        for ek in comp:
            for (vi, vj) in verts(ek):
                for (ci, cj), owner in board.vertex_cells(vi, vj):
                    if (ci, cj) in cell_face:
                        faces.add(cell_face[(ci, cj)])
        passages = tuple(sorted({p for ek in comp for p in surviving[ek]}))
        out.append(WeakCorridor(frozenset(comp), tuple(sorted(faces)), passages))
    return out


def _surviving_on_edge(board: Board, ek: EdgeKey, passages: list[Passage],
                       owners: set[int]) -> list[Passage]:
    """Owner-set passages on one edge that survive dissolution: strip own
    passages adjacent to own material from both ends of the order."""
    sides = board.edge_sides(ek)
    seq = list(passages)
    left_is_own = sides[0] in owners
    right_is_own = sides[1] in owners
    lo, hi = 0, len(seq)
    if left_is_own:
        while lo < hi and board.corridor_owner[seq[lo][0]] in owners:
            lo += 1
    if right_is_own:
        while hi > lo and board.corridor_owner[seq[hi - 1][0]] in owners:
            hi -= 1
    return [p for p in seq[lo:hi] if board.corridor_owner[p[0]] in owners]


def union_weak_polygon(m: DistrictMap, i: int, j: int) -> WeakPolygonView:
    return WeakPolygonView(m, i, j)


# ---------------------------------------------------------------------------
# serialization


def _pt_json(p: Point) -> list[str]:
    return [format_frac(p[0]), format_frac(p[1])]


def save_map(m: DistrictMap) -> bytes:
    board = m.board()
    faces = derive_faces(m)
    faces_by_district: dict[int, list] = {}
    for fid, did, ring in faces:
        faces_by_district.setdefault(did, []).append(ring)
    domain_loops = m.domain.boundary_loops()
    doc = {
        "domain": [_pt_json(p) for p in domain_loops[0]],
        "districts": [
            {
                "id": d.id,
                "name": d.name,
                "target_area": format_frac(d.target_area),
                "faces": [[_pt_json(p) for p in ring]
                          for ring in faces_by_district.get(d.id, [])],
                "corridors": [
                    {
                        "id": c.id,
                        "path": [_pt_json(p) for p in c.path],
                        "attach": _attach_refs(board, d, c),
                    }
                    for c in d.corridors
                ],
            }
            for d in m.districts
        ],
        "strand_orders": [
            {
                "edge": _run_edge_json(run),
                "order": _run_order_json(board, run),
            }
            for run in board.export_orders()
        ],
    }
    return json.dumps(doc, indent=1).encode()


def _run_edge_json(run: OrderRun):
    axis, line, lo, hi, _ = run
    if axis == "v":
        return [[format_frac(line), format_frac(lo)], [format_frac(line), format_frac(hi)]]
    return [[format_frac(lo), format_frac(line)], [format_frac(hi), format_frac(line)]]


def _run_order_json(board: Board, run: OrderRun):
    axis, line, lo, hi, seq = run
    # face markers for the two sides; sample an edge in the run
    if axis == "v":
        ek = ("v", board.xi[line], board.yi[lo])
    else:
        ek = ("h", board.xi[lo], board.yi[line])
    sides = board.edge_sides(ek)

    def marker(owner):
        return "outer" if owner == OUTER else f"face:{owner}"

    return ([marker(sides[0])]
            + [f"corr:{cid}#{leg}" for cid, leg in seq]
            + [marker(sides[1])])


def _attach_refs(board: Board, d: District, c: Corridor) -> list[str]:
    refs = []
    bx = board.map.domain.bbox()
    for p in (c.path[0], c.path[-1]):
        x, y = p
        ref = "none"
        vi, vj = board.xi.get(x), board.yi.get(y)
        if vi is not None and vj is not None:
            for _, owner in board.vertex_cells(vi, vj):
                if owner == d.id:
                    ref = f"face:{d.id}"
                    break
        if ref == "none":
            for other in d.corridors:
                if other.id == c.id:
                    continue
                from .geometry import point_on_segment
                if any(point_on_segment(p, a, b) for a, b in other.legs()):
                    ref = f"corr:{other.id}"
                    break
        if ref == "none" and bx is not None:
            if x == bx[0]:
                ref = "side:left"
            elif x == bx[1]:
                ref = "side:right"
            elif y == bx[2]:
                ref = "side:bottom"
            elif y == bx[3]:
                ref = "side:top"
        refs.append(ref)
    return refs


def load_map(data: bytes) -> DistrictMap:
    try:
        doc = json.loads(data.decode())
    except Exception as e:
        raise ParseError(f"not valid JSON: {e}")
    try:
        domain_ring = [(frac(x), frac(y)) for x, y in doc["domain"]]
    except KeyError:
        raise ParseError("missing 'domain'")
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(f"bad rational in domain: {e}")
    domain = RectRegion.from_rings([domain_ring])
    districts = []
    orders: list[OrderRun] = []
    try:
        for dd in doc["districts"]:
            did = int(dd["id"])
            rings = []
            for ring_doc in dd.get("faces", []):
                ring = [(frac(x), frac(y)) for x, y in ring_doc]
                if len(ring) < 3:
                    raise SchemaError("face ring with fewer than 3 vertices")
                if not ring_is_simple(ring):
                    raise SchemaError("face ring is not simple", f"district {did}")
                if ring_area(ring) <= 0:
                    raise SchemaError("face ring must be counterclockwise with positive area")
                rings.append(ring)
            region = RectRegion.from_rings(rings) if rings else RectRegion.empty()
            corridors = []
            for cd in dd.get("corridors", []):
                path = tuple((frac(x), frac(y)) for x, y in cd["path"])
                corridors.append(Corridor(int(cd["id"]), did, path))
            districts.append(District(did, str(dd.get("name", f"d{did}")),
                                      frac(dd["target_area"]), region, tuple(corridors)))
        for od in doc.get("strand_orders", []):
            (x1, y1), (x2, y2) = [(frac(a), frac(b)) for a, b in od["edge"]]
            seq = []
            for token in od["order"]:
                if token.startswith("corr:"):
                    cid, leg = token[5:].split("#")
                    seq.append((int(cid), int(leg)))
            if x1 == x2:
                orders.append(("v", x1, min(y1, y2), max(y1, y2), tuple(seq)))
            else:
                orders.append(("h", y1, min(x1, x2), max(x1, x2), tuple(seq)))
    except SchemaError:
        raise
    except (KeyError, ValueError, TypeError, ZeroDivisionError) as e:
        raise ParseError(f"malformed map document: {e}")
    m = DistrictMap(domain, districts, orders)
    report = validate_map(m)
    hard = [e for e in report.map_errors]
    for r in report.districts:
        hard.extend(r.face_overlaps)
    if hard:
        raise SchemaError("map violates partition invariants", "; ".join(map(str, hard)))
    return m
