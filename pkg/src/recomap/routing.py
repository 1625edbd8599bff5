"""Corridor routing on the weak-representation grid.

New corridors must never cross existing strands: running parallel along a
shared edge is fine (nesting recorded in the per-edge order), but transversal
crossings at a vertex are not realizable by any perturbation.  The router
searches over (edge, slot) states, where a slot is a gap in an edge's strand
order, and checks every vertex transition against the chords formed by
existing corridor transitions and attachments with an exact cyclic
interleaving test.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .errors import InternalInvariantError
from .geometry import Point
from .model import (
    Corridor,
    District,
    DistrictMap,
    EdgeKey,
    GridIndex,
    OUTER,
    Passage,
    export_order_runs,
)
from .regions import RectRegion

Cell = tuple[int, int]
Vertex = tuple[int, int]

# atoms in the cyclic structure around a vertex
# ("slot", ek, s) | ("pass", ek, passage) | ("corner", cell)


class Workspace(GridIndex):
    """Mutable copy of a map's grid used while constructing one move."""

    def __init__(self, m: DistrictMap, extra_xs: Iterable = (), extra_ys: Iterable = ()):
        board = m.board()
        xs = sorted(set(board.xs) | {Fraction(v) for v in extra_xs})
        ys = sorted(set(board.ys) | {Fraction(v) for v in extra_ys})
        self.domain = m.domain
        self.meta = {d.id: (d.name, d.target_area) for d in m.districts}
        self.xs, self.ys = xs, ys
        self.xi = {x: i for i, x in enumerate(xs)}
        self.yi = {y: j for j, y in enumerate(ys)}
        self.nx, self.ny = len(xs) - 1, len(ys) - 1
        self.owner = [[OUTER] * self.nx for _ in range(self.ny)]
        for d in m.districts:
            for y0, y1, ivs in d.region.rows:
                j0, j1 = self.yi[y0], self.yi[y1]
                for a, b in ivs:
                    i0, i1 = self.xi[a], self.xi[b]
                    for j in range(j0, j1):
                        row = self.owner[j]
                        for i in range(i0, i1):
                            row[i] = d.id
        self.corridors: dict[int, Corridor] = {}
        self.corridor_owner: dict[int, int] = {}
        self.edge_passages: dict[EdgeKey, list[Passage]] = {}
        self.next_cid = 1
        # replay corridors through the (possibly refined) grid, preserving
        # the stored strand order
        for c in m.all_corridors():
            self._install(c)
        # order within shared edges: reuse board's resolved per-edge orders
        for ek, passages in list(self.edge_passages.items()):
            if len(passages) < 2:
                continue
            self.edge_passages[ek] = self._reorder_from_board(board, ek, passages)

    def _install(self, c: Corridor):
        self.corridors[c.id] = c
        self.corridor_owner[c.id] = c.owner
        self.next_cid = max(self.next_cid, c.id + 1)
        for leg_idx, (p, q) in enumerate(c.legs()):
            for ek in self.edge_keys_on_leg(p, q):
                self.edge_passages.setdefault(ek, []).append((c.id, leg_idx))

    def _reorder_from_board(self, board, ek: EdgeKey, passages: list[Passage]):
        kind, i, j = ek
        if kind == "v":
            bek = ("v", board.xi[self.xs[i]], _floor_index(board.ys, self.ys[j]))
        else:
            bek = ("h", _floor_index(board.xs, self.xs[i]), board.yi[self.ys[j]])
        ref = board.edge_passages.get(bek, [])
        pos = {p: k for k, p in enumerate(ref)}
        return sorted(passages, key=lambda p: pos.get(p, len(pos)))

    # -- mutation -------------------------------------------------------------

    def recolor(self, cells: Iterable[Cell], did: int):
        for i, j in cells:
            self.owner[j][i] = did

    def remove_corridor(self, cid: int):
        c = self.corridors.pop(cid)
        del self.corridor_owner[cid]
        for leg_idx, (p, q) in enumerate(c.legs()):
            for ek in self.edge_keys_on_leg(p, q):
                lst = self.edge_passages.get(ek)
                if lst:
                    lst[:] = [x for x in lst if x[0] != cid]
                    if not lst:
                        del self.edge_passages[ek]

    def add_corridor(self, owner: int, path: list[Point],
                     slots: dict[EdgeKey, int]) -> Corridor:
        """Insert a routed corridor; slots give the insertion position per edge."""
        path = _simplify_path(path)
        cid = self.next_cid
        self.next_cid += 1
        c = Corridor(cid, owner, tuple(path))
        self.corridors[cid] = c
        self.corridor_owner[cid] = owner
        for leg_idx, (p, q) in enumerate(c.legs()):
            for ek in self.edge_keys_on_leg(p, q):
                lst = self.edge_passages.setdefault(ek, [])
                s = slots.get(ek, len(lst))
                lst.insert(min(s, len(lst)), (cid, leg_idx))
        return c

    def drop_district_corridors(self, did: int):
        for cid in [c.id for c in self.corridors_of(did)]:
            self.remove_corridor(cid)

    # -- normalization --------------------------------------------------------

    def normalize_district(self, did: int):
        """Dissolve strand pieces adjacent to the district's own region and
        split the affected corridors at the dissolved edges."""
        owners = {did}
        doomed: dict[int, set[int]] = {}  # cid -> set of unit-edge ordinals kept
        for c in list(self.corridors_of(did)):
            unit_edges = self._unit_edges(c)
            if not unit_edges:
                continue
            survive = []
            for ordinal, (ek, passage) in enumerate(unit_edges):
                passages = self.edge_passages.get(ek, [])
                keep = _survivors_on_edge(self, ek, passages, owners)
                survive.append(passage in keep)
            if all(survive):
                continue
            self._split_corridor(c, unit_edges, survive)

    def _unit_edges(self, c: Corridor) -> list[tuple[EdgeKey, Passage]]:
        out = []
        for leg_idx, (p, q) in enumerate(c.legs()):
            eks = self.edge_keys_on_leg(p, q)
            # order unit edges along the direction of travel
            if (q[0], q[1]) < (p[0], p[1]):
                eks = list(reversed(eks))
            for ek in eks:
                out.append((ek, (c.id, leg_idx)))
        return out

    def _split_corridor(self, c: Corridor, unit_edges, survive):
        # remove entirely, then re-add the surviving maximal runs
        slots_by_edge = {}
        for (ek, passage), keep in zip(unit_edges, survive):
            if keep:
                lst = self.edge_passages.get(ek, [])
                if passage in lst:
                    slots_by_edge[ek] = lst.index(passage)
        self.remove_corridor(c.id)
        run: list[EdgeKey] = []
        runs: list[list[EdgeKey]] = []
        for (ek, _), keep in zip(unit_edges, survive):
            if keep:
                run.append(ek)
            elif run:
                runs.append(run)
                run = []
        if run:
            runs.append(run)
        for run in runs:
            path = self._edges_to_path(run)
            self.add_corridor(c.owner, path, slots_by_edge)

    def _edges_to_path(self, eks: list[EdgeKey]) -> list[Point]:
        def ends(ek):
            kind, i, j = ek
            if kind == "v":
                return ((self.xs[i], self.ys[j]), (self.xs[i], self.ys[j + 1]))
            return ((self.xs[i], self.ys[j]), (self.xs[i + 1], self.ys[j]))

        if len(eks) == 1:
            return list(ends(eks[0]))
        pts: list[Point] = []
        first, second = ends(eks[0]), ends(eks[1])
        shared = set(first) & set(second)
        start = (set(first) - shared).pop() if len(shared) == 1 else first[0]
        pts.append(start)
        cur = start
        for ek in eks:
            a, b = ends(ek)
            nxt = b if a == cur else a
            pts.append(nxt)
            cur = nxt
        return _simplify_path(pts)

    # -- export ---------------------------------------------------------------

    def to_map(self) -> DistrictMap:
        regions: dict[int, list] = {did: [] for did in self.meta}
        for j in range(self.ny):
            row = self.owner[j]
            i = 0
            while i < self.nx:
                did = row[i]
                if did == OUTER:
                    i += 1
                    continue
                k = i
                while k < self.nx and row[k] == did:
                    k += 1
                regions[did].append((self.ys[j], self.ys[j + 1],
                                     ((self.xs[i], self.xs[k]),)))
                i = k
        districts = []
        for did, (name, target) in sorted(self.meta.items()):
            corrs = tuple(sorted(self.corridors_of(did), key=lambda c: c.id))
            districts.append(District(did, name, target,
                                      RectRegion(regions[did]), corrs))
        orders = export_order_runs(self.xs, self.ys, self.edge_passages)
        return DistrictMap(self.domain, districts, orders)


def _floor_index(coords, value):
    from bisect import bisect_right

    return max(0, bisect_right(coords, value) - 1)


def _simplify_path(path: list[Point]) -> list[Point]:
    out: list[Point] = []
    for p in path:
        if out and out[-1] == p:
            continue
        if len(out) >= 2:
            a, b = out[-2], out[-1]
            if (a[0] == b[0] == p[0]) or (a[1] == b[1] == p[1]):
                # collinear continuation or backtrack along the same line
                if (b[0] - a[0]) * (p[0] - b[0]) >= 0 and (b[1] - a[1]) * (p[1] - b[1]) >= 0:
                    out[-1] = p
                    continue
        out.append(p)
    return out


def _survivors_on_edge(grid: GridIndex, ek: EdgeKey, passages, owners: set[int]):
    sides = grid.edge_sides(ek)
    seq = list(passages)
    lo, hi = 0, len(seq)
    if sides[0] in owners:
        while lo < hi and grid.corridor_owner[seq[lo][0]] in owners:
            lo += 1
    if sides[1] in owners:
        while hi > lo and grid.corridor_owner[seq[hi - 1][0]] in owners:
            hi -= 1
    return set(seq[lo:hi])


# ---------------------------------------------------------------------------
# cyclic vertex structure


class VertexCycle:
    """Atoms around a grid vertex in counterclockwise order plus the chords
    formed by existing corridors; used for exact crossing tests."""

    def __init__(self, grid: GridIndex, vi: int, vj: int,
                 chords_src: dict[Vertex, list[tuple]]):
        self.atoms: dict = {}
        seq: list = []

        def add(atom):
            self.atoms[atom] = len(seq)
            seq.append(atom)

        def edge_block(ek, away: bool):
            passages = grid.edge_passages.get(ek, [])
            k = len(passages)
            if away:
                add(("slot", ek, k))
                for t in range(k - 1, -1, -1):
                    add(("pass", ek, passages[t]))
                    add(("slot", ek, t))
            else:
                add(("slot", ek, 0))
                for t in range(k):
                    add(("pass", ek, passages[t]))
                    add(("slot", ek, t + 1))

        # counterclockwise from the SE corner
        nx, ny = grid.nx, grid.ny
        add(("corner", (vi, vj - 1)))          # SE cell
        if vi < nx:
            edge_block(("h", vi, vj), away=True)    # E edge
        add(("corner", (vi, vj)))              # NE cell
        if vj < ny:
            edge_block(("v", vi, vj), away=True)    # N edge
        add(("corner", (vi - 1, vj)))          # NW cell
        if vi > 0:
            edge_block(("h", vi - 1, vj), away=False)  # W edge
        add(("corner", (vi - 1, vj - 1)))      # SW cell
        if vj > 0:
            edge_block(("v", vi, vj - 1), away=False)  # S edge
        self.size = len(seq)
        self.chords: list[tuple[int, int]] = []
        for a, b in chords_src.get((vi, vj), ()):
            ia, ib = self.atoms.get(a), self.atoms.get(b)
            if ia is not None and ib is not None and ia != ib:
                self.chords.append((ia, ib))

    def crossing(self, atom_a, atom_b) -> bool:
        ia, ib = self.atoms.get(atom_a), self.atoms.get(atom_b)
        if ia is None or ib is None:
            return True  # atom not present: treat as unroutable
        if ia == ib:
            return False
        lo, hi = min(ia, ib), max(ia, ib)
        for ca, cb in self.chords:
            a_in = lo < ca < hi
            b_in = lo < cb < hi
            if ca in (ia, ib) or cb in (ia, ib):
                continue
            if a_in != b_in:
                return True
        return False


def corridor_chords(grid: GridIndex) -> dict[Vertex, list[tuple]]:
    """Chords at each vertex: passage-to-passage transitions along every
    corridor, plus endpoint attachments into own-material corners."""
    chords: dict[Vertex, list[tuple]] = {}

    def vertex_of(p: Point) -> Vertex:
        return (grid.xi[p[0]], grid.yi[p[1]])

    for c in grid.corridors.values():
        if len(c.path) < 2:
            continue
        steps: list[tuple[Vertex, Vertex, EdgeKey, Passage]] = []
        for leg_idx, (p, q) in enumerate(c.legs()):
            eks = grid.edge_keys_on_leg(p, q)
            if (q[0], q[1]) < (p[0], p[1]):
                eks = list(reversed(eks))
            cur = vertex_of(p)
            for ek in eks:
                kind, i, j = ek
                ends = ((i, j), (i, j + 1)) if kind == "v" else ((i, j), (i + 1, j))
                nxt = ends[1] if ends[0] == cur else ends[0]
                steps.append((cur, nxt, ek, (c.id, leg_idx)))
                cur = nxt
        # transitions at interior vertices
        for k in range(len(steps) - 1):
            v = steps[k][1]
            a = ("pass", steps[k][2], steps[k][3])
            b = ("pass", steps[k + 1][2], steps[k + 1][3])
            chords.setdefault(v, []).append((a, b))
        # endpoint attachments: the pipe end fuses with own material around the
        # tip; a bare end on the domain boundary is flush against the side
        for v, atom in ((steps[0][0], ("pass", steps[0][2], steps[0][3])),
                        (steps[-1][1], ("pass", steps[-1][2], steps[-1][3]))):
            own = [(ci, cj) for (ci, cj), owner in grid.vertex_cells(*v)
                   if owner == c.owner]
            if own:
                for cell in own:
                    chords.setdefault(v, []).append((atom, ("corner", cell)))
            else:
                for (ci, cj), owner in grid.vertex_cells(*v):
                    if owner == OUTER:
                        chords.setdefault(v, []).append((atom, ("corner", (ci, cj))))
    return chords


# ---------------------------------------------------------------------------
# the router


def route_corridor(ws: Workspace, owner: int,
                   source_cells: set[Cell], target_cells: set[Cell],
                   allowed: Callable[[EdgeKey], bool],
                   target_side_x: Optional[tuple] = None):
    """Shortest non-crossing corridor from the source cells to the target
    cells (or to a domain side given as ('left'|'right', x-index range)).

    Returns (path points, slots per edge) or raises InternalInvariantError.
    """
    chords = corridor_chords(ws)
    cycles: dict[Vertex, VertexCycle] = {}

    def cycle(v: Vertex) -> VertexCycle:
        if v not in cycles:
            cycles[v] = VertexCycle(ws, v[0], v[1], chords)
        return cycles[v]

    def edge_len(ek: EdgeKey) -> Fraction:
        kind, i, j = ek
        return (ws.ys[j + 1] - ws.ys[j]) if kind == "v" else (ws.xs[i + 1] - ws.xs[i])

    def edge_ends(ek: EdgeKey) -> tuple[Vertex, Vertex]:
        kind, i, j = ek
        return ((i, j), (i, j + 1)) if kind == "v" else ((i, j), (i + 1, j))

    def incident_edges(v: Vertex):
        vi, vj = v
        if vi < ws.nx:
            yield ("h", vi, vj)
        if vj < ws.ny:
            yield ("v", vi, vj)
        if vi > 0:
            yield ("h", vi - 1, vj)
        if vj > 0:
            yield ("v", vi, vj - 1)

    # start states: leave a source cell corner onto an allowed edge
    heap: list = []
    counter = 0
    best: dict[tuple, Fraction] = {}
    parent: dict[tuple, tuple] = {}
    start_corners: dict[Vertex, list[Cell]] = {}
    for (ci, cj) in sorted(source_cells):
        for v in ((ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)):
            start_corners.setdefault(v, []).append((ci, cj))
    for v, corner_cells in sorted(start_corners.items()):
        cyc = cycle(v)
        for ek in incident_edges(v):
            if not allowed(ek):
                continue
            npass = len(ws.edge_passages.get(ek, []))
            for s in range(npass + 1):
                corner_cell = next((c for c in corner_cells
                                    if not cyc.crossing(("corner", c), ("slot", ek, s))), None)
                if corner_cell is None:
                    continue
                far = [e for e in edge_ends(ek) if e != v][0]
                state = (ek, s, far)
                d = edge_len(ek)
                if state not in best or d < best[state]:
                    best[state] = d
                    parent[state] = ("start", v, corner_cell)
                    counter += 1
                    heapq.heappush(heap, (d, counter, state))

    goal = None
    target_corners: dict[Vertex, list[Cell]] = {}
    for (ci, cj) in sorted(target_cells):
        for v in ((ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)):
            target_corners.setdefault(v, []).append((ci, cj))

    def side_target(v: Vertex):
        if target_side_x is None:
            return None
        _, xi_val = target_side_x
        if v[0] != xi_val:
            return None
        for cell, owner_ in ws.vertex_cells(*v):
            if owner_ == OUTER:
                return cell
        return None

    while heap:
        d, _, state = heapq.heappop(heap)
        if best.get(state) != d:
            continue
        ek, s, v = state
        cyc = cycle(v)
        # arrival at a target?
        hit = None
        for tc in target_corners.get(v, ()):
            if not cyc.crossing(("slot", ek, s), ("corner", tc)):
                hit = tc
                break
        if hit is None:
            sc = side_target(v)
            if sc is not None and not cyc.crossing(("slot", ek, s), ("corner", sc)):
                hit = sc
        if hit is not None:
            goal = (state, ("corner", hit))
            break
        for nk in incident_edges(v):
            if nk == ek or not allowed(nk):
                continue
            npass = len(ws.edge_passages.get(nk, []))
            for ns in range(npass + 1):
                if cyc.crossing(("slot", ek, s), ("slot", nk, ns)):
                    continue
                far = [e for e in edge_ends(nk) if e != v][0]
                nstate = (nk, ns, far)
                nd = d + edge_len(nk)
                if nstate not in best or nd < best[nstate]:
                    best[nstate] = nd
                    parent[nstate] = state
                    counter += 1
                    heapq.heappush(heap, (nd, counter, nstate))

    if goal is None:
        raise InternalInvariantError(
            f"no corridor route found for district {owner} "
            f"({len(source_cells)} source cells, {len(target_cells)} target cells)")

    # reconstruct
    state = goal[0]
    slots: dict[EdgeKey, int] = {}
    verts: list[Vertex] = []
    while True:
        prev = parent[state]
        ek, s, v = state
        slots[ek] = s
        verts.append(v)
        if isinstance(prev, tuple) and prev and prev[0] == "start":
            start_v = prev[1]
            verts.append(start_v)
            break
        state = prev
    verts.reverse()
    path = [(ws.xs[vi], ws.ys[vj]) for vi, vj in verts]
    reached = goal[1][1]
    return _simplify_path(path), slots, reached


def make_allowed(ws: Workspace, did: int, forbidden_side: Optional[str] = None,
                 excluded: frozenset = frozenset()):
    """Routable edges for a corridor of `did`: edges of the image graph
    (interfaces and strand-carrying edges) that are not interior to the
    district's own region, minus exclusions and the forbidden domain side."""

    def allowed(ek: EdgeKey) -> bool:
        if ek in excluded:
            return False
        kind, i, j = ek
        if forbidden_side == "bottom" and kind == "h" and j == 0:
            return False
        if forbidden_side == "top" and kind == "h" and j == ws.ny:
            return False
        if kind == "v" and i in (0, ws.nx):
            # corridors never run along the left/right sides: that would
            # break a district's side interval into pieces
            return False
        a, b = ws.edge_sides(ek)
        if a == did and b == did:
            return False
        if ws.edge_passages.get(ek):
            return True
        return a != b

    return allowed


def reconnect_district(ws: Workspace, did: int, forbidden_side: Optional[str] = None,
                       excluded: frozenset = frozenset()) -> list[Corridor]:
    """Connect the district's region components with successively-routed
    corridors (nearest component first, rooted at the upper-left component)."""
    comps = ws.components({did})
    if len(comps) <= 1:
        return []

    def comp_key(comp):
        return min((-j, i) for i, j in comp)

    comps = sorted(comps, key=comp_key)
    connected = set(comps[0])
    remaining = [set(c) for c in comps[1:]]
    allowed = make_allowed(ws, did, forbidden_side, excluded)
    added = []
    while remaining:
        targets = set().union(*remaining)
        path, slots, reached = route_corridor(ws, did, connected, targets, allowed)
        c = ws.add_corridor(did, path, slots)
        added.append(c)
        hit = [k for k, comp in enumerate(remaining) if reached in comp]
        if not hit:
            raise InternalInvariantError("reconnect reached an unknown component")
        connected |= remaining.pop(hit[0])
    return added
