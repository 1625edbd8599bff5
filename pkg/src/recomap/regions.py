"""Rectilinear regions in slab normal form.

A region is stored as a tuple of rows (y0, y1, intervals); rows are disjoint,
sorted bottom-up, intervals are merged and sorted, and vertically adjacent
rows with identical intervals are fused.  The normal form is canonical, so
region equality is tuple equality.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .geometry import Frac, Point, frac, is_rectilinear, ring_area

Interval = tuple[Fraction, Fraction]
Row = tuple[Fraction, Fraction, tuple[Interval, ...]]


def _merge_intervals(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    ivs = sorted((a, b) for a, b in intervals if a < b)
    out: list[list[Fraction]] = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


def _subtract_intervals(base: Sequence[Interval], minus: Sequence[Interval]) -> tuple[Interval, ...]:
    out: list[Interval] = []
    mi = 0
    for a, b in base:
        cur = a
        for ma, mb in minus:
            if mb <= cur:
                continue
            if ma >= b:
                break
            if ma > cur:
                out.append((cur, min(ma, b)))
            cur = max(cur, mb)
            if cur >= b:
                break
        if cur < b:
            out.append((cur, b))
    return tuple(out)


def _intersect_intervals(one: Sequence[Interval], two: Sequence[Interval]) -> tuple[Interval, ...]:
    out: list[Interval] = []
    i = j = 0
    while i < len(one) and j < len(two):
        a = max(one[i][0], two[j][0])
        b = min(one[i][1], two[j][1])
        if a < b:
            out.append((a, b))
        if one[i][1] < two[j][1]:
            i += 1
        else:
            j += 1
    return tuple(out)


class RectRegion:
    """Immutable rectilinear point set, canonical slab form."""

    __slots__ = ("rows",)

    def __init__(self, rows: Iterable[Row]):
        object.__setattr__(self, "rows", self._normalize(rows))

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("RectRegion is immutable")

    @staticmethod
    def _normalize(rows: Iterable[Row]) -> tuple[Row, ...]:
        # split at every y break, merge intervals per slab, then refuse slabs
        raw = [(frac(y0), frac(y1), tuple((frac(a), frac(b)) for a, b in ivs))
               for y0, y1, ivs in rows if y0 < y1]
        raw = [(y0, y1, ivs) for y0, y1, ivs in raw if any(a < b for a, b in ivs)]
        if not raw:
            return ()
        starts: dict[Fraction, list[int]] = {}
        ends: dict[Fraction, list[int]] = {}
        for idx, (y0, y1, _) in enumerate(raw):
            starts.setdefault(y0, []).append(idx)
            ends.setdefault(y1, []).append(idx)
        breaks = sorted(set(starts) | set(ends))
        active: set[int] = set()
        merged: list[list] = []
        for i in range(len(breaks) - 1):
            y0, y1 = breaks[i], breaks[i + 1]
            active |= set(starts.get(y0, ()))
            active -= set(ends.get(y0, ()))
            if not active:
                continue
            ivs = _merge_intervals(iv for idx in active for iv in raw[idx][2])
            if not ivs:
                continue
            if merged and merged[-1][1] == y0 and merged[-1][2] == ivs:
                merged[-1][1] = y1
            else:
                merged.append([y0, y1, ivs])
        return tuple((y0, y1, ivs) for y0, y1, ivs in merged)

    # -- constructors -------------------------------------------------------

    @classmethod
    def empty(cls) -> "RectRegion":
        return cls(())

    @classmethod
    def from_rect(cls, x0, x1, y0, y1) -> "RectRegion":
        return cls([(frac(y0), frac(y1), ((frac(x0), frac(x1)),))])

    @classmethod
    def from_rects(cls, rects: Iterable[tuple]) -> "RectRegion":
        return cls([(frac(y0), frac(y1), ((frac(x0), frac(x1)),)) for x0, x1, y0, y1 in rects])

    @classmethod
    def from_rings(cls, rings: Iterable[Sequence[Point]]) -> "RectRegion":
        """Even-odd fill of rectilinear rings (outer rings plus holes)."""
        verticals: list[tuple[Fraction, Fraction, Fraction]] = []  # (x, ylo, yhi)
        ys: set[Fraction] = set()
        for ring in rings:
            if not is_rectilinear(ring):
                raise ValueError("from_rings requires rectilinear rings")
            n = len(ring)
            for i in range(n):
                (x1, y1), (x2, y2) = ring[i], ring[(i + 1) % n]
                ys.update((frac(y1), frac(y2)))
                if x1 == x2 and y1 != y2:
                    verticals.append((frac(x1), min(frac(y1), frac(y2)), max(frac(y1), frac(y2))))
        breaks = sorted(ys)
        rows: list[Row] = []
        for i in range(len(breaks) - 1):
            y0, y1 = breaks[i], breaks[i + 1]
            xs = sorted(x for x, lo, hi in verticals if lo <= y0 and hi >= y1)
            ivs = [(xs[k], xs[k + 1]) for k in range(0, len(xs) - 1, 2)]
            if ivs:
                rows.append((y0, y1, tuple(ivs)))
        return cls(rows)

    # -- basic queries ------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, RectRegion) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"RectRegion({len(self.rows)} rows, area={self.area()})"

    def area(self) -> Fraction:
        total = Fraction(0)
        for y0, y1, ivs in self.rows:
            total += (y1 - y0) * sum((b - a for a, b in ivs), Fraction(0))
        return total

    def bbox(self):
        if not self.rows:
            return None
        x0 = min(ivs[0][0] for _, _, ivs in self.rows)
        x1 = max(ivs[-1][1] for _, _, ivs in self.rows)
        return (x0, x1, self.rows[0][0], self.rows[-1][1])

    def contains_point(self, p: Point) -> bool:
        """True if p is in the closed region."""
        x, y = frac(p[0]), frac(p[1])
        for y0, y1, ivs in self.rows:
            if y0 <= y <= y1:
                if any(a <= x <= b for a, b in ivs):
                    return True
        return False

    def contains_interior_point(self, p: Point) -> bool:
        x, y = frac(p[0]), frac(p[1])
        for y0, y1, ivs in self.rows:
            if y0 < y < y1:
                return any(a < x < b for a, b in ivs)
        return False

    def rects(self) -> list[tuple[Fraction, Fraction, Fraction, Fraction]]:
        out = []
        for y0, y1, ivs in self.rows:
            for a, b in ivs:
                out.append((a, b, y0, y1))
        return out

    # -- set operations -----------------------------------------------------

    def union(self, other: "RectRegion") -> "RectRegion":
        return RectRegion(self.rows + other.rows)

    def _aligned(self, other: "RectRegion"):
        from bisect import bisect_left

        breaks = sorted({y for r in self.rows for y in (r[0], r[1])}
                        | {y for r in other.rows for y in (r[0], r[1])})

        def slabify(region):
            out = {}
            for y0, y1, ivs in region.rows:
                i = bisect_left(breaks, y0)
                while breaks[i] < y1:
                    out[(breaks[i], breaks[i + 1])] = ivs
                    i += 1
            return out

        return breaks, slabify(self), slabify(other)

    def subtract(self, other: "RectRegion") -> "RectRegion":
        if not other.rows or not self.rows:
            return self
        breaks, mine, theirs = self._aligned(other)
        rows = []
        for key, ivs in mine.items():
            rows.append((key[0], key[1], _subtract_intervals(ivs, theirs.get(key, ()))))
        return RectRegion(rows)

    def intersect(self, other: "RectRegion") -> "RectRegion":
        if not other.rows or not self.rows:
            return RectRegion.empty()
        breaks, mine, theirs = self._aligned(other)
        rows = []
        for key, ivs in mine.items():
            if key in theirs:
                rows.append((key[0], key[1], _intersect_intervals(ivs, theirs[key])))
        return RectRegion(rows)

    def clip_y(self, y, keep_above: bool) -> "RectRegion":
        y = frac(y)
        rows = []
        for y0, y1, ivs in self.rows:
            if keep_above:
                if y1 <= y:
                    continue
                rows.append((max(y0, y), y1, ivs))
            else:
                if y0 >= y:
                    continue
                rows.append((y0, min(y1, y), ivs))
        return RectRegion(rows)

    def clip_x(self, x, keep_east: bool) -> "RectRegion":
        x = frac(x)
        rows = []
        for y0, y1, ivs in self.rows:
            new = []
            for a, b in ivs:
                if keep_east:
                    if b > x:
                        new.append((max(a, x), b))
                else:
                    if a < x:
                        new.append((a, min(b, x)))
            rows.append((y0, y1, tuple(new)))
        return RectRegion(rows)

    # -- area profile / waterline -------------------------------------------

    def area_above(self, y) -> Fraction:
        y = frac(y)
        total = Fraction(0)
        for y0, y1, ivs in self.rows:
            if y1 <= y:
                continue
            w = sum((b - a for a, b in ivs), Fraction(0))
            total += (y1 - max(y0, y)) * w
        return total

    def waterline(self, target_above) -> Fraction:
        """Lowest y such that the area of the region above y equals
        target_above, computed exactly from the piecewise-linear profile."""
        target_above = frac(target_above)
        total = self.area()
        if not (0 <= target_above <= total):
            raise ValueError("target_above outside [0, area]")
        needed_below = total - target_above
        if needed_below == 0:
            return self.rows[0][0] if self.rows else Fraction(0)
        acc = Fraction(0)
        for y0, y1, ivs in self.rows:
            w = sum((b - a for a, b in ivs), Fraction(0))
            slab = (y1 - y0) * w
            if acc + slab < needed_below:
                acc += slab
                continue
            return y0 + (needed_below - acc) / w
        return self.rows[-1][1]

    # -- boundary extraction -------------------------------------------------

    def boundary_loops(self) -> list[list[Point]]:
        """All boundary cycles with interior on the left: counterclockwise
        outer rings (positive area) and clockwise hole rings (negative)."""
        E, N, W, S = 0, 1, 2, 3
        step = {E: (1, 0), N: (0, 1), W: (-1, 0), S: (0, -1)}
        # directed edges keyed by start point: interior on the left
        out_edges: dict[Point, list[tuple[Point, int]]] = {}

        def add(a: Point, b: Point, d: int):
            out_edges.setdefault(a, []).append((b, d))

        for y0, y1, ivs in self.rows:
            for a, b in ivs:
                add((a, y1), (a, y0), S)  # west side, interior east
                add((b, y0), (b, y1), N)  # east side, interior west
        # horizontal boundaries between consecutive slabs
        rows = self.rows
        for i in range(len(rows) + 1):
            below = rows[i - 1] if i > 0 else None
            above = rows[i] if i < len(rows) else None
            if below and above and below[1] != above[0]:
                # gap between slabs: both sides exposed
                self._emit_horiz(add, below[2], (), below[1])
                self._emit_horiz(add, (), above[2], above[0])
                continue
            y = below[1] if below else (above[0] if above else None)
            if y is None:
                continue
            self._emit_horiz(add, below[2] if below else (), above[2] if above else (), y)

        loops: list[list[Point]] = []
        used: set[tuple[Point, Point]] = set()
        pref = {E: (N, E, S, W), N: (W, N, E, S), W: (S, W, N, E), S: (E, S, W, N)}
        for start in sorted(out_edges):
            for first in sorted(out_edges[start]):
                if (start, first[0]) in used:
                    continue
                loop = [start]
                cur, d = first
                used.add((start, cur))
                guard = 0
                while cur != start:
                    loop.append(cur)
                    nxts = out_edges.get(cur, [])
                    chosen = None
                    for wanted in pref[d]:
                        for b, dd in sorted(nxts):
                            if dd == wanted and (cur, b) not in used:
                                chosen = (b, dd)
                                break
                        if chosen:
                            break
                    if chosen is None:
                        raise AssertionError("boundary stitching dead end")
                    used.add((cur, chosen[0]))
                    cur, d = chosen
                    guard += 1
                    if guard > 4 * len(used) + 10:
                        raise AssertionError("boundary stitching loop")
                loops.append(_collapse_collinear(loop))
        return loops

    @staticmethod
    def _emit_horiz(add, below_ivs, above_ivs, y):
        E, W = 0, 2
        top = _subtract_intervals(below_ivs, above_ivs)  # interior below
        bot = _subtract_intervals(above_ivs, below_ivs)  # interior above
        for a, b in top:
            add((b, y), (a, y), W)
        for a, b in bot:
            add((a, y), (b, y), E)

    def complexity(self) -> int:
        return sum(len(loop) for loop in self.boundary_loops())


def _collapse_collinear(loop: list[Point]) -> list[Point]:
    out: list[Point] = []
    n = len(loop)
    for i in range(n):
        prev, cur, nxt = loop[i - 1], loop[i], loop[(i + 1) % n]
        if (prev[0] == cur[0] == nxt[0]) or (prev[1] == cur[1] == nxt[1]):
            continue
        out.append(cur)
    return out


def region_components(region: RectRegion) -> list[RectRegion]:
    """Connected components under positive-length edge adjacency."""
    rows = region.rows
    parent: dict[tuple[int, int], tuple[int, int]] = {}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    def link(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for i, (_, _, ivs) in enumerate(rows):
        for j in range(len(ivs)):
            parent[(i, j)] = (i, j)
    for i in range(len(rows) - 1):
        y0a, y1a, iva = rows[i]
        y0b, y1b, ivb = rows[i + 1]
        if y1a != y0b:
            continue
        for j, (a, b) in enumerate(iva):
            for k, (c, d) in enumerate(ivb):
                if min(b, d) > max(a, c):
                    link((i, j), (i + 1, k))
    groups: dict[tuple[int, int], list[Row]] = {}
    for i, (y0, y1, ivs) in enumerate(rows):
        for j, iv in enumerate(ivs):
            groups.setdefault(find((i, j)), []).append((y0, y1, (iv,)))
    return [RectRegion(rws) for _, rws in sorted(groups.items())]


def region_to_simple_faces(region: RectRegion) -> list[list[Point]]:
    """Decompose a region into interior-disjoint strictly simple CCW rings.

    Components with holes are split along vertical lines through each hole.
    """
    faces: list[list[Point]] = []
    stack = region_components(region)
    while stack:
        comp = stack.pop()
        loops = comp.boundary_loops()
        holes = [lp for lp in loops if ring_area(lp) < 0]
        if not holes:
            outers = [lp for lp in loops if ring_area(lp) > 0]
            faces.extend(outers)
            continue
        hole = holes[0]
        xs = sorted({p[0] for p in hole})
        x_cut = None
        inner = sorted({x for x in xs if xs[0] < x < xs[-1]})
        x_cut = inner[0] if inner else (xs[0] + xs[-1]) / 2
        left = comp.clip_x(x_cut, keep_east=False)
        right = comp.clip_x(x_cut, keep_east=True)
        stack.extend(region_components(left))
        stack.extend(region_components(right))
    faces.sort(key=lambda r: (min(p[1] for p in r), min(p[0] for p in r)))
    return faces
