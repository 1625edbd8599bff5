"""Exact rational 2D primitives: points, rings, areas, halfplane clips, boundary paths.

All coordinates are `fractions.Fraction`.  Nothing in this module ever rounds;
comparisons of non-rectilinear arc lengths (sums of square roots) fall back to
high-precision evaluation via mpmath.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .errors import PointNotOnBoundary

Frac = Fraction
Point = tuple[Fraction, Fraction]
Ring = list  # list[Point], counterclockwise, implicitly closed


# ---------------------------------------------------------------------------
# rationals

def frac(value) -> Fraction:
    """Coerce ints, Fractions and strings ("p/q" or exact decimals) to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)  # handles "p/q", "3", "0.25" exactly
    if isinstance(value, float):
        raise TypeError("floats are not accepted in exact mode; pass a string")
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_frac(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def pt(x, y) -> Point:
    return (frac(x), frac(y))


# ---------------------------------------------------------------------------
# rings

def ring_area(ring: Sequence[Point]) -> Fraction:
    """Signed shoelace area; positive for counterclockwise rings.

    Weakly simple rings are fine: corridor spurs traversed forward-and-back
    cancel exactly.  Degenerate rings return 0.
    """
    if len(ring) < 3:
        return Fraction(0)
    total = Fraction(0)
    n = len(ring)
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total / 2


def is_rectilinear(ring: Sequence[Point]) -> bool:
    n = len(ring)
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        if x1 != x2 and y1 != y2:
            return False
    return True


def point_on_segment(p: Point, a: Point, b: Point) -> bool:
    """Exact test: p lies on the closed segment ab."""
    (px, py), (ax, ay), (bx, by) = p, a, b
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if cross != 0:
        return False
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def segments_properly_intersect(a: Point, b: Point, c: Point, d: Point) -> bool:
    """True if open segments ab and cd cross at a single interior point."""

    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return (v > 0) - (v < 0)

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def ring_is_simple(ring: Sequence[Point]) -> bool:
    """Exact O(n^2) simplicity test: distinct vertices, no edge crossings or
    non-adjacent touches."""
    n = len(ring)
    if n < 3:
        return False
    if len({tuple(p) for p in ring}) != n:
        return False
    edges = [(ring[i], ring[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        a, b = edges[i]
        if a == b:
            return False
        for j in range(i + 1, n):
            c, d = edges[j]
            if j == i + 1 or (i == 0 and j == n - 1):
                # adjacent edges share exactly one endpoint; forbid overlap
                shared = b if j == i + 1 else a
                other1 = a if j == i + 1 else b
                other2 = d if j == i + 1 else c
                if point_on_segment(other2, a, b) and other2 != shared:
                    return False
                if point_on_segment(other1, c, d) and other1 != shared:
                    return False
                continue
            if segments_properly_intersect(a, b, c, d):
                return False
            for p, (u, v) in ((c, (a, b)), (d, (a, b)), (a, (c, d)), (b, (c, d))):
                if point_on_segment(p, u, v):
                    return False
    return True


# ---------------------------------------------------------------------------
# horizontal halfplane clipping


def _interp_x(a: Point, b: Point, y: Fraction) -> Fraction:
    """x-coordinate where segment ab crosses the horizontal line at y."""
    (ax, ay), (bx, by) = a, b
    return ax + (bx - ax) * (y - ay) / (by - ay)


def clip_ring_horizontal(ring: Sequence[Point], y: Fraction, side: str) -> list[list[Point]]:
    """Clip a simple (or weakly simple) ring against a closed horizontal
    halfplane and return the connected components as counterclockwise rings.

    side is "above" (keep y >= cut) or "below".  A vertex exactly on the line
    belongs to the chosen closed halfplane; an edge lying on the line belongs
    to the side of its adjacent interior (for a counterclockwise ring that is
    above for eastward edges, below for westward ones).  Zero-area leftovers
    are dropped; an empty list means the ring lies strictly on the other side.
    """
    y = frac(y)
    if side not in ("above", "below"):
        raise ValueError("side must be 'above' or 'below'")
    ring = [(frac(px), frac(py)) for px, py in ring]

    if side == "below":
        flipped = [(x, -py) for x, py in ring]
        flipped.reverse()  # keep counterclockwise orientation
        comps = clip_ring_horizontal(flipped, -y, "above")
        out = []
        for comp in comps:
            comp = [(x, -py) for x, py in comp]
            comp.reverse()
            out.append(comp)
        return out

    # insert crossing points so that no edge crosses the line
    pts: list[Point] = []
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        pts.append(a)
        if (a[1] - y) * (b[1] - y) < 0:
            pts.append((_interp_x(a, b, y), y))
    n = len(pts)

    above = [p[1] >= y for p in pts]
    if all(above):
        strictly = any(p[1] > y for p in pts)
        return [list(ring)] if strictly else []
    if not any(p[1] > y for p in pts):
        return []

    # an edge is kept if it pokes above the line, or lies on the line with its
    # interior above (eastward for a counterclockwise ring)
    def kept(i: int) -> bool:
        a, b = pts[i], pts[(i + 1) % n]
        if a[1] > y or b[1] > y:
            return True
        if a[1] == y and b[1] == y:
            return b[0] > a[0]
        return False

    kept_edges = [kept(i) for i in range(n)]
    # maximal runs of kept edges -> open chains with endpoints on the line
    chains: list[list[Point]] = []
    i = 0
    while i < n and kept_edges[i]:
        i += 1
    if i == n:  # no break found although some part is below: degenerate
        return [list(ring)]
    start = i
    chain: list[Point] = []
    for k in range(n):
        idx = (start + 1 + k) % n
        if kept_edges[idx]:
            if not chain:
                chain = [pts[idx]]
            chain.append(pts[(idx + 1) % n])
        else:
            if chain:
                chains.append(chain)
                chain = []
    if chain:
        chains.append(chain)

    # stitch chains into closed components along the cut line: from the end of
    # a chain the region boundary continues eastward to the next chain start
    starts: list[tuple[Fraction, int]] = []
    for ci, ch in enumerate(chains):
        if ch[0][1] != y or ch[-1][1] != y:
            raise AssertionError("clip chain endpoint off the cut line")
        starts.append((ch[0][0], ci))
    starts.sort(key=lambda t: t[0])

    def next_start(x: Fraction, exclude_used: set) -> int:
        for sx, ci in starts:
            if ci in exclude_used:
                continue
            if sx >= x:
                return ci
        raise AssertionError("clip stitching failed: no chain start east of an exit")

    used: set[int] = set()
    components: list[list[Point]] = []
    for ci in range(len(chains)):
        if ci in used:
            continue
        comp: list[Point] = []
        cur = ci
        while True:
            used.add(cur)
            comp.extend(chains[cur] if not comp else chains[cur][0:])
            nxt = next_start(chains[cur][-1][0], used - {ci})
            if nxt == ci or nxt in used:
                break
            cur = nxt
        # drop consecutive duplicates and the closing repeat
        cleaned: list[Point] = []
        for p in comp:
            if not cleaned or cleaned[-1] != p:
                cleaned.append(p)
        if len(cleaned) > 1 and cleaned[0] == cleaned[-1]:
            cleaned.pop()
        if len(cleaned) >= 3 and ring_area(cleaned) > 0:
            components.append(cleaned)
    return components


# ---------------------------------------------------------------------------
# boundary paths


def _locate(ring: Sequence[Point], p: Point) -> tuple[int, bool]:
    """Return (index, at_vertex): position of p on the ring boundary.

    index is the vertex index when at_vertex, else the edge index such that p
    lies strictly inside edge (index, index+1).
    """
    n = len(ring)
    for i, v in enumerate(ring):
        if tuple(v) == tuple(p):
            return i, True
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        if point_on_segment(p, a, b):
            return i, False
    raise PointNotOnBoundary(f"{p} is not on the ring boundary")


def _arc_length_sq_terms(path: Sequence[Point]) -> list[tuple[Fraction, Fraction]]:
    terms = []
    for i in range(len(path) - 1):
        dx = path[i + 1][0] - path[i][0]
        dy = path[i + 1][1] - path[i][1]
        terms.append((dx * dx, dy * dy))
    return terms


def path_length_is_shorter(p1: Sequence[Point], p2: Sequence[Point]) -> int:
    """Compare Euclidean lengths: -1 if p1 shorter, 1 if p2 shorter, 0 tie.

    Rectilinear paths compare exactly; mixed paths use 60-digit evaluation.
    """

    def rect_len(path):
        total = Fraction(0)
        for i in range(len(path) - 1):
            dx = path[i + 1][0] - path[i][0]
            dy = path[i + 1][1] - path[i][1]
            if dx != 0 and dy != 0:
                return None
            total += abs(dx) + abs(dy)
        return total

    r1, r2 = rect_len(p1), rect_len(p2)
    if r1 is not None and r2 is not None:
        return (r1 > r2) - (r1 < r2)
    with mpmath.workdps(60):
        def num_len(path):
            s = mpmath.mpf(0)
            for i in range(len(path) - 1):
                dx = path[i + 1][0] - path[i][0]
                dy = path[i + 1][1] - path[i][1]
                dx2 = mpmath.mpf(dx.numerator) / mpmath.mpf(dx.denominator)
                dy2 = mpmath.mpf(dy.numerator) / mpmath.mpf(dy.denominator)
                s += mpmath.sqrt(dx2 * dx2 + dy2 * dy2)
            return s

        l1, l2 = num_len(p1), num_len(p2)
        if abs(l1 - l2) < mpmath.mpf(10) ** -50:
            return 0
        return -1 if l1 < l2 else 1


def boundary_path(ring: Sequence[Point], a: Point, b: Point) -> list[Point]:
    """Shorter boundary arc from a to b along the ring (both must lie on the
    boundary); ties are broken toward the counterclockwise arc."""
    a = (frac(a[0]), frac(a[1]))
    b = (frac(b[0]), frac(b[1]))
    ring = [(frac(px), frac(py)) for px, py in ring]
    if a == b:
        return [a]
    n = len(ring)
    ia, va = _locate(ring, a)
    ib, vb = _locate(ring, b)

    def walk(start_pt, start_idx, start_at_vertex, end_pt):
        """Counterclockwise walk from start to end collecting vertices."""
        path = [start_pt]
        idx = (start_idx + 1) % n  # first full vertex after the start point
        for _ in range(n + 1):
            prev = path[-1]
            edge_a = path[-1]
            edge_b = ring[idx]
            if point_on_segment(end_pt, edge_a, edge_b) and end_pt != edge_a:
                path.append(end_pt)
                return path
            if edge_b != prev:
                path.append(edge_b)
            idx = (idx + 1) % n
        raise AssertionError("boundary walk failed to reach endpoint")

    ccw = walk(a, ia, va, b)
    cw_rev = walk(b, ib, vb, a)
    cw = list(reversed(cw_rev))
    cmp = path_length_is_shorter(ccw, cw)
    return ccw if cmp <= 0 else cw


def polyline_length_rectilinear(path: Sequence[Point]) -> Fraction:
    total = Fraction(0)
    for i in range(len(path) - 1):
        dx = abs(path[i + 1][0] - path[i][0])
        dy = abs(path[i + 1][1] - path[i][1])
        if dx != 0 and dy != 0:
            raise ValueError("path is not rectilinear")
        total += dx + dy
    return total
