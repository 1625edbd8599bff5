"""Corridor graphs: the weighted tree encoding of a weak polygon.

Nodes are the simple-polygon pieces of the union region (weights are exact
areas), edges are the corridors connecting them.  The rotation order at a
node is the counterclockwise order of corridor attachments along the piece's
boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import InternalInvariantError, NotConnected
from .geometry import point_on_segment, ring_area
from .model import WeakPolygonView

NodeId = int
EdgeId = int


@dataclass
class CorridorGraph:
    weights: dict[NodeId, Fraction]
    edges: dict[EdgeId, tuple[NodeId, NodeId]]
    rotation: dict[NodeId, list[EdgeId]]
    top_node: NodeId
    payload: dict[EdgeId, object] = field(default_factory=dict)

    def nodes(self) -> list[NodeId]:
        return sorted(self.weights)

    def total_weight(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    def neighbors(self, v: NodeId) -> list[tuple[NodeId, EdgeId]]:
        out = []
        for eid in self.rotation.get(v, []):
            a, b = self.edges[eid]
            out.append((b if a == v else a, eid))
        return out

    def assert_tree(self):
        n = len(self.weights)
        if len(self.edges) != n - 1:
            raise InternalInvariantError(
                f"corridor graph is not a tree: {n} nodes, {len(self.edges)} edges")
        seen = set()
        stack = [self.nodes()[0]] if n else []
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            for u, _ in self.neighbors(v):
                if u not in seen:
                    stack.append(u)
        if len(seen) != n:
            raise NotConnected("corridor graph is disconnected")

    def subtree_sizes(self, root: NodeId):
        """(vertex count, weight) of each subtree when rooted at `root`."""
        order = []
        parent = {root: None}
        stack = [root]
        while stack:
            v = stack.pop()
            order.append(v)
            for u, _ in self.neighbors(v):
                if u not in parent:
                    parent[u] = v
                    stack.append(u)
        counts = {v: 1 for v in order}
        weights = {v: self.weights[v] for v in order}
        for v in reversed(order):
            p = parent[v]
            if p is not None:
                counts[p] += counts[v]
                weights[p] += weights[v]
        return parent, counts, weights


@dataclass
class CentroidSplit:
    centroid: NodeId
    nodes: frozenset[NodeId]   # nodes of the contiguous subtree T*
    edges: frozenset[EdgeId]   # edges of T* (including centroid-child edges)


def build_corridor_graph(view: WeakPolygonView) -> CorridorGraph:
    """Tree of the union's faces and corridors; raises NotConnected when the
    weak polygon is disconnected."""
    weights = {k: w for k, w in enumerate(view.face_weights)}
    edges: dict[EdgeId, tuple[NodeId, NodeId]] = {}
    payload: dict[EdgeId, object] = {}
    eid = 0
    extra_node = len(weights)
    for corr in view.corridors:
        faces = list(corr.faces)
        if len(faces) < 2:
            continue  # appendage; carries no connectivity between pieces
        if len(faces) == 2:
            edges[eid] = (faces[0], faces[1])
            payload[eid] = corr
            eid += 1
        else:
            # branching strand bundle: zero-weight junction node
            weights[extra_node] = Fraction(0)
            for f in faces:
                edges[eid] = (extra_node, f)
                payload[eid] = corr
                eid += 1
            extra_node += 1
    rotation = _rotations(view, weights, edges, payload)
    top_node = 0
    best = None
    for k, cells in enumerate(view.face_cells):
        key = min((-j, i) for i, j in cells)
        if best is None or key < best:
            best = key
            top_node = k
    g = CorridorGraph(weights, edges, rotation, top_node, payload)
    g.assert_tree()
    return g


def _attach_point(view: WeakPolygonView, corr, face_idx: int):
    """Smallest vertex of the strand component touching the face; None when
    the component has no vertex contact with it."""
    board = view.board
    cells = view.face_cells[face_idx]

    def verts(ek):
        kind, i, j = ek
        return ((i, j), (i, j + 1)) if kind == "v" else ((i, j), (i + 1, j))

    cand = []
    for ek in sorted(corr.edges):
        for vi, vj in verts(ek):
            for (ci, cj), _ in board.vertex_cells(vi, vj):
                if (ci, cj) in cells:
                    cand.append((vi, vj))
    if not cand:
        return None
    vi, vj = min(cand)
    return (board.xs[vi], board.ys[vj])


def _rotations(view: WeakPolygonView, weights, edges,
               payload) -> dict[NodeId, list[EdgeId]]:
    rotation: dict[NodeId, list[EdgeId]] = {v: [] for v in weights}
    for v in weights:
        incident = [(eid, uv) for eid, uv in edges.items() if v in uv]
        if not incident:
            continue
        if v >= len(view.face_cells):
            # synthetic junction node: order by edge id
            rotation[v] = sorted(eid for eid, _ in incident)
            continue
        ring = max(view.face_regions[v].boundary_loops(), key=ring_area)
        n = len(ring)

        def boundary_pos(p):
            for k in range(n):
                a, b = ring[k], ring[(k + 1) % n]
                if point_on_segment(p, a, b):
                    return (k, abs(p[0] - a[0]) + abs(p[1] - a[1]))
            return (n, 0)

        keyed = []
        for eid, uv in incident:
            av = _attach_point(view, payload[eid], v)
            pos = boundary_pos(av) if av is not None else (n, eid)
            keyed.append((pos, eid))
        keyed.sort()
        rotation[v] = [eid for _, eid in keyed]
    return rotation


def find_centroid(t: CorridorGraph) -> NodeId:
    """Node whose removal leaves components of weight at most W/2; smallest
    node id on ties."""
    nodes = t.nodes()
    if not nodes:
        raise ValueError("empty corridor graph")
    W = t.total_weight()
    root = nodes[0]
    parent, counts, sub_w = t.subtree_sizes(root)
    best = None
    for v in nodes:
        worst = W - sub_w[v]
        for u, _ in t.neighbors(v):
            if parent.get(u) == v:
                worst = max(worst, sub_w[u])
        if worst * 2 <= W:
            if best is None or v < best:
                best = v
    if best is None:
        raise InternalInvariantError("no centroid found")
    return best


def contiguous_subtree(t: CorridorGraph, c: NodeId) -> CentroidSplit:
    """Lemma-style contiguous subtree at the centroid: c plus a consecutive
    run of its children (in rotation order) holding at least a third of the
    vertices, of weight at most W/2 + w(c)."""
    W = t.total_weight()
    parent, counts, sub_w = t.subtree_sizes(c)
    rot = t.rotation.get(c, [])
    if not rot:
        return CentroidSplit(c, frozenset([c]), frozenset())
    # start scanning at the child after the edge toward the top node
    start = 0
    if c != t.top_node:
        toward = None
        cur = t.top_node
        while parent[cur] != c:
            cur = parent[cur]
        for k, eid in enumerate(rot):
            a, b = t.edges[eid]
            if cur in (a, b):
                toward = k
                break
        start = (toward + 1) % len(rot) if toward is not None else 0
    order = rot[start:] + rot[:start]
    forests: list[list[EdgeId]] = [[eid] for eid in order]

    def forest_weight(f):
        total = Fraction(0)
        for eid in f:
            a, b = t.edges[eid]
            child = b if a == c else a
            total += sub_w[child]
        return total

    changed = True
    while changed and len(forests) > 1:
        changed = False
        for i in range(len(forests)):
            j = (i + 1) % len(forests)
            if j == i:
                break
            if forest_weight(forests[i]) + forest_weight(forests[j]) <= W / 2:
                if i < j:
                    forests[i] = forests[i] + forests[j]
                    del forests[j]
                else:
                    forests[j] = forests[i] + forests[j]
                    del forests[i]
                changed = True
                break
    if len(forests) > 3:
        raise InternalInvariantError(
            f"contiguous merge left {len(forests)} forests")

    def forest_vertices(f):
        total = 0
        for eid in f:
            a, b = t.edges[eid]
            child = b if a == c else a
            total += counts[child]
        return total

    best = max(forests, key=forest_vertices)
    nodes = {c}
    for eid in best:
        a, b = t.edges[eid]
        child = b if a == c else a
        stack = [child]
        while stack:
            v = stack.pop()
            if v in nodes:
                continue
            nodes.add(v)
            for u, _ in t.neighbors(v):
                if u != c and u not in nodes:
                    stack.append(u)
    edge_ids = {eid for eid, (a, b) in t.edges.items() if a in nodes and b in nodes}
    return CentroidSplit(c, frozenset(nodes), frozenset(edge_ids))
