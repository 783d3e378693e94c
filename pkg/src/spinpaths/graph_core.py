"""Finite simple graphs, the ghost extension and boundary sets.

Vertices are dense integers ``0..n-1``.  The ghost vertex of an extended
graph has id ``n`` and edge indices are laid out so that the original edges
come first (in the order of ``Graph.edges``) followed by one ghost edge per
original vertex, ``ghost_edge(x) == n_edges + x``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DuplicateEdge, GhostInSet, SelfLoop, VertexOutOfRange

Edge = tuple[int, int]


def canonical_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[Edge, ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def vertices(self) -> range:
        return range(self.n)

    def degree(self, x: int) -> int:
        return len(self.adjacency[x])

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def edge_index(self, u: int, v: int) -> int:
        return self._index[canonical_edge(u, v)]

    @property
    def _index(self) -> dict[Edge, int]:
        cache = self.__dict__.get("_index_cache")
        if cache is None:
            cache = {e: i for i, e in enumerate(self.edges)}
            object.__setattr__(self, "_index_cache", cache)
        return cache

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


def build_graph(edge_list: Iterable[Sequence[int]], n_vertices: int) -> Graph:
    """Validate an edge list and build an immutable simple graph.

    Edges are stored in canonical ``(min, max)`` form, in input order.
    """
    if n_vertices < 0:
        raise VertexOutOfRange(f"negative vertex count {n_vertices}")
    edges: list[Edge] = []
    seen: set[Edge] = set()
    adj: list[list[int]] = [[] for _ in range(n_vertices)]
    for pair in edge_list:
        u, v = (int(t) for t in pair)
        for t in (u, v):
            if not 0 <= t < n_vertices:
                raise VertexOutOfRange(f"vertex {t} not in 0..{n_vertices - 1}")
        if u == v:
            raise SelfLoop(f"self-loop at vertex {u}")
        e = canonical_edge(u, v)
        if e in seen:
            raise DuplicateEdge(f"edge {e} listed twice")
        seen.add(e)
        edges.append(e)
        adj[u].append(v)
        adj[v].append(u)
    return Graph(n_vertices, tuple(edges), tuple(tuple(sorted(a)) for a in adj))


@dataclass(frozen=True)
class ExtendedGraph:
    """A graph together with a ghost vertex joined to every original vertex."""

    base: Graph

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def ghost(self) -> int:
        return self.base.n

    @property
    def n_orig_edges(self) -> int:
        return len(self.base.edges)

    @property
    def n_edges(self) -> int:
        return len(self.base.edges) + self.base.n

    @property
    def edges(self) -> tuple[Edge, ...]:
        cache = self.__dict__.get("_edges_cache")
        if cache is None:
            cache = self.base.edges + tuple((x, self.ghost) for x in range(self.n))
            object.__setattr__(self, "_edges_cache", cache)
        return cache

    @property
    def ghost_edges(self) -> tuple[Edge, ...]:
        return self.edges[self.n_orig_edges:]

    def ghost_edge(self, x: int) -> int:
        return self.n_orig_edges + x

    def is_ghost_edge(self, e: int) -> bool:
        return e >= self.n_orig_edges

    def other(self, e: int, x: int) -> int:
        u, v = self.edges[e]
        return v if u == x else u

    def edge_index(self, u: int, v: int) -> int:
        if u == self.ghost:
            return self.ghost_edge(v)
        if v == self.ghost:
            return self.ghost_edge(u)
        return self.base.edge_index(u, v)

    def incident(self, x: int) -> tuple[int, ...]:
        """Edge indices touching ``x``; original edges first, then the ghost edge."""
        cache = self.__dict__.get("_incident_cache")
        if cache is None:
            inc: list[list[int]] = [[] for _ in range(self.n + 1)]
            for i, (u, v) in enumerate(self.edges):
                inc[u].append(i)
                inc[v].append(i)
            cache = tuple(tuple(a) for a in inc)
            object.__setattr__(self, "_incident_cache", cache)
        return cache[x]

    def edge_label(self, e: int) -> str:
        u, v = self.edges[e]
        return f"{u}-g" if v == self.ghost else f"{u}-{v}"

    def parse_edge_label(self, label: str) -> int:
        a, b = label.split("-")
        u = int(a)
        v = self.ghost if b == "g" else int(b)
        return self.edge_index(u, v)


def attach_ghost(g: Graph) -> ExtendedGraph:
    return ExtendedGraph(g)


def graph_distance(g: Graph, x: int, y: int) -> float:
    """Breadth-first distance; ``math.inf`` if ``y`` is unreachable."""
    for t in (x, y):
        if not 0 <= t < g.n:
            raise VertexOutOfRange(f"vertex {t} not in 0..{g.n - 1}")
    if x == y:
        return 0
    dist = {x: 0}
    queue = deque([x])
    while queue:
        u = queue.popleft()
        for w in g.adjacency[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                if w == y:
                    return dist[w]
                queue.append(w)
    return math.inf


@dataclass(frozen=True)
class BoundaryInfo:
    A: frozenset[int]
    E_A: frozenset[Edge]
    boundary_E_A: frozenset[Edge]
    Eg_A: frozenset[Edge]
    ext_boundary: frozenset[int]
    int_boundary: frozenset[int]


def boundary_sets(g: ExtendedGraph, A: Iterable[int]) -> BoundaryInfo:
    """Edge and vertex boundaries of a set of original vertices.

    The complement is taken inside the original vertex set, so ghost edges
    never cross the boundary.
    """
    A = frozenset(A)
    if g.ghost in A:
        raise GhostInSet("the ghost vertex cannot belong to a vertex set")
    for x in A:
        if not 0 <= x < g.n:
            raise VertexOutOfRange(f"vertex {x} not in 0..{g.n - 1}")
    E_A, crossing, ext, inner = set(), set(), set(), set()
    for u, v in g.base.edges:
        if u in A or v in A:
            E_A.add((u, v))
        if (u in A) != (v in A):
            crossing.add((u, v))
            inside, outside = (u, v) if u in A else (v, u)
            ext.add(outside)
            inner.add(inside)
    Eg = frozenset((x, g.ghost) for x in A)
    return BoundaryInfo(A, frozenset(E_A) | Eg, frozenset(crossing), Eg,
                        frozenset(ext), frozenset(inner))


# generators

def path_graph(L: int) -> Graph:
    return build_graph([(i, i + 1) for i in range(L - 1)], L)


def cycle_graph(L: int) -> Graph:
    if L < 3:
        raise ValueError("a simple cycle needs at least 3 vertices")
    return build_graph([(i, (i + 1) % L) for i in range(L)], L)


def grid_graph(L: int, W: int) -> Graph:
    """``L x W`` square grid; vertex ``(i, j)`` has id ``i * W + j``."""
    edges = []
    for i in range(L):
        for j in range(W):
            v = i * W + j
            if j + 1 < W:
                edges.append((v, v + 1))
            if i + 1 < L:
                edges.append((v, v + W))
    return build_graph(edges, L * W)


def tree_graph(degree: int, depth: int) -> Graph:
    """Tree in which every non-leaf vertex has ``degree`` neighbours.

    The root has ``degree`` children and every other internal vertex has
    ``degree - 1``; leaves sit at distance ``depth`` from the root.
    """
    if degree < 1 or depth < 0:
        raise ValueError("degree >= 1 and depth >= 0 required")
    edges: list[Edge] = []
    frontier = [0]
    n = 1
    for level in range(depth):
        nxt = []
        for v in frontier:
            for _ in range(degree if level == 0 else degree - 1):
                edges.append((v, n))
                nxt.append(n)
                n += 1
        frontier = nxt
    return build_graph(edges, n)


GENERATORS = {
    "path": path_graph,
    "cycle": cycle_graph,
    "grid": grid_graph,
    "tree": tree_graph,
}


def make_graph(name: str, *params: int) -> Graph:
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    return gen(*params)


def graph_from_json(obj: dict | str | Path) -> Graph:
    if isinstance(obj, (str, Path)):
        obj = json.loads(Path(obj).read_text())
    return build_graph(obj["edges"], int(obj["n"]))
