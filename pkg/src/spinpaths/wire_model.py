"""Wire configurations: links, colours and per-vertex pairings.

A link is identified by ``(e, p)`` where ``e`` indexes an edge of the
extended graph and ``p`` (0-based internally, 1-based in JSON) its position
on that edge.  A link endpoint is ``(e, p, x)`` with ``x`` one of the two
vertices of ``e``.  Pairings are stored symmetrically: ``pairs[a] == b``
iff ``pairs[b] == a``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InvalidState, ParityViolation, PreconditionViolated
from .graph_core import ExtendedGraph

Link = tuple[int, int]
Endpoint = tuple[int, int, int]


@dataclass
class WireConfig:
    N: int
    m: list[int]
    c: list[list[int]]
    pairs: dict[Endpoint, Endpoint] = field(default_factory=dict)

    @classmethod
    def empty(cls, g: ExtendedGraph, N: int) -> "WireConfig":
        return cls(N, [0] * g.n_edges, [[] for _ in range(g.n_edges)], {})

    def copy(self) -> "WireConfig":
        return WireConfig(self.N, list(self.m), [list(c) for c in self.c], dict(self.pairs))

    def add_link(self, e: int, colour: int) -> Link:
        self.c[e].append(colour)
        self.m[e] += 1
        return (e, self.m[e] - 1)

    def pair(self, a: Link, b: Link, x: int) -> None:
        ea, eb = (a[0], a[1], x), (b[0], b[1], x)
        self.pairs[ea] = eb
        self.pairs[eb] = ea

    def colour(self, link: Link) -> int:
        return self.c[link[0]][link[1]]

    def links(self) -> Iterable[Link]:
        for e, me in enumerate(self.m):
            for p in range(me):
                yield (e, p)

    def key(self) -> tuple:
        """Hashable canonical form (labels kept, pairings as a set)."""
        pairs = tuple(sorted((a, b) for a, b in self.pairs.items() if a < b))
        return (tuple(self.m), tuple(tuple(c) for c in self.c), pairs)

    def to_json(self, g: ExtendedGraph) -> dict:
        def vert(x):
            return "g" if x == g.ghost else x

        m = {g.edge_label(e): me for e, me in enumerate(self.m) if me}
        c = {g.edge_label(e): list(self.c[e]) for e, me in enumerate(self.m) if me}
        pairings = [
            [[g.edge_label(a[0]), a[1] + 1, vert(a[2])], [g.edge_label(b[0]), b[1] + 1, vert(b[2])]]
            for a, b in sorted(self.pairs.items()) if a < b
        ]
        return {"N": self.N, "m": m, "c": c, "pairings": pairings}

    @classmethod
    def from_json(cls, g: ExtendedGraph, obj: dict) -> "WireConfig":
        w = cls.empty(g, int(obj["N"]))
        for label, me in obj["m"].items():
            e = g.parse_edge_label(label)
            cols = list(obj["c"][label])
            if len(cols) != me:
                raise InvalidState(f"edge {label}: {me} links but {len(cols)} colours")
            w.m[e] = int(me)
            w.c[e] = [int(t) for t in cols]
        for a, b in obj["pairings"]:
            ea = (g.parse_edge_label(a[0]), int(a[1]) - 1, g.ghost if a[2] == "g" else int(a[2]))
            eb = (g.parse_edge_label(b[0]), int(b[1]) - 1, g.ghost if b[2] == "g" else int(b[2]))
            w.pairs[ea] = eb
            w.pairs[eb] = ea
        check_structure(g, w)
        return w


def check_structure(g: ExtendedGraph, w: WireConfig) -> None:
    """Raise ``InvalidState`` unless ``w`` is a well-formed wire configuration."""
    if len(w.m) != g.n_edges or len(w.c) != g.n_edges:
        raise InvalidState("per-edge arrays do not match the extended graph")
    for e, me in enumerate(w.m):
        if me < 0 or len(w.c[e]) != me:
            raise InvalidState(f"edge {e}: inconsistent link count and colour list")
        if any(not 1 <= col <= w.N for col in w.c[e]):
            raise InvalidState(f"edge {e}: colour outside 1..{w.N}")
    for a, b in w.pairs.items():
        for (e, p, x) in (a, b):
            if not (0 <= e < g.n_edges and 0 <= p < w.m[e] and x in g.edges[e]):
                raise InvalidState(f"endpoint {(e, p, x)} does not exist")
        if w.pairs.get(b) != a:
            raise InvalidState(f"pairing {a} -> {b} is not symmetric")
        if a[2] != b[2]:
            raise InvalidState(f"pairing {a} -- {b} joins different vertices")
        if a[:2] == b[:2]:
            raise InvalidState(f"link {a[:2]} paired to itself")
        if w.c[a[0]][a[1]] != w.c[b[0]][b[1]]:
            raise InvalidState(f"pairing {a} -- {b} joins different colours")


@dataclass(frozen=True)
class LocalTimes:
    """Arrays indexed ``[vertex, colour - 1]``; row ``ghost`` is the ghost."""

    q: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @property
    def n(self) -> np.ndarray:
        return self.u + self.v

    @property
    def total(self) -> np.ndarray:
        return self.n.sum(axis=1)


def local_times(g: ExtendedGraph, w: WireConfig) -> LocalTimes:
    shape = (g.n + 1, w.N)
    q = np.zeros(shape, dtype=np.int64)
    u = np.zeros(shape, dtype=np.int64)
    for e, (a, b) in enumerate(g.edges):
        for p, col in enumerate(w.c[e]):
            for x in (a, b):
                q[x, col - 1] += 1
                if (e, p, x) not in w.pairs:
                    u[x, col - 1] += 1
    paired = q - u
    if np.any(paired % 2):
        x, i = np.argwhere(paired % 2)[0]
        raise ParityViolation(f"odd number of paired {i + 1}-endpoints at vertex {x}")
    return LocalTimes(q, u, paired // 2)


@dataclass(frozen=True)
class StateClass:
    kind: str
    vertices: tuple[int, ...] = ()

    LOOPS_ONLY = "LoopsOnly"
    OPEN_PAIR = "OpenPair"
    OPEN_SET = "OpenSet"
    INVALID = "Invalid"
    # in the allowed space but with u^1_x >= 2 somewhere: outside every S(A)
    OTHER = "Other"

    @property
    def source_set(self) -> frozenset[int]:
        return frozenset(self.vertices)


def loops_only() -> StateClass:
    return StateClass(StateClass.LOOPS_ONLY)


def open_set(A: Iterable[int]) -> StateClass:
    A = tuple(sorted(set(A)))
    if not A:
        return loops_only()
    if len(A) == 2:
        return StateClass(StateClass.OPEN_PAIR, A)
    return StateClass(StateClass.OPEN_SET, A)


def open_pair(x: int, y: int) -> StateClass:
    if x == y:
        raise ValueError("an open pair needs two distinct vertices")
    return open_set((x, y))


def in_allowed_space(g: ExtendedGraph, lt: LocalTimes) -> bool:
    N = lt.q.shape[1]
    gh = g.ghost
    if lt.v[gh, N - 1] != 0:
        return False
    if np.any(lt.n[gh, : N - 1] != 0):
        return False
    return not np.any(lt.u[:gh, 1:] != 0)


def classify(g: ExtendedGraph, w: WireConfig) -> StateClass:
    lt = local_times(g, w)
    if not in_allowed_space(g, lt):
        return StateClass(StateClass.INVALID)
    u1 = lt.u[: g.n, 0]
    if np.any(u1 > 1):
        return StateClass(StateClass.OTHER, tuple(int(x) for x in np.nonzero(u1)[0]))
    return open_set(int(x) for x in np.nonzero(u1)[0])


@dataclass(frozen=True)
class Path:
    colour: int
    links: tuple[Link, ...]
    kind: str  # "loop" or "walk"
    ends: tuple[tuple[Link, int], ...] = ()

    @property
    def extremal_links(self) -> tuple[Link, ...]:
        return tuple(e[0] for e in self.ends)


@dataclass(frozen=True)
class PathDecomposition:
    paths: tuple[Path, ...]

    @property
    def loops(self) -> tuple[Path, ...]:
        return tuple(p for p in self.paths if p.kind == "loop")

    @property
    def walks(self) -> tuple[Path, ...]:
        return tuple(p for p in self.paths if p.kind == "walk")


def _trace(g: ExtendedGraph, w: WireConfig, start: Link, leave_via: int):
    """Follow pairings from ``start`` leaving through vertex ``leave_via``.

    Returns ``(links, closed, stop)`` where ``stop`` is the vertex of the
    unpaired endpoint that ended the trace (meaningless when closed).
    """
    seq = [start]
    link, x = start, leave_via
    while True:
        nxt = w.pairs.get((link[0], link[1], x))
        if nxt is None:
            return seq, False, x
        link = (nxt[0], nxt[1])
        if link == start:
            return seq, True, x
        seq.append(link)
        x = g.other(link[0], x)


def decompose_paths(g: ExtendedGraph, w: WireConfig) -> PathDecomposition:
    """Split the links into loops and walks, ordered by smallest link id."""
    seen: set[Link] = set()
    paths = []
    for link in w.links():
        if link in seen:
            continue
        a, b = g.edges[link[0]]
        fwd, closed, stop_fwd = _trace(g, w, link, b)
        if closed:
            comp, kind, ends = fwd, "loop", ()
        else:
            back, _, stop_back = _trace(g, w, link, a)
            comp = back[:0:-1] + fwd
            ends = ((comp[0], stop_back), (comp[-1], stop_fwd))
            if comp[-1] < comp[0]:
                comp.reverse()
                ends = ends[::-1]
            kind = "walk"
        seen.update(comp)
        paths.append(Path(w.colour(link), tuple(comp), kind, ends))
    return PathDecomposition(tuple(paths))


def count_Mxy(g: ExtendedGraph, w: WireConfig, x: int, y: int) -> int:
    ex, ey = g.ghost_edge(x), g.ghost_edge(y)
    total = 0
    for path in decompose_paths(g, w).walks:
        if path.colour != w.N or len(path.links) < 2:
            continue
        e0, e1 = path.links[0][0], path.links[-1][0]
        if {e0, e1} == {ex, ey}:
            total += 1
    return total


def count_vertex_pairings(q: int, u: int) -> int:
    """Number of partial matchings of ``q`` labelled points leaving ``u`` single."""
    if u < 0 or q < u or (q - u) % 2:
        raise ParityViolation(f"cannot leave {u} of {q} points unpaired")
    v = (q - u) // 2
    return math.factorial(q) // (math.factorial(u) * 2**v * math.factorial(v))


def unlabelled_key(key: tuple) -> tuple:
    """Canonical form of ``WireConfig.key()`` up to relabelling links within edges.

    Takes the lexicographically smallest key over all per-edge label
    permutations, so cost grows like the product of ``m_e!``.
    """
    m, colours, pairs = key
    perm_sets = [list(itertools.permutations(range(me))) for me in m]
    best = None
    for choice in itertools.product(*perm_sets):
        # choice[e][old] = new label on edge e
        cols = [[0] * me for me in m]
        for e, perm in enumerate(choice):
            for old, new in enumerate(perm):
                cols[e][new] = colours[e][old]
        rel = []
        for a, b in pairs:
            a2 = (a[0], choice[a[0]][a[1]], a[2])
            b2 = (b[0], choice[b[0]][b[1]], b[2])
            rel.append((a2, b2) if a2 < b2 else (b2, a2))
        cand = (tuple(tuple(c) for c in cols), tuple(sorted(rel)))
        if best is None or cand < best:
            best = cand
    return (tuple(m),) + best


def remove_links(w: WireConfig, doomed: Iterable[Link]) -> WireConfig:
    """Delete links, relabel survivors on each edge, leave partners unpaired."""
    doomed = set(doomed)
    relabel: dict[Link, Link] = {}
    out = WireConfig(w.N, [0] * len(w.m), [[] for _ in w.m], {})
    for e, me in enumerate(w.m):
        for p in range(me):
            if (e, p) not in doomed:
                relabel[(e, p)] = (e, out.m[e])
                out.c[e].append(w.c[e][p])
                out.m[e] += 1
    for a, b in w.pairs.items():
        la, lb = relabel.get(a[:2]), relabel.get(b[:2])
        if la is not None and lb is not None:
            out.pairs[(la[0], la[1], a[2])] = (lb[0], lb[1], b[2])
    return out


def colour_switch_forward(g: ExtendedGraph, w: WireConfig, x: int, y: int) -> WireConfig:
    """Strip the ghost-edge ends off every N-walk joining {x,g} to {y,g}."""
    ex, ey = g.ghost_edge(x), g.ghost_edge(y)
    doomed = []
    for path in decompose_paths(g, w).walks:
        if path.colour != w.N or len(path.links) < 2:
            continue
        first, last = path.links[0], path.links[-1]
        if {first[0], last[0]} == {ex, ey}:
            doomed += [first, last]
    if not doomed:
        raise PreconditionViolated(f"no N-walk joins the ghost edges of {x} and {y}")
    return remove_links(w, doomed)
