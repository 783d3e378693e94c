"""Metropolis-Hastings sampler for the path measure on loop-only configurations.

The chain works on labelled links.  Every endpoint at an original vertex is
paired, so the local time is ``n_x = q_x / 2`` with ``q_x`` the number of
link endpoints at ``x``.  Moves:

* ``loop``: insert or delete two links of one colour on an original edge,
  paired to each other at both ends.
* ``ghost_pair``: insert or delete two ghost links at a vertex, paired to
  each other there.
* ``swap``: at a vertex, exchange the partners of two endpoints of one
  colour.  Weight neutral, always accepted.
* ``cut_join``: replace an N-link on ``{x, y}`` by one ghost link at ``x``
  and one at ``y`` that inherit its pairings, or the reverse.  Local times do
  not change.
* ``recolour``: pick a uniform original-edge link; if its path is a loop,
  give the loop a uniform colour.  Weight neutral.

Any configuration reduces to the empty one: recolour loops to colour N, cut
their links into ghost links, pair ghost links at the same vertex with
swaps and delete them.  With caps this needs ``cap_ghost >= 2``.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidState, NotEquilibrated
from .graph_core import ExtendedGraph
from .weights import ModelParams, config_log_weight, log_site_weight
from .wire_model import StateClass, WireConfig, classify

MOVES = ("loop", "ghost_pair", "swap", "cut_join", "recolour")


class _Link:
    __slots__ = ("colour", "edge", "p0", "p1")

    def __init__(self, colour: int, edge: int):
        self.colour = colour
        self.edge = edge
        self.p0 = None  # partner at edges[edge][0]
        self.p1 = None  # partner at edges[edge][1]


@dataclass
class MoveStats:
    proposed: dict = field(default_factory=lambda: {m: 0 for m in MOVES})
    accepted: dict = field(default_factory=lambda: {m: 0 for m in MOVES})

    def rates(self) -> dict:
        return {m: self.accepted[m] / self.proposed[m] if self.proposed[m] else None for m in MOVES}

    def to_json(self) -> dict:
        return {"proposed": dict(self.proposed), "accepted": dict(self.accepted)}


def make_rng(seed: int | np.random.SeedSequence) -> random.Random:
    """Fast generator seeded through a (splittable) ``SeedSequence``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return random.Random(int.from_bytes(ss.generate_state(4, np.uint32).tobytes(), "little"))


class ChainState:
    """Mutable chain state with cached local times and log-weight."""

    def __init__(self, g: ExtendedGraph, p: ModelParams, seed: int = 0, debug: bool = False,
                 move_weights: dict | None = None):
        self.g = g
        self.p = p
        self.N = p.N
        self.seed = seed
        self.rng = make_rng(seed)
        self.debug = debug
        self.links: list[list[_Link]] = [[] for _ in range(g.n_edges)]
        self.n = [0] * g.n
        self.log_weight = 0.0
        self.stats = MoveStats()
        self.steps = 0
        self.last_accepted = False
        self._ends = [(u, v) for (u, v) in g.edges]
        self._incident = [g.incident(x) for x in range(g.n)]
        self._orig = list(range(g.n_orig_edges))
        self._J = [p.coupling(e) for e in g.base.edges]
        self._logJ = [math.log(j) if j > 0 else -math.inf for j in self._J]
        self._logh = math.log(p.abs_h) if p.h != 0 else -math.inf
        self.cap_o = p.cap_orig if p.cap_orig is not None else math.inf
        self.cap_g = p.cap_ghost if p.cap_ghost is not None else math.inf
        self._logU: list[float] = []
        weights = move_weights or {m: 1.0 for m in MOVES}
        self._moves = [m for m in MOVES if weights.get(m, 0) > 0]
        self._move_w = [weights[m] for m in self._moves]
        self._cum = list(np.cumsum(self._move_w) / sum(self._move_w))

    # --- weights -------------------------------------------------------------

    def logU(self, r: int) -> float:
        while len(self._logU) <= r:
            self._logU.append(log_site_weight(len(self._logU), self.N, self.p.site_weight_error))
        return self._logU[r]

    def _dlogU(self, x: int, d: int) -> float:
        return self.logU(self.n[x] + d) - self.logU(self.n[x])

    # --- endpoint helpers ----------------------------------------------------

    def partner(self, link: _Link, x: int):
        return link.p0 if self._ends[link.edge][0] == x else link.p1

    def set_partner(self, link: _Link, x: int, other) -> None:
        if self._ends[link.edge][0] == x:
            link.p0 = other
        else:
            link.p1 = other

    def endpoints(self, x: int) -> list[_Link]:
        out = []
        for e in self._incident[x]:
            out.extend(self.links[e])
        return out

    # --- conversions ---------------------------------------------------------

    @classmethod
    def from_config(cls, g: ExtendedGraph, p: ModelParams, w: WireConfig, seed: int = 0,
                    **kw) -> "ChainState":
        if classify(g, w).kind != StateClass.LOOPS_ONLY:
            raise InvalidState("the chain runs on loop-only configurations")
        s = cls(g, p, seed, **kw)
        objs = {}
        for e, cols in enumerate(w.c):
            for pos, col in enumerate(cols):
                link = _Link(col, e)
                objs[(e, pos)] = link
                s.links[e].append(link)
        for (ea, pa, x), (eb, pb, _) in w.pairs.items():
            s.set_partner(objs[(ea, pa)], x, objs[(eb, pb)])
        for x in range(g.n):
            s.n[x] = sum(len(s.links[e]) for e in s._incident[x]) // 2
        s.log_weight = config_log_weight(g, w, p)
        return s

    def to_config(self) -> WireConfig:
        g = self.g
        w = WireConfig.empty(g, self.N)
        where = {}
        for e, ls in enumerate(self.links):
            w.m[e] = len(ls)
            w.c[e] = [l.colour for l in ls]
            for pos, l in enumerate(ls):
                where[id(l)] = (e, pos)
        for e, ls in enumerate(self.links):
            u, v = self._ends[e]
            for pos, l in enumerate(ls):
                for x, q in ((u, l.p0), (v, l.p1)):
                    if q is not None:
                        w.pairs[(e, pos, x)] = where[id(q)] + (x,)
        return w

    def key(self) -> tuple:
        """Same canonical form as ``WireConfig.key``."""
        where = {}
        for e, ls in enumerate(self.links):
            for pos, l in enumerate(ls):
                where[id(l)] = (e, pos)
        pairs = []
        for e, ls in enumerate(self.links):
            u, v = self._ends[e]
            for pos, l in enumerate(ls):
                for x, q in ((u, l.p0), (v, l.p1)):
                    if q is not None:
                        a, b = (e, pos, x), where[id(q)] + (x,)
                        if a < b:
                            pairs.append((a, b))
        pairs.sort()
        return (tuple(len(ls) for ls in self.links),
                tuple(tuple(l.colour for l in ls) for ls in self.links), tuple(pairs))

    def check_consistency(self) -> None:
        """Recompute local times and weight from scratch and compare."""
        w = self.to_config()
        if classify(self.g, w).kind != StateClass.LOOPS_ONLY:
            raise InvalidState(f"chain left the loop-only space at step {self.steps}")
        for x in range(self.g.n):
            q = sum(len(self.links[e]) for e in self._incident[x])
            if 2 * self.n[x] != q:
                raise InvalidState(f"cached local time at {x} is stale")
        lw = config_log_weight(self.g, w, self.p)
        if not math.isclose(lw, self.log_weight, rel_tol=1e-9, abs_tol=1e-9):
            raise InvalidState(f"cached log-weight {self.log_weight} != {lw}")

    # --- elementary moves (each returns the arguments of its inverse) --------

    def insert_loop(self, e: int, colour: int, positions: tuple[int, int]) -> tuple:
        a, b = _Link(colour, e), _Link(colour, e)
        a.p0 = a.p1 = b
        b.p0 = b.p1 = a
        i, j = positions
        ls = self.links[e]
        ls.insert(i, a)
        ls.insert(j, b)
        for x in self._ends[e]:
            self.n[x] += 1
        return ("delete_loop", e, positions)

    def delete_loop(self, e: int, positions: tuple[int, int]) -> tuple:
        i, j = positions
        ls = self.links[e]
        colour = ls[i].colour
        del ls[j]
        del ls[i]
        for x in self._ends[e]:
            self.n[x] -= 1
        return ("insert_loop", e, colour, positions)

    def insert_ghost_pair(self, x: int, positions: tuple[int, int]) -> tuple:
        e = self.g.ghost_edge(x)
        a, b = _Link(self.N, e), _Link(self.N, e)
        a.p0, b.p0 = b, a
        i, j = positions
        ls = self.links[e]
        ls.insert(i, a)
        ls.insert(j, b)
        self.n[x] += 1
        return ("delete_ghost_pair", x, positions)

    def delete_ghost_pair(self, x: int, positions: tuple[int, int]) -> tuple:
        i, j = positions
        ls = self.links[self.g.ghost_edge(x)]
        del ls[j]
        del ls[i]
        self.n[x] -= 1
        return ("insert_ghost_pair", x, positions)

    def swap(self, x: int, a: _Link, c: _Link) -> tuple:
        b, d = self.partner(a, x), self.partner(c, x)
        self.set_partner(a, x, d)
        self.set_partner(d, x, a)
        self.set_partner(c, x, b)
        self.set_partner(b, x, c)
        return ("swap", x, a, c)

    def cut(self, e: int, idx: int, px: int, py: int) -> tuple:
        x, y = self._ends[e]
        link = self.links[e].pop(idx)
        for v, pos, partner in ((x, px, link.p0), (y, py, link.p1)):
            ghost = _Link(self.N, self.g.ghost_edge(v))
            ghost.p0 = partner
            self.set_partner(partner, v, ghost)
            self.links[self.g.ghost_edge(v)].insert(pos, ghost)
        return ("join", e, px, py, idx)

    def join(self, e: int, ix: int, iy: int, pos: int) -> tuple:
        x, y = self._ends[e]
        gx = self.links[self.g.ghost_edge(x)].pop(ix)
        gy = self.links[self.g.ghost_edge(y)].pop(iy)
        link = _Link(self.N, e)
        link.p0, link.p1 = gx.p0, gy.p0
        self.set_partner(gx.p0, x, link)
        self.set_partner(gy.p0, y, link)
        self.links[e].insert(pos, link)
        return ("cut", e, pos, ix, iy)

    def loop_of(self, start: _Link) -> list[_Link] | None:
        """Links of the loop through ``start``, or None if its path is a walk."""
        seq = [start]
        link, x = start, self._ends[start.edge][1]
        while True:
            nxt = self.partner(link, x)
            if nxt is None:
                return None
            if nxt is start:
                return seq
            seq.append(nxt)
            link = nxt
            u, v = self._ends[link.edge]
            x = v if u == x else u

    def recolour(self, loop: list[_Link], colour: int) -> tuple:
        old = loop[0].colour
        for l in loop:
            l.colour = colour
        return ("recolour", loop, old)

    def apply(self, move: tuple) -> tuple:
        return getattr(self, move[0])(*move[1:])

    # --- proposals -----------------------------------------------------------

    def _accept(self, log_ratio: float) -> bool:
        return log_ratio >= 0 or self.rng.random() < math.exp(log_ratio)

    def _pair_positions(self, m: int) -> tuple[int, int]:
        i, j = sorted(self.rng.sample(range(m), 2))
        return (i, j)

    def _propose_loop(self) -> bool:
        rng = self.rng
        if not self._orig:
            return False
        e = self._orig[int(rng.random() * len(self._orig))]
        x, y = self._ends[e]
        ls = self.links[e]
        m = len(ls)
        if rng.random() < 0.5:
            if m + 2 > self.cap_o or self._J[e] == 0:
                return False
            colour = 1 + int(rng.random() * self.N)
            d = (2 * self._logJ[e] - math.log((m + 1) * (m + 2))
                 + self._dlogU(x, 1) + self._dlogU(y, 1))
            if not self._accept(d + math.log(self.N)):
                return False
            self.insert_loop(e, colour, self._pair_positions(m + 2))
            self.log_weight += d
            return True
        if m < 2:
            return False
        i, j = self._pair_positions(m)
        a, b = ls[i], ls[j]
        if a.p0 is not b or a.p1 is not b:
            return False
        d = (math.log(m * (m - 1)) - 2 * self._logJ[e]
             + self._dlogU(x, -1) + self._dlogU(y, -1))
        if not self._accept(d - math.log(self.N)):
            return False
        self.delete_loop(e, (i, j))
        self.log_weight += d
        return True

    def _propose_ghost_pair(self) -> bool:
        rng = self.rng
        x = int(rng.random() * self.g.n)
        ls = self.links[self.g.ghost_edge(x)]
        m = len(ls)
        if rng.random() < 0.5:
            if m + 2 > self.cap_g or self.p.h == 0:
                return False
            d = 2 * self._logh - math.log((m + 1) * (m + 2)) + self._dlogU(x, 1)
            if not self._accept(d):
                return False
            self.insert_ghost_pair(x, self._pair_positions(m + 2))
            self.log_weight += d
            return True
        if m < 2:
            return False
        i, j = self._pair_positions(m)
        if ls[i].p0 is not ls[j]:
            return False
        d = math.log(m * (m - 1)) - 2 * self._logh + self._dlogU(x, -1)
        if not self._accept(d):
            return False
        self.delete_ghost_pair(x, (i, j))
        self.log_weight += d
        return True

    def _propose_swap(self) -> bool:
        x = int(self.rng.random() * self.g.n)
        eps = self.endpoints(x)
        if len(eps) < 4:
            return False
        a, c = self.rng.sample(eps, 2)
        if a.colour != c.colour or self.partner(a, x) is c:
            return False
        self.swap(x, a, c)
        return True

    def _propose_cut_join(self) -> bool:
        rng = self.rng
        if not self._orig:
            return False
        e = self._orig[int(rng.random() * len(self._orig))]
        x, y = self._ends[e]
        gx, gy = self.links[self.g.ghost_edge(x)], self.links[self.g.ghost_edge(y)]
        ax, ay, m = len(gx), len(gy), len(self.links[e])
        if rng.random() < 0.5:
            if m == 0 or ax + 1 > self.cap_g or ay + 1 > self.cap_g or self.p.h == 0:
                return False
            idx = int(rng.random() * m)
            if self.links[e][idx].colour != self.N:
                return False
            d = 2 * self._logh + math.log(m) - self._logJ[e] - math.log((ax + 1) * (ay + 1))
            if not self._accept(d):
                return False
            self.cut(e, idx, int(rng.random() * (ax + 1)), int(rng.random() * (ay + 1)))
            self.log_weight += d
            return True
        if ax == 0 or ay == 0 or m + 1 > self.cap_o or self._J[e] == 0:
            return False
        d = self._logJ[e] + math.log(ax * ay) - 2 * self._logh - math.log(m + 1)
        if not self._accept(d):
            return False
        self.join(e, int(rng.random() * ax), int(rng.random() * ay), int(rng.random() * (m + 1)))
        self.log_weight += d
        return True

    def _propose_recolour(self) -> bool:
        total = sum(len(self.links[e]) for e in self._orig)
        if total == 0:
            return False
        r = int(self.rng.random() * total)
        for e in self._orig:
            if r < len(self.links[e]):
                start = self.links[e][r]
                break
            r -= len(self.links[e])
        loop = self.loop_of(start)
        if loop is None:
            return False
        colour = 1 + int(self.rng.random() * self.N)
        if colour == start.colour:
            return False
        self.recolour(loop, colour)
        return True

    def step(self) -> "ChainState":
        u = self.rng.random()
        for move, c in zip(self._moves, self._cum):
            if u < c:
                break
        self.stats.proposed[move] += 1
        self.last_accepted = getattr(self, "_propose_" + move)()
        if self.last_accepted:
            self.stats.accepted[move] += 1
            if self.debug:
                self.check_consistency()
        self.steps += 1
        return self


def empty_state(g: ExtendedGraph, p: ModelParams, seed: int = 0, **kw) -> ChainState:
    return ChainState(g, p, seed, **kw)


def mcmc_step(state: ChainState, p: ModelParams | None = None) -> ChainState:
    """One Metropolis-Hastings update; ``p`` must match the state's parameters."""
    if p is not None and p != state.p:
        raise ValueError("parameters differ from the ones the chain was built with")
    return state.step()


# --- observables -------------------------------------------------------------

def walk_end(state: ChainState, start: _Link) -> _Link:
    """Other extremal link of the walk that starts at ghost link ``start``."""
    link, x = start, state._ends[start.edge][0]
    while True:
        nxt = state.partner(link, x)
        if nxt is None:
            return link
        link = nxt
        u, v = state._ends[link.edge]
        x = v if u == x else u


def count_walks_between(state: ChainState, x: int, y: int) -> int:
    g = state.g
    target = g.ghost_edge(y)
    return sum(1 for l in state.links[g.ghost_edge(x)] if walk_end(state, l).edge == target)


def path_event(g: ExtendedGraph, n: Sequence[int], x: int, y: int, eps: float, k: int,
               budget: int = 10**6) -> bool:
    """Whether some self-avoiding path from x to y in the original graph has
    at least ``eps * length`` vertices with local time above ``k``."""
    adj = g.base.adjacency
    high = [v > k for v in n]
    visited = [False] * g.n
    visited[x] = True
    calls = 0

    def dfs(v, length, count):
        nonlocal calls
        calls += 1
        if calls > budget:
            raise RuntimeError("self-avoiding path search exceeded its budget")
        if v == y:
            return count >= eps * length
        for w in adj[v]:
            if not visited[w]:
                visited[w] = True
                if dfs(w, length + 1, count + high[w]):
                    return True
                visited[w] = False
        return False

    if x == y:
        return True  # the one-vertex path has length 0
    return dfs(x, 0, int(high[x]))


@dataclass(frozen=True)
class Observable:
    """A named scalar function of the chain state.

    Names: ``M:x:y``, ``m:z`` (ghost links at z), ``n_ge:k:a,b,..``
    (indicator that every listed vertex has local time >= k),
    ``m_n_ge:z:k:a,b,..`` (their product) and ``E:x:y:eps:k``.
    """

    name: str
    fn: Callable[[ChainState], float]


def parse_observable(name: str, g: ExtendedGraph) -> Observable:
    parts = name.split(":")
    kind = parts[0]

    def verts(s):
        out = [int(t) for t in s.split(",") if t != ""]
        for v in out:
            if not 0 <= v < g.n:
                raise ValueError(f"observable {name!r}: vertex {v} out of range")
        return out

    if kind == "M" and len(parts) == 3:
        x, y = int(parts[1]), int(parts[2])
        verts(f"{x},{y}")
        return Observable(name, lambda s: count_walks_between(s, x, y))
    if kind == "m" and len(parts) == 2:
        (z,) = verts(parts[1])
        ge = g.ghost_edge(z)
        return Observable(name, lambda s: len(s.links[ge]))
    if kind == "n_ge" and len(parts) == 3:
        k, A = int(parts[1]), verts(parts[2])
        return Observable(name, lambda s: float(all(s.n[a] >= k for a in A)))
    if kind == "m_n_ge" and len(parts) == 4:
        (z,) = verts(parts[1])
        k, A = int(parts[2]), verts(parts[3])
        ge = g.ghost_edge(z)
        return Observable(name, lambda s: len(s.links[ge]) * float(all(s.n[a] >= k for a in A)))
    if kind == "E" and len(parts) == 5:
        x, y = verts(parts[1] + "," + parts[2])
        eps, k = float(parts[3]), int(parts[4])
        return Observable(name, lambda s: float(path_event(g, s.n, x, y, eps, k)))
    raise ValueError(f"unknown observable {name!r}")


# --- statistics --------------------------------------------------------------

def integrated_autocorr_time(x: np.ndarray, c: float = 5.0) -> float:
    """Sokal's windowed estimate of tau_int (in units of recorded samples)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return 0.5
    x = x - x.mean()
    var = float(x @ x) / n
    if var == 0:
        return 0.5
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (var * n)
    tau = 0.5
    for t in range(1, n):
        tau += acf[t]
        if t >= c * tau:
            break
    return float(max(tau, 0.5))


def batch_means(x: np.ndarray, batches: int) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    b = min(batches, len(x))
    if b < 2:
        return float(x.mean()), math.inf
    size = len(x) // b
    means = x[: size * b].reshape(b, size).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / math.sqrt(b))


@dataclass(frozen=True)
class Schedule:
    burn_in: int = 10_000
    thin: int = 10
    steps: int = 200_000
    batches: int = 50
    # raise NotEquilibrated if fewer than this many tau_int fit in the run
    min_tau_multiples: float = 50.0


@dataclass
class Estimate:
    name: str
    mean: float
    stderr: float
    tau_int: float  # in chain steps

    def to_json(self) -> dict:
        return {"name": self.name, "mean": self.mean, "stderr": self.stderr, "tau_int": self.tau_int}


@dataclass
class ChainResult:
    estimates: list[Estimate]
    stats: MoveStats
    seed: int
    schedule: Schedule
    series: dict[str, np.ndarray] = field(repr=False, default_factory=dict)

    def __getitem__(self, name: str) -> Estimate:
        for est in self.estimates:
            if est.name == name:
                return est
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"estimates": [e.to_json() for e in self.estimates], "moves": self.stats.to_json(),
                "seed": self.seed, "schedule": self.schedule.__dict__}


def run_chain(state: ChainState, schedule: Schedule, observables: Sequence[Observable],
              trace_path: str | FsPath | None = None, snapshot_path: str | FsPath | None = None,
              snapshot_every: int = 0) -> dict[str, np.ndarray]:
    for _ in range(schedule.burn_in):
        state.step()
    n_rec = schedule.steps // schedule.thin
    series = {o.name: np.empty(n_rec) for o in observables}
    writer = fh = snap = None
    if trace_path is not None:
        fh = open(trace_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["step"] + [o.name for o in observables])
    if snapshot_path is not None and snapshot_every:
        snap = open(snapshot_path, "w")
    try:
        for r in range(n_rec):
            for _ in range(schedule.thin):
                state.step()
            vals = [o.fn(state) for o in observables]
            for o, v in zip(observables, vals):
                series[o.name][r] = v
            if writer is not None:
                writer.writerow([state.steps] + [repr(float(v)) for v in vals])
            if snap is not None and (r + 1) % snapshot_every == 0:
                snap.write(json.dumps({"step": state.steps,
                                       "config": state.to_config().to_json(state.g)}) + "\n")
    finally:
        if fh is not None:
            fh.close()
        if snap is not None:
            snap.close()
    return series


def estimate(g: ExtendedGraph, p: ModelParams, observables: Iterable[str],
             schedule: Schedule = Schedule(), seed: int = 0, check: bool = True,
             **kw) -> ChainResult:
    """Batched-means estimates of ``observables`` from one chain started empty."""
    obs = [parse_observable(name, g) for name in observables]
    state = ChainState(g, p, seed)
    series = run_chain(state, schedule, obs, **kw)
    out = []
    n_rec = schedule.steps // schedule.thin
    for o in obs:
        x = series[o.name]
        tau = integrated_autocorr_time(x)
        if check and n_rec < schedule.min_tau_multiples * tau:
            raise NotEquilibrated(f"{o.name}: tau_int = {tau * schedule.thin:.0f} steps is too "
                                  f"large for a run of {schedule.steps} steps")
        mean, err = batch_means(x, schedule.batches)
        out.append(Estimate(o.name, mean, err, tau * schedule.thin))
    return ChainResult(out, state.stats, seed, schedule, series)


def empirical_law(g: ExtendedGraph, p: ModelParams, steps: int, seed: int = 0, thin: int = 1,
                  burn_in: int = 10_000) -> dict[tuple, float]:
    """Frequencies of labelled configurations visited every ``thin`` steps."""
    state = ChainState(g, p, seed)
    for _ in range(burn_in):
        state.step()
    counts: dict[tuple, int] = {}
    n_rec = steps // thin
    k = state.key()
    for _ in range(n_rec):
        changed = False
        for _ in range(thin):
            changed |= state.step().last_accepted
        if changed:
            k = state.key()
        counts[k] = counts.get(k, 0) + 1
    return {k: c / n_rec for k, c in counts.items()}


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def lump(law: dict, fn: Callable[[tuple], tuple]) -> dict:
    """Push a law on keys forward through ``fn``."""
    out: dict = {}
    for k, v in law.items():
        j = fn(k)
        out[j] = out.get(j, 0.0) + v
    return out
