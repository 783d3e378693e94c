"""Vertex-by-vertex exploration of a configuration with fixed original links.

Given the links and colours on original edges, the ghost links and the
pairings at different vertices are independent, so each step draws the
ghost count of the selected vertex from its exact table and then a uniform
pairing of its endpoints, colour by colour.

A partial configuration is a ``WireConfig`` holding all original links,
the ghost links of explored vertices and the pairings at explored vertices
only.  Walks traced from a ghost link at the start vertex therefore stop
either on another ghost link (compare ``g``) or at the first unexplored
vertex they reach.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import (ExplorationComplete, InsufficientData, InvalidPartialConfig,
                     NoCandidateSteps)
from .exact_engine import ConditionalLaw, EnumerationSpec, conditional_distribution
from .graph_core import ExtendedGraph
from .weights import ModelParams
from .wire_model import WireConfig


@dataclass(frozen=True)
class SurvivingWalk:
    index: int  # position of the starting link on the ghost edge (0-based)
    escape_vertex: int
    escape_link: tuple[int, int]


def _check_partial(g: ExtendedGraph, x: int, A: frozenset, w: WireConfig) -> None:
    if x not in A:
        raise InvalidPartialConfig(f"vertex {x} is not in the explored set")
    for v in A:
        for e in g.incident(v):
            for pos in range(w.m[e]):
                if (e, pos, v) not in w.pairs:
                    raise InvalidPartialConfig(f"unpaired endpoint {(e, pos)} at explored vertex {v}")


def trace_from_ghost(g: ExtendedGraph, w: WireConfig, x: int, j: int,
                     A: frozenset) -> tuple[str, int, tuple[int, int]]:
    """Follow the walk starting at ghost link ``j`` of ``x``.

    Returns ``(kind, vertex, link)``: ``("ghost", y, link)`` when the walk
    ends on the ghost edge of ``y``, or ``("escape", z, link)`` when it
    reaches the unexplored vertex ``z`` through ``link``.
    """
    link = (g.ghost_edge(x), j)
    v = x
    while True:
        nxt = w.pairs.get((link[0], link[1], v))
        if nxt is None:
            raise InvalidPartialConfig(f"unpaired endpoint {link} at explored vertex {v}")
        link = (nxt[0], nxt[1])
        v = g.other(link[0], v)
        if v == g.ghost:
            return "ghost", g.other(link[0], v), link
        if v not in A:
            return "escape", v, link


def surviving_walks(g: ExtendedGraph, x: int, A: Iterable[int], w: WireConfig,
                    check: bool = True) -> list[SurvivingWalk]:
    A = frozenset(A)
    if check:
        _check_partial(g, x, A, w)
    out = []
    for j in range(w.m[g.ghost_edge(x)]):
        kind, v, link = trace_from_ghost(g, w, x, j, A)
        if kind == "escape":
            out.append(SurvivingWalk(j, v, link))
    return out


def selected_walk(g: ExtendedGraph, x: int, A: Iterable[int], w: WireConfig,
                  check: bool = True) -> SurvivingWalk | None:
    """Surviving walk from ``x`` with the smallest ghost-link label, if any."""
    A = frozenset(A)
    if check:
        _check_partial(g, x, A, w)
    for j in range(w.m[g.ghost_edge(x)]):
        kind, v, link = trace_from_ghost(g, w, x, j, A)
        if kind == "escape":
            return SurvivingWalk(j, v, link)
    return None


def walk_tracking_next(g: ExtendedGraph, x0: int, A: Iterable[int], w: WireConfig,
                       check: bool = True) -> int:
    """Escape vertex of the selected walk, else the lowest-id unexplored vertex."""
    A = frozenset(A)
    if len(A) >= g.n:
        raise ExplorationComplete("every vertex has been explored")
    sel = selected_walk(g, x0, A, w, check)
    if sel is not None:
        return sel.escape_vertex
    return min(v for v in range(g.n) if v not in A)


# --- the procedure -----------------------------------------------------------

@dataclass
class Step:
    n: int
    vertex: int
    ghost_count: int
    pairs: list  # revealed pairings at the vertex, as endpoint pairs
    original_links: int  # links on original edges at the vertex
    selected_before: int | None  # selected walk in the previous explored set
    died: bool
    k_candidate: bool
    k_good: bool

    def to_json(self) -> dict:
        return {"n": self.n, "vertex": self.vertex, "ghost_count": self.ghost_count,
                "pairs": [[list(a), list(b)] for a, b in self.pairs],
                "original_links": self.original_links, "selected_before": self.selected_before,
                "died": self.died, "k_candidate": self.k_candidate, "k_good": self.k_good}


@dataclass
class ExplorationTrace:
    m_tilde: list[int]
    c_tilde: list[list[int]]
    x0: int
    k: int
    seed: int
    steps: list[Step]
    final: WireConfig
    snapshots: list[dict] | None = None

    @property
    def T(self) -> int:
        return len(self.steps) - 1

    def explored(self, n: int) -> list[int]:
        return [s.vertex for s in self.steps[: n + 1]]

    def dump_jsonl(self, path: str | FsPath, g: ExtendedGraph) -> None:
        with open(path, "w") as fh:
            for i, s in enumerate(self.steps):
                row = s.to_json()
                if self.snapshots is not None:
                    row["config"] = self.snapshots[i]
                fh.write(json.dumps(row) + "\n")
            fh.write(json.dumps({"final": self.final.to_json(g)}) + "\n")


def _orig_degree(g: ExtendedGraph, m: Sequence[int], x: int) -> int:
    return sum(m[e] for e in g.incident(x) if not g.is_ghost_edge(e))


def _reveal(g: ExtendedGraph, w: WireConfig, x: int, gc: int, rng: random.Random) -> list:
    ge = g.ghost_edge(x)
    w.m[ge] = gc
    w.c[ge] = [w.N] * gc
    groups: dict[int, list] = {}
    for e in g.incident(x):
        for pos, col in enumerate(w.c[e]):
            groups.setdefault(col, []).append((e, pos, x))
    revealed = []
    for col in sorted(groups):
        eps = groups[col]
        rng.shuffle(eps)
        for a, b in zip(eps[::2], eps[1::2]):
            w.pairs[a] = b
            w.pairs[b] = a
            revealed.append((a, b) if a < b else (b, a))
    return sorted(revealed)


def _sample_ghost(law, rng: random.Random) -> int:
    u = rng.random()
    acc = 0.0
    for gc, pr in zip(law.ghost_counts, law.probs):
        acc += pr
        if u < acc:
            return gc
    return law.ghost_counts[-1]


Strategy = Callable[[ExtendedGraph, int, frozenset, WireConfig], int]


def lowest_id_strategy(g: ExtendedGraph, x0: int, A: frozenset, w: WireConfig) -> int:
    return min(v for v in range(g.n) if v not in A)


def walk_tracking_strategy(g: ExtendedGraph, x0: int, A: frozenset, w: WireConfig) -> int:
    return walk_tracking_next(g, x0, A, w, check=False)


def run_sampling_procedure(g: ExtendedGraph, p: ModelParams, m_tilde: Sequence[int],
                           c_tilde: Sequence[Sequence[int]], strategy: Strategy = walk_tracking_strategy,
                           seed: int = 0, x0: int = 0, k: int = 0, law: ConditionalLaw | None = None,
                           snapshots: bool = False, debug: bool = False,
                           rng: random.Random | None = None) -> ExplorationTrace:
    """Run the exploration once.

    ``law`` may be passed to reuse the per-vertex tables across runs; it is
    computed from ``p`` (whose caps must be finite on original edges) when
    omitted.  ``k`` sets the candidate threshold recorded in the flags.
    """
    if law is None:
        law = conditional_distribution(EnumerationSpec(g, p), m_tilde, c_tilde)
    if rng is None:
        ss = np.random.SeedSequence(seed)
        rng = random.Random(int.from_bytes(ss.generate_state(4, np.uint32).tobytes(), "little"))
    w = law.base.copy()
    A: list[int] = []
    steps: list[Step] = []
    snaps = [] if snapshots else None
    x = x0
    for n in range(g.n):
        if n > 0:
            x = strategy(g, x0, frozenset(A), w)
            if x in A or not 0 <= x < g.n:
                raise InvalidPartialConfig(f"strategy returned explored or invalid vertex {x}")
        sel = selected_walk(g, x0, A, w, check=False) if n > 0 else None
        before = dict(w.pairs) if debug else None
        gc = _sample_ghost(law.vertex_laws[x], rng)
        revealed = _reveal(g, w, x, gc, rng)
        A.append(x)
        died = False
        if sel is not None:
            kind, v, _ = trace_from_ghost(g, w, x0, sel.index, frozenset(A))
            died = kind == "ghost" and v == x
        if debug:
            for a, b in before.items():
                if w.pairs.get(a) != b:
                    raise InvalidPartialConfig(f"step {n} changed an earlier pairing")
        deg = _orig_degree(g, w.m, x)
        cand = deg <= k
        steps.append(Step(n, x, gc, revealed, deg, None if sel is None else sel.index, died,
                          cand, cand and gc > 0))
        if snaps is not None:
            snaps.append(w.to_json(g))
    return ExplorationTrace(list(m_tilde), [list(c) for c in c_tilde], x0, k, seed, steps, w, snaps)


def run_many(g: ExtendedGraph, p: ModelParams, m_tilde, c_tilde, runs: int, seed: int = 0,
             **kw) -> list[ExplorationTrace]:
    """Independent traces sharing one table; run ``i`` uses child seed ``i``."""
    law = conditional_distribution(EnumerationSpec(g, p), m_tilde, c_tilde)
    children = np.random.SeedSequence(seed).spawn(runs)
    out = []
    for i, child in enumerate(children):
        rng = random.Random(int.from_bytes(child.generate_state(4, np.uint32).tobytes(), "little"))
        out.append(run_sampling_procedure(g, p, m_tilde, c_tilde, seed=i, law=law, rng=rng, **kw))
    return out


def final_law(traces: Sequence[ExplorationTrace]) -> dict[tuple, float]:
    counts: dict[tuple, int] = {}
    for t in traces:
        key = t.final.key()
        counts[key] = counts.get(key, 0) + 1
    return {key: c / len(traces) for key, c in counts.items()}


# --- death statistics --------------------------------------------------------

@dataclass
class DeathRecord:
    """Deaths of the tracked walk at candidate steps for one trace.

    ``trial_steps`` are steps whose vertex is k-candidate and that start with
    a selected walk; ``T`` are the steps of deaths among them and
    ``X[j]`` counts trial steps in ``(T[j-1], T[j]]`` (the last entry runs
    to the end of the trace when an open stretch remains).
    """

    trial_steps: list[int]
    T: list[int]
    X: list[int]
    died: list[bool]

    def partial_sum(self, ell: int) -> int:
        return sum(self.X[:ell])


def death_record(trace: ExplorationTrace, k: int) -> DeathRecord:
    trials, T, X, died = [], [], [], []
    run = 0
    for s in trace.steps[1:]:
        if s.selected_before is None or s.original_links > k:
            continue
        trials.append(s.n)
        died.append(s.died)
        run += 1
        if s.died:
            T.append(s.n)
            X.append(run)
            run = 0
    if run:
        X.append(run)
    return DeathRecord(trials, T, X, died)


@dataclass
class DeathReport:
    k: int
    trials: int
    deaths: int
    frequency: float
    stderr: float
    wilson: tuple[float, float]
    c6: float | None
    # frequency - 3 stderr >= c6
    passes: bool | None

    def to_json(self) -> dict:
        return {"k": self.k, "trials": self.trials, "deaths": self.deaths,
                "frequency": self.frequency, "stderr": self.stderr, "wilson": list(self.wilson),
                "c6": self.c6, "passes": self.passes}


def death_statistics(traces: Sequence[ExplorationTrace], k: int, c6: float | None = None) -> DeathReport:
    """Empirical death probability at k-candidate steps with a tracked walk."""
    trials = deaths = 0
    for t in traces:
        rec = death_record(t, k)
        trials += len(rec.trial_steps)
        deaths += sum(rec.died)
    if trials == 0:
        raise NoCandidateSteps("no k-candidate step with a selected walk in any trace")
    freq = deaths / trials
    se = math.sqrt(freq * (1 - freq) / trials)
    ci = stats.binomtest(deaths, trials).proportion_ci(method="wilson")
    passes = None if c6 is None else freq + 3 * se >= c6
    return DeathReport(k, trials, deaths, freq, se, (float(ci.low), float(ci.high)), c6, passes)


def negative_binomial_ccdf(r: int, ell: int, c6: float) -> float:
    """P(Y_1 + ... + Y_ell > r) for iid geometric Y on {1, 2, ...} with success c6."""
    if ell <= 0:
        return 0.0
    return float(stats.binom.cdf(ell - 1, r, c6))


@dataclass
class DominationRow:
    ell: int
    r: int
    empirical: float
    bound: float
    stderr: float
    violation: bool

    def to_json(self) -> dict:
        return self.__dict__.copy()


@dataclass
class DominationReport:
    c6: float
    traces: int
    rows: list[DominationRow] = field(default_factory=list)

    @property
    def violations(self) -> list[DominationRow]:
        return [r for r in self.rows if r.violation]

    @property
    def passes(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"c6": self.c6, "traces": self.traces, "passes": self.passes,
                "rows": [r.to_json() for r in self.rows]}


def domination_check(traces: Sequence[ExplorationTrace], c6: float, ell: int | Sequence[int],
                     r_grid: Sequence[int], k: int | None = None,
                     min_traces: int = 30) -> DominationReport:
    """Compare the empirical tail of X_1 + ... + X_ell with the geometric bound.

    A violation is an empirical tail above ``bound + 3 * sqrt(bound (1 - bound) / n)``.
    """
    if len(traces) < min_traces:
        raise InsufficientData(f"{len(traces)} traces, need at least {min_traces}")
    k = traces[0].k if k is None else k
    ells = [ell] if isinstance(ell, int) else list(ell)
    recs = [death_record(t, k) for t in traces]
    n = len(recs)
    rep = DominationReport(c6, n)
    for L in ells:
        sums = np.array([rec.partial_sum(L) for rec in recs])
        for r in r_grid:
            emp = float(np.mean(sums > r))
            bound = negative_binomial_ccdf(r, L, c6)
            se = math.sqrt(bound * (1 - bound) / n)
            rep.rows.append(DominationRow(L, r, emp, bound, se, emp > bound + 3 * se))
    return rep
