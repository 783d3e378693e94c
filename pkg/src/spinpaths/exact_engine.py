"""Exact enumeration of the capped path model.

Two enumeration modes are available.  ``aggregate`` sums over per-edge colour
counts and multiplies by the number of compatible pairings at every vertex,
which is enough for partition functions because the weight depends on the
pairings only through the local times.  ``explicit`` builds every labelled
configuration (links sorted by colour within an edge, times the multinomial
number of colourings) with its pairings spelled out, and is required for
topology-dependent observables such as the number of ghost-to-ghost walks.

Caps on original edges realize the degree-``k`` Taylor truncation of the
edge interaction exactly; caps on ghost edges truncate ``exp(h phi^N)`` and
are controlled by an explicit tail bound.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import (AggregateModeUnsupported, BudgetExceeded, InadmissiblePair,
                     InfiniteCaps, VertexOutOfRange)
from .graph_core import ExtendedGraph
from .weights import (LogAccumulator, ModelParams, config_log_weight, log_pairings,
                      log_site_weight)
from .wire_model import (StateClass, WireConfig, count_Mxy, count_vertex_pairings,
                         loops_only, open_set)

AGGREGATE = "aggregate"
EXPLICIT = "explicit"
DEFAULT_BUDGET = 10**8


def default_ghost_cap(h: float, tol: float = 1e-12) -> int:
    """Smallest cap K with h^K / K! * e^h below ``tol``."""
    h = abs(h)
    if h == 0:
        return 0
    K = 0
    while K * math.log(h) - math.lgamma(K + 1) + h >= math.log(tol):
        K += 1
    return K


def taylor_tail(a: float, K: int) -> float:
    """sum_{n > K} a^n / n! for a >= 0."""
    if a == 0:
        return 0.0
    term = math.exp((K + 1) * math.log(a) - math.lgamma(K + 2))
    total, n = 0.0, K + 1
    while term > 1e-300 and (total == 0 or term > total * 1e-17):
        total += term
        n += 1
        term *= a / n
    return total


@dataclass(frozen=True)
class EnumerationSpec:
    graph: ExtendedGraph
    params: ModelParams
    mode: str = AGGREGATE
    budget: int = DEFAULT_BUDGET
    workers: int = 1

    def __post_init__(self):
        if self.mode not in (AGGREGATE, EXPLICIT):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def caps(self) -> tuple[int, int]:
        p = self.params
        if p.cap_orig is None:
            raise InfiniteCaps("exact enumeration needs a finite cap on original edges")
        ghost = p.cap_ghost if p.cap_ghost is not None else default_ghost_cap(p.h)
        return p.cap_orig, ghost

    def with_caps(self, cap_orig: int | None = None, cap_ghost: int | None = None) -> "EnumerationSpec":
        p = self.params
        newp = p.with_(cap_orig=p.cap_orig if cap_orig is None else cap_orig,
                       cap_ghost=p.cap_ghost if cap_ghost is None else cap_ghost)
        return EnumerationSpec(self.graph, newp, self.mode, self.budget, self.workers)

    def with_mode(self, mode: str) -> "EnumerationSpec":
        return EnumerationSpec(self.graph, self.params, mode, self.budget, self.workers)


@dataclass(frozen=True)
class PartitionResult:
    """``tail_bound`` bounds |Z - Z_capped| in units where the empty
    configuration has weight 1, for the ghost caps alone (reference: the
    model truncated on original edges at the same cap).  ``orig_tail_bound``
    is the additional error against the untruncated exponential interaction.
    """

    log_Z: float
    term_count: int
    tail_bound: float
    orig_tail_bound: float
    caps: tuple[int, int]
    params: ModelParams
    target: StateClass = field(default_factory=loops_only)

    def to_json(self) -> dict:
        return {"log_Z": self.log_Z, "term_count": self.term_count,
                "tail_bound": self.tail_bound, "orig_tail_bound": self.orig_tail_bound,
                "caps": {"orig": self.caps[0], "ghost": self.caps[1]},
                "params": self.params.to_json(),
                "target": {"kind": self.target.kind, "vertices": list(self.target.vertices)}}


def tail_bounds(spec: EnumerationSpec) -> tuple[float, float]:
    """Absolute truncation bounds (ghost caps, original caps).

    Writing the spin integrand as a product of per-edge factors each bounded
    by ``B_j`` and truncated with error ``r_j``, telescoping gives
    ``|Z - Z_capped| <= (sum_j r_j) * prod_j B_j`` for every observable
    bounded by one.
    """
    g, p = spec.graph, spec.params
    cap_o, cap_g = spec.caps
    h = p.abs_h
    couplings = [p.coupling(e) for e in g.base.edges]
    log_b = g.n * h + sum(couplings)
    ghost = g.n * taylor_tail(h, cap_g)
    orig = sum(taylor_tail(J, cap_o) for J in couplings)
    scale = math.exp(log_b)
    return ghost * scale, orig * scale


# --- enumeration core -------------------------------------------------------

class _Enumerator:
    def __init__(self, spec: EnumerationSpec, target: StateClass):
        self.spec = spec
        self.g = g = spec.graph
        self.p = p = spec.params
        self.N = p.N
        self.cap_o, self.cap_g = spec.caps
        self.A = frozenset(target.vertices)
        self.target = target
        self.log_h = math.log(p.abs_h) if p.h != 0 else -math.inf
        self.order = sorted(range(g.n_orig_edges), key=lambda e: g.edges[e])
        self.options = [self._edge_options(e) for e in self.order]
        last = {x: -1 for x in range(g.n)}
        for j, e in enumerate(self.order):
            for x in g.edges[e]:
                last[x] = j
        self.finalize: list[list[int]] = [[] for _ in range(len(self.order) + 1)]
        for x, j in last.items():
            self.finalize[j + 1].append(x)
        self._vf_cache: dict = {}

    def _edge_options(self, e: int) -> list[tuple[tuple[int, ...], float]]:
        from .weights import compositions

        J = self.p.coupling(self.g.edges[e])
        opts = []
        for t in range(self.cap_o + 1):
            if t and J == 0:
                break
            base = t * math.log(J) if t else 0.0
            for comp in compositions(t, self.N):
                opts.append((comp, base - sum(math.lgamma(k + 1) for k in comp)))
        return opts

    # per-vertex ghost sum -------------------------------------------------
    def ghost_options(self, counts: Sequence[int], in_A: bool) -> list[tuple[int, float]]:
        """(ghost count, log weight) pairs for a vertex with original colour counts."""
        N, p = self.N, self.p
        u1 = 1 if in_A else 0
        base = 0.0
        for i in range(N - 1):
            qi = counts[i]
            ui = u1 if i == 0 else 0
            if (qi - ui) % 2 or qi < ui:
                return []
            base += log_pairings(qi, ui)
        qN = counts[N - 1]
        uN = u1 if N == 1 else 0
        q = sum(counts)
        out = []
        for gc in range(self.cap_g + 1):
            if (qN + gc - uN) % 2:
                continue
            if gc and self.log_h == -math.inf:
                break
            lw = (base + gc * self.log_h - math.lgamma(gc + 1) + log_pairings(qN + gc, uN)
                  + log_site_weight((q + gc + u1) // 2, N, p.site_weight_error))
            out.append((gc, lw))
        return out

    def vertex_factor(self, counts: tuple[int, ...], in_A: bool) -> tuple[float, int]:
        key = (counts, in_A)
        hit = self._vf_cache.get(key)
        if hit is None:
            opts = self.ghost_options(counts, in_A)
            if opts:
                acc = LogAccumulator()
                for _, lw in opts:
                    acc.add(lw)
                hit = (acc.value, len(opts))
            else:
                hit = (-math.inf, 0)
            self._vf_cache[key] = hit
        return hit

    # DFS over original edges ----------------------------------------------
    def leaves(self, first: int | None = None) -> Iterator[tuple[list, float, list]]:
        """Yield (per-edge colour counts, original-edge log weight, vertex counts).

        Vertices are parity-checked as soon as all their original edges are
        assigned.  ``first`` restricts the outermost edge to one option.
        """
        g, N = self.g, self.N
        counts = [[0] * N for _ in range(g.n)]
        comps: list = [None] * len(self.order)
        for x in self.finalize[0]:
            if not self._feasible(x, counts[x]):
                return
        yield from self._dfs(0, 0.0, counts, comps, first)

    def _feasible(self, x: int, cnt: list[int]) -> bool:
        return bool(self.ghost_options(cnt, x in self.A))

    def _dfs(self, j, logw, counts, comps, first):
        if j == len(self.order):
            yield comps, logw, counts
            return
        e = self.order[j]
        a, b = self.g.edges[e]
        opts = self.options[j]
        if j == 0 and first is not None:
            opts = [opts[first]]
        fin = self.finalize[j + 1]
        for comp, lw in opts:
            ca, cb = counts[a], counts[b]
            for i, k in enumerate(comp):
                ca[i] += k
                cb[i] += k
            if all(self._feasible(x, counts[x]) for x in fin):
                comps[j] = comp
                yield from self._dfs(j + 1, logw + lw, counts, comps, first)
            for i, k in enumerate(comp):
                ca[i] -= k
                cb[i] -= k

    def aggregate_branch(self, first: int | None) -> tuple[float, int]:
        acc = LogAccumulator()
        terms = leaves = 0
        budget = self.spec.budget
        A = self.A
        for _, logw, counts in self.leaves(first):
            total, mult = logw, 1
            for x in range(self.g.n):
                vf, nt = self.vertex_factor(tuple(counts[x]), x in A)
                total += vf
                mult *= nt
            acc.add(total)
            terms += mult
            leaves += 1
            if leaves > budget:
                raise BudgetExceeded(f"more than {budget} original-edge assignments")
        return acc.value, terms

    # explicit configurations ------------------------------------------------
    def configs(self, labelled: bool = False) -> Iterator[tuple[WireConfig, float]]:
        """Every configuration in the target class with its log weight.

        With ``labelled=False`` links on an edge are listed colour-sorted and
        the weight carries the multinomial count of colourings.
        """
        g, N, A = self.g, self.N, self.A
        for comps, _, counts in self.leaves():
            ghost_opts = [[gc for gc, _ in self.ghost_options(counts[x], x in A)] for x in range(g.n)]
            colour_choices = []
            for j, e in enumerate(self.order):
                comp = comps[j]
                canon = [i + 1 for i, k in enumerate(comp) for _ in range(k)]
                if labelled:
                    colour_choices.append(sorted(set(itertools.permutations(canon))))
                else:
                    colour_choices.append([tuple(canon)])
            log_mult = 0.0
            if not labelled:
                for comp in comps:
                    log_mult += math.lgamma(sum(comp) + 1) - sum(math.lgamma(k + 1) for k in comp)
            for ghosts in itertools.product(*ghost_opts):
                for cols in itertools.product(*colour_choices):
                    base = WireConfig.empty(g, N)
                    for j, e in enumerate(self.order):
                        base.m[e] = len(cols[j])
                        base.c[e] = list(cols[j])
                    for x, gc in enumerate(ghosts):
                        ge = g.ghost_edge(x)
                        base.m[ge] = gc
                        base.c[ge] = [N] * gc
                    for w in _all_pairings(g, base, A):
                        yield w, config_log_weight(g, w, self.p) + log_mult


def _matchings(items: list, singles: int) -> Iterator[list[tuple]]:
    """Partial matchings of ``items`` leaving exactly ``singles`` unmatched."""
    if not items:
        if singles == 0:
            yield []
        return
    if (len(items) - singles) % 2 or singles < 0 or singles > len(items):
        return
    head, rest = items[0], items[1:]
    if singles:
        yield from _matchings(rest, singles - 1)
    for j in range(len(rest)):
        other = rest[j]
        for sub in _matchings(rest[:j] + rest[j + 1:], singles):
            yield [(head, other)] + sub


def _all_pairings(g: ExtendedGraph, base: WireConfig, A: frozenset) -> Iterator[WireConfig]:
    groups = []
    for x in range(g.n):
        by_colour: dict[int, list] = {}
        for e in g.incident(x):
            for p_, col in enumerate(base.c[e]):
                by_colour.setdefault(col, []).append((e, p_, x))
        for col, eps in sorted(by_colour.items()):
            singles = 1 if (col == 1 and x in A) else 0
            groups.append(list(_matchings(eps, singles)))
    for choice in itertools.product(*groups):
        w = base.copy()
        for matching in choice:
            for a, b in matching:
                w.pairs[a] = b
                w.pairs[b] = a
        yield w


def _aggregate_worker(args):
    spec, target, branch = args
    return _Enumerator(spec, target).aggregate_branch(branch)


def enumerate_partition(spec: EnumerationSpec, target: StateClass | None = None) -> PartitionResult:
    """log of the total weight of the target class (default: loops only)."""
    target = target or loops_only()
    if target.kind in (StateClass.INVALID, StateClass.OTHER):
        raise ValueError(f"cannot enumerate class {target.kind}")
    en = _Enumerator(spec, target)
    if spec.mode == AGGREGATE:
        log_Z, terms = _aggregate(spec, target, en)
    else:
        acc = LogAccumulator()
        terms = 0
        for w, lw in en.configs():
            acc.add(lw)
            terms += 1
            if terms > spec.budget:
                raise BudgetExceeded(f"more than {spec.budget} configurations")
        log_Z = acc.value
    ghost_tail, orig_tail = tail_bounds(spec)
    return PartitionResult(log_Z, terms, ghost_tail, orig_tail, spec.caps, spec.params, target)


def _aggregate(spec, target, en):
    n_branches = len(en.options[0]) if en.order else 0
    branches = list(range(n_branches)) if n_branches else [None]
    if spec.workers > 1 and len(branches) > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            parts = list(pool.map(_aggregate_worker, [(spec, target, b) for b in branches]))
    else:
        parts = [en.aggregate_branch(b) for b in branches]
    acc = LogAccumulator()
    terms = 0
    for lz, t in parts:
        acc.add(lz)
        terms += t
    return acc.value, terms


@dataclass(frozen=True)
class CorrelationResult:
    value: float
    tail_bound: float
    boltzmann_tail_bound: float
    log_Z_A: float
    log_Z: float


def correlation(spec: EnumerationSpec, A: Sequence[int]) -> CorrelationResult:
    """Z(A)/Z with rigorous bounds on the truncation error.

    ``tail_bound`` is against the model truncated on original edges at the
    same cap; ``boltzmann_tail_bound`` against the exponential interaction.
    """
    A = tuple(sorted(set(A)))
    for x in A:
        if not 0 <= x < spec.graph.n:
            raise VertexOutOfRange(f"vertex {x} not in 0..{spec.graph.n - 1}")
    z0 = enumerate_partition(spec, loops_only())
    if not A:
        return CorrelationResult(1.0, 0.0, 0.0, z0.log_Z, z0.log_Z)
    za = enumerate_partition(spec, open_set(A))
    val = math.exp(za.log_Z - z0.log_Z) if za.log_Z != -math.inf else 0.0
    Z0 = math.exp(z0.log_Z)

    def bound(t):
        return t * (1 + abs(val)) / (Z0 - t) if Z0 > t else math.inf

    return CorrelationResult(val, bound(z0.tail_bound), bound(z0.tail_bound + z0.orig_tail_bound),
                             za.log_Z, z0.log_Z)


def two_point(spec: EnumerationSpec, x: int, y: int) -> float:
    if x == y:
        raise ValueError("two_point needs distinct vertices")
    return correlation(spec, (x, y)).value


# --- expected number of ghost-to-ghost walks --------------------------------

def _exposure_solver(g: ExtendedGraph, y: int):
    """Probability that a walk currently at ``z`` ends on the ghost edge of ``y``.

    ``counts`` holds the number of untouched N-links on every edge.  At each
    vertex the pairing is a uniform perfect matching, so revealing it along
    the walk picks the partner uniformly among the untouched endpoints.
    """
    inc = [g.incident(z) for z in range(g.n)]
    ghost_y = g.ghost_edge(y)

    @lru_cache(maxsize=None)
    def f(z: int, counts: tuple[int, ...]) -> float:
        total = 0
        acc = 0.0
        for e in inc[z]:
            c = counts[e]
            if not c:
                continue
            total += c
            if g.is_ghost_edge(e):
                if e == ghost_y:
                    acc += c
            else:
                nxt = counts[:e] + (c - 1,) + counts[e + 1:]
                acc += c * f(g.other(e, z), nxt)
        return acc / total if total else 0.0

    return f


def expected_Mxy(spec: EnumerationSpec, x: int, y: int, method: str = "exposure") -> float:
    """E[M_xy] under the loops-only probability measure.

    ``method="literal"`` enumerates every pairing and counts walks;
    ``method="exposure"`` sums over colour counts and averages the walk
    count over the uniform pairings by revealing them along the walk.
    """
    if spec.mode != EXPLICIT:
        raise AggregateModeUnsupported("walk counts depend on the pairings; use explicit mode")
    if x == y:
        raise ValueError("x and y must differ")
    if spec.params.h == 0:
        return 0.0
    g = spec.graph
    log_Z = enumerate_partition(spec.with_mode(AGGREGATE), loops_only()).log_Z
    en = _Enumerator(spec, loops_only())
    if method == "literal":
        total = 0.0
        for n_cfg, (w, lw) in enumerate(en.configs(), 1):
            if n_cfg > spec.budget:
                raise BudgetExceeded(f"more than {spec.budget} configurations")
            mxy = count_Mxy(g, w, x, y)
            if mxy:
                total += mxy * math.exp(lw - log_Z)
        return total
    if method != "exposure":
        raise ValueError(f"unknown method {method!r}")
    f = _exposure_solver(g, y)
    N = spec.params.N
    gx = g.ghost_edge(x)
    total = 0.0
    terms = 0
    for comps, logw, counts in en.leaves():
        per_vertex = [en.ghost_options(counts[xx], False) for xx in range(g.n)]
        base_counts = [0] * g.n_edges
        for j, e in enumerate(en.order):
            base_counts[e] = comps[j][N - 1]
        for choice in itertools.product(*per_vertex):
            terms += 1
            if terms > spec.budget:
                raise BudgetExceeded(f"more than {spec.budget} terms")
            mx = choice[x][0]
            if mx == 0:
                continue
            lw = logw + sum(c[1] for c in choice)
            cnt = list(base_counts)
            for xx, (gc, _) in enumerate(choice):
                cnt[g.ghost_edge(xx)] = gc
            cnt[gx] -= 1
            total += mx * f(x, tuple(cnt)) * math.exp(lw - log_Z)
    return total


@dataclass(frozen=True)
class ColourSwitchReport:
    x: int
    y: int
    caps: list[int]
    two_point: list[float]
    walk_ratio: list[float]
    delta: list[float]

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.delta, self.delta[1:]))

    @property
    def final_delta(self) -> float:
        return self.delta[-1]

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "caps": self.caps, "two_point": self.two_point,
                "walk_ratio": self.walk_ratio, "delta": self.delta,
                "strictly_decreasing": self.strictly_decreasing}


def verify_colour_switch(spec: EnumerationSpec, x: int, y: int, cap_sequence: Sequence[int],
                         vary: str = "ghost") -> ColourSwitchReport:
    """Track |G(x,y) - E[M_xy]/h^2| as the caps grow.

    ``vary`` selects which caps follow the sequence: ``"ghost"`` (original
    caps fixed at the values in ``spec``) or ``"both"``.
    """
    h2 = spec.params.h ** 2
    G, R, D = [], [], []
    for cap in cap_sequence:
        s = spec.with_caps(cap_orig=cap if vary == "both" else None, cap_ghost=cap)
        gv = two_point(s.with_mode(AGGREGATE), x, y)
        em = expected_Mxy(s.with_mode(EXPLICIT), x, y)
        ratio = em / h2 if h2 else 0.0
        G.append(gv)
        R.append(ratio)
        D.append(abs(gv - ratio))
    return ColourSwitchReport(x, y, list(cap_sequence), G, R, D)


# --- conditional laws given the original-edge data --------------------------

@dataclass
class VertexLaw:
    """Law of the ghost count at one vertex; pairings are then uniform."""

    vertex: int
    colour_counts: tuple[int, ...]
    ghost_counts: list[int]
    probs: np.ndarray
    log_mass: float

    def pairing_count(self, gc: int) -> int:
        counts = list(self.colour_counts)
        counts[-1] += gc
        out = 1
        for q in counts:
            out *= count_vertex_pairings(q, 0)
        return out


@dataclass
class ConditionalLaw:
    graph: ExtendedGraph
    params: ModelParams
    base: WireConfig
    vertex_laws: list[VertexLaw]
    log_mass: float

    def size(self) -> int:
        """Number of completions, i.e. of entries in :meth:`table`."""
        out = 1
        for law in self.vertex_laws:
            out *= sum(law.pairing_count(gc) for gc in law.ghost_counts)
        return out

    def table(self) -> dict[tuple, float]:
        """Probability of every completion, keyed by ``WireConfig.key()``."""
        g = self.graph
        per_vertex = []
        for law in self.vertex_laws:
            local = []
            for gc, pr in zip(law.ghost_counts, law.probs):
                share = pr / law.pairing_count(gc)
                for pairs in _vertex_pairings(g, self.base, law.vertex, gc):
                    local.append((gc, pairs, share))
            per_vertex.append(local)
        out: dict[tuple, float] = {}
        for choice in itertools.product(*per_vertex):
            w = compose(g, self.base, [(law.vertex, gc, pairs)
                                       for law, (gc, pairs, _) in zip(self.vertex_laws, choice)])
            out[w.key()] = float(np.prod([c[2] for c in choice]))
        return out


def _vertex_pairings(g: ExtendedGraph, base: WireConfig, x: int, gc: int) -> Iterator[list]:
    by_colour: dict[int, list] = {}
    for e in g.incident(x):
        if g.is_ghost_edge(e):
            continue
        for p_, col in enumerate(base.c[e]):
            by_colour.setdefault(col, []).append((e, p_, x))
    ge = g.ghost_edge(x)
    by_colour.setdefault(base.N, []).extend((ge, p_, x) for p_ in range(gc))
    groups = [list(_matchings(eps, 0)) for _, eps in sorted(by_colour.items())]
    for choice in itertools.product(*groups):
        yield [pair for matching in choice for pair in matching]


def compose(g: ExtendedGraph, base: WireConfig, reveals) -> WireConfig:
    """Add ghost links and pairings ``(vertex, ghost count, pairs)`` to ``base``."""
    w = base.copy()
    for x, gc, pairs in reveals:
        ge = g.ghost_edge(x)
        w.m[ge] = gc
        w.c[ge] = [w.N] * gc
        for a, b in pairs:
            w.pairs[a] = b
            w.pairs[b] = a
    return w


def base_config(g: ExtendedGraph, N: int, m_tilde: Sequence[int],
                c_tilde: Sequence[Sequence[int]]) -> WireConfig:
    if len(m_tilde) != g.n_orig_edges or len(c_tilde) != g.n_orig_edges:
        raise InadmissiblePair("original-edge data must cover every original edge")
    w = WireConfig.empty(g, N)
    for e, (me, cols) in enumerate(zip(m_tilde, c_tilde)):
        if len(cols) != me or any(not 1 <= c <= N for c in cols):
            raise InadmissiblePair(f"edge {g.edge_label(e)}: bad colour list")
        w.m[e] = int(me)
        w.c[e] = [int(c) for c in cols]
    return w


def original_colour_counts(g: ExtendedGraph, w: WireConfig, x: int) -> list[int]:
    counts = [0] * w.N
    for e in g.incident(x):
        if not g.is_ghost_edge(e):
            for col in w.c[e]:
                counts[col - 1] += 1
    return counts


def conditional_distribution(spec: EnumerationSpec, m_tilde: Sequence[int],
                             c_tilde: Sequence[Sequence[int]]) -> ConditionalLaw:
    """Law of ghost links and pairings given the links on original edges.

    The weight factorizes over vertices once the original-edge data are
    fixed, so the law is a product of per-vertex laws.
    """
    g, p = spec.graph, spec.params
    base = base_config(g, p.N, m_tilde, c_tilde)
    en = _Enumerator(spec, loops_only())
    log_mass = 0.0
    for e in range(g.n_orig_edges):
        me = base.m[e]
        if me:
            if me > en.cap_o:
                raise InadmissiblePair(f"edge {g.edge_label(e)} exceeds the original cap")
            J = p.coupling(g.edges[e])
            log_mass += me * math.log(J) - math.lgamma(me + 1) if J > 0 else -math.inf
    laws = []
    for x in range(g.n):
        counts = original_colour_counts(g, base, x)
        for i in range(p.N - 1):
            if counts[i] % 2:
                raise InadmissiblePair(f"odd number of {i + 1}-links at vertex {x}")
        opts = en.ghost_options(counts, False)
        if not opts:
            raise InadmissiblePair(f"no ghost completion exists at vertex {x}")
        lws = np.array([lw for _, lw in opts])
        top = lws.max()
        weights = np.exp(lws - top)
        mass = top + math.log(weights.sum())
        laws.append(VertexLaw(x, tuple(counts), [gc for gc, _ in opts],
                              weights / weights.sum(), mass))
        log_mass += mass
    return ConditionalLaw(g, p, base, laws, log_mass)


def exact_table(spec: EnumerationSpec, target: StateClass | None = None) -> dict[tuple, float]:
    """Normalized law of every labelled configuration in the target class."""
    target = target or loops_only()
    en = _Enumerator(spec, target)
    entries = [(w.key(), lw) for w, lw in en.configs(labelled=True)]
    if len(entries) > spec.budget:
        raise BudgetExceeded(f"more than {spec.budget} configurations")
    acc = LogAccumulator()
    for _, lw in entries:
        acc.add(lw)
    log_Z = acc.value
    return {k: math.exp(lw - log_Z) for k, lw in entries}
