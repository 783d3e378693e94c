"""Scalar weights of the path measure and the explicit bound constants.

Everything is computed in log space.  ``U(r) = Gamma(N/2) / (2^r Gamma(r + N/2))``
is the on-site weight of a vertex with local time ``r`` and
``X(n) = prod (2 n_i - 1)!! * Gamma(N/2) / (2^|n| Gamma(|n| + N/2))`` is the
moment ``E[prod (phi^i)^(2 n_i)]`` of a uniform point on the unit sphere.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import FieldZero, InvalidState
from .graph_core import Edge, ExtendedGraph, canonical_edge
from .wire_model import StateClass, WireConfig, classify, local_times

LOG2 = math.log(2.0)
_LGAMMA_HALF = math.lgamma(0.5)


@dataclass(frozen=True)
class ModelParams:
    """Model parameters.

    ``couplings`` optionally overrides ``beta`` edge by edge.  ``cap_orig`` and
    ``cap_ghost`` bound the number of links per original / ghost edge (``None``
    means no cap).  ``site_weight_error`` is a test hook: when nonzero every
    ``U(r)`` with ``r >= 1`` is multiplied by ``1 + site_weight_error``.
    """

    N: int
    beta: float = 0.0
    h: float = 0.0
    couplings: Mapping[Edge, float] | None = None
    cap_orig: int | None = None
    cap_ghost: int | None = None
    site_weight_error: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        for cap in (self.cap_orig, self.cap_ghost):
            if cap is not None and cap < 0:
                raise ValueError("caps must be nonnegative")
        if self.couplings is not None:
            norm = {canonical_edge(*e): float(v) for e, v in dict(self.couplings).items()}
            if any(v < 0 for v in norm.values()):
                raise ValueError("couplings must be nonnegative")
            object.__setattr__(self, "couplings", norm)

    @property
    def abs_h(self) -> float:
        return abs(self.h)

    def coupling(self, edge: Edge) -> float:
        if self.couplings is not None:
            return self.couplings.get(canonical_edge(*edge), self.beta)
        return self.beta

    @property
    def max_coupling(self) -> float:
        vals = [self.beta] + list((self.couplings or {}).values())
        return max(vals)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_json(self) -> dict:
        d = asdict(self)
        if self.couplings is not None:
            d["couplings"] = [[u, v, j] for (u, v), j in sorted(self.couplings.items())]
        return d


# --- log-domain special functions -------------------------------------------

def log_site_weight(r: int, N: int, error: float = 0.0) -> float:
    val = math.lgamma(N / 2) - r * LOG2 - math.lgamma(r + N / 2)
    if error and r >= 1:
        val += math.log1p(error)
    return val


def site_weight(r: int, N: int) -> float:
    return math.exp(log_site_weight(r, N))


def log_odd_double_factorial(n: int) -> float:
    """log((2n - 1)!!), with (-1)!! = 1."""
    return math.lgamma(2 * n + 1) - n * LOG2 - math.lgamma(n + 1)


def log_sphere_moment(n: Sequence[int]) -> float:
    N = len(n)
    s = sum(n)
    return (sum(log_odd_double_factorial(k) for k in n)
            + math.lgamma(N / 2) - s * LOG2 - math.lgamma(s + N / 2))


def sphere_moment(n: Sequence[int]) -> float:
    return math.exp(log_sphere_moment(n))


def sphere_monomial_mean(powers: Sequence[int]) -> float:
    """E[prod (phi^i)^(a_i)] for phi uniform on the sphere; zero if any a_i is odd."""
    if any(a % 2 for a in powers):
        return 0.0
    return sphere_moment([a // 2 for a in powers])


def log_pairings(q: int, u: int) -> float:
    v = (q - u) // 2
    return math.lgamma(q + 1) - math.lgamma(u + 1) - v * LOG2 - math.lgamma(v + 1)


def log_gamma_ratio(k: float, a: float, b: float) -> float:
    """log(Gamma(k + a) / Gamma(k + b)), accurate also for huge ``k``."""
    if k < 1e7:
        return math.lgamma(k + a) - math.lgamma(k + b)
    d = a - b
    return d * math.log(k) + d * (a + b - 1) / (2 * k)


def logsumexp(values: Iterable[float]) -> float:
    vals = [v for v in values if v != -math.inf]
    if not vals:
        return -math.inf
    top = max(vals)
    return top + math.log(math.fsum(math.exp(v - top) for v in vals))


class LogAccumulator:
    """Running log-sum-exp that keeps a compensated sum relative to a pivot."""

    __slots__ = ("pivot", "parts")

    def __init__(self):
        self.pivot = -math.inf
        self.parts: list[float] = []

    def add(self, logv: float) -> None:
        if logv == -math.inf:
            return
        if logv > self.pivot:
            if self.pivot != -math.inf:
                scale = math.exp(self.pivot - logv)
                self.parts = [p * scale for p in self.parts]
            self.pivot = logv
        self.parts.append(math.exp(logv - self.pivot))

    def merge(self, other: "LogAccumulator") -> None:
        self.add(other.value)

    @property
    def value(self) -> float:
        if not self.parts:
            return -math.inf
        return self.pivot + math.log(math.fsum(self.parts))


# --- configuration weight ---------------------------------------------------

def config_log_weight(g: ExtendedGraph, w: WireConfig, p: ModelParams) -> float:
    """log of the path-measure weight of a configuration in the allowed space."""
    cls = classify(g, w)
    if cls.kind == StateClass.INVALID:
        raise InvalidState("configuration is outside the allowed state space")
    total = 0.0
    for e in range(g.n_orig_edges):
        me = w.m[e]
        if me:
            J = p.coupling(g.edges[e])
            if J == 0:
                return -math.inf
            total += me * math.log(J) - math.lgamma(me + 1)
    for x in range(g.n):
        mg = w.m[g.ghost_edge(x)]
        if mg:
            if p.h == 0:
                return -math.inf
            total += mg * math.log(p.abs_h) - math.lgamma(mg + 1)
    n = local_times(g, w).total
    total += sum(log_site_weight(int(n[x]), p.N, p.site_weight_error) for x in range(g.n))
    return total


# --- compositions and the sup/inf of sphere moments ------------------------

def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of ``parts`` nonnegative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def x_sup(k: int, N: int) -> float:
    """Largest sphere moment over all exponent vectors with total ``k``."""
    return max(sphere_moment(n) for n in compositions(k, N))


def log_x_sup_closed(k: float, N: int) -> float:
    """log X_sup(k), attained at the concentrated vector (k, 0, ..., 0).

    Moving one unit from a smaller exponent to a larger one multiplies the
    moment by (2a + 1)/(2b - 1) >= 1, so concentration maximizes it.
    """
    return log_gamma_ratio(k, 0.5, N / 2) + math.lgamma(N / 2) - _LGAMMA_HALF


def script_K(d_star: int, N: int) -> float:
    """inf of the sphere moment over exponent vectors with total <= (d*+1)/2."""
    top = (d_star + 1) // 2
    return min(sphere_moment(n) for s in range(top + 1) for n in compositions(s, N))


# --- constants chain ---------------------------------------------------------

FORMULAS = {
    "X_sup_k": "max{X(n) : n_1+...+n_N = k}",
    "K_script": "min{X(n) : n_1+...+n_N <= (d*+1)/2}",
    "c1": "X_sup(k) * exp(h + N*beta*(d*+1)) / K_script",
    "c5_upper": "(k+2)/h^2",
    "c4_lower": "1/(1 + c5_upper) = h^2/(h^2 + k + 2)",
    "c6": "c4_lower/(k+1)",
    "c3": "(1/40) * c4_lower * min{log(1/c1), 1}",
    "K_threshold": "least k with 2*d* * c1(k)^eps < exp(-1)",
    "K0_threshold": "least k with c1(k) < exp(-1) at h = 1",
}


@dataclass(frozen=True)
class ConstantsReport:
    N: int
    beta: float
    h: float
    d_star: int
    k: int
    eps: float
    X_sup_k: float
    K_script: float
    c1: float
    c5_upper: float
    c4_lower: float
    c6: float
    c3: float | None
    path_condition: bool
    K_threshold: int | None
    K0_threshold: int | None
    # c5, c4, c6 as exact fractions of the binary value of h
    rational: dict = field(default_factory=dict)
    formulas: dict = field(default_factory=lambda: dict(FORMULAS))

    def to_json(self) -> dict:
        return asdict(self)


def log_c1(k: float, N: int, beta: float, h: float, d_star: int) -> float:
    return (log_x_sup_closed(k, N) + abs(h) + N * beta * (d_star + 1)
            - math.log(script_K(d_star, N)))


def _least_k(pred, limit: int = 10**40) -> int | None:
    """Smallest integer k >= 0 with ``pred(k)``, for a monotone predicate."""
    if pred(0):
        return 0
    hi = 1
    while not pred(hi):
        hi *= 2
        if hi > limit:
            return None
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def constants_chain(p: ModelParams, d_star: int, k: int, eps: float = 0.1) -> ConstantsReport:
    h = p.abs_h
    if h == 0:
        raise FieldZero("the constants chain needs a nonzero field")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    N, beta = p.N, p.max_coupling
    xs = x_sup(k, N)
    kk = script_K(d_star, N)
    c1 = xs * math.exp(h + N * beta * (d_star + 1)) / kk
    h2 = Fraction(h) ** 2
    c5_q = (k + 2) / h2
    c4_q = 1 / (1 + c5_q)
    c6_q = c4_q / (k + 1)
    c5, c4, c6 = float(c5_q), float(c4_q), float(c6_q)
    c3 = c4 * min(math.log(1.0 / c1), 1.0) / 40 if c1 < 1 else None
    cond = math.log(2 * d_star) + eps * math.log(c1) < -1 if d_star > 0 else True
    K = _least_k(lambda t: math.log(2 * max(d_star, 1)) + eps * log_c1(t, N, beta, h, d_star) < -1)
    K0 = _least_k(lambda t: log_c1(t, N, beta, 1.0, d_star) < -1)
    rational = {"c5_upper": str(c5_q), "c4_lower": str(c4_q), "c6": str(c6_q)}
    return ConstantsReport(N, beta, p.h, d_star, k, eps, xs, kk, c1, c5, c4, c6, c3,
                           bool(cond), K, K0, rational)
