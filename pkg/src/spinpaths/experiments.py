"""Experiment drivers: correlation decay, local-time tails and the cross-oracle suite.

Each driver takes an :class:`ExperimentConfig` and returns a report object
with a ``to_json`` method.  Reports contain no timings or host data, so the
same config and seeds give byte-identical JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np

from . import exact_engine as ee
from .errors import InsufficientSignal, NonConvergence, UsageError
from .exploration import final_law, run_many
from .graph_core import ExtendedGraph, Graph, attach_ghost, graph_distance, make_graph
from .spin_oracle import BOLTZMANN, spin_correlation
from .weights import ModelParams, constants_chain
from .wire_model import unlabelled_key
from .worm_mcmc import Schedule, empirical_law, estimate, lump, tv_distance

ENGINES = ("exact", "mcmc", "spin_oracle", "exploration")
H_ZERO_MESSAGE = "h=0: theorem inapplicable"
# relative error floor for the fit weights, so exact rows weigh equally
REL_ERROR_FLOOR = 1e-3


def load_schema(name: str) -> dict:
    text = resources.files("spinpaths").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


# --- configuration -----------------------------------------------------------

@dataclass
class ExperimentConfig:
    """One experiment: a graph sweep, model parameters and an engine.

    ``sizes`` lists the generator arguments of every graph in the sweep.
    ``pair`` is ``"endpoints"`` (vertices 0 and n-1) or an explicit
    ``[x, y]``.  ``interaction`` is ``"boltzmann"`` or a truncation order.
    """

    generator: str = "path"
    sizes: list[list[int]] = field(default_factory=lambda: [[L] for L in range(2, 9)])
    params: dict = field(default_factory=lambda: {"N": 2, "beta": 0.4, "h": 1.0})
    engine: str = "exact"
    pair: Any = "endpoints"
    interaction: Any = 3
    observables: list[str] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [0])
    output: str | None = None
    h_sweep: list[float] = field(default_factory=list)
    h_sweep_sizes: list[list[int]] = field(default_factory=list)
    mcmc: dict = field(default_factory=dict)
    k_grid: list[int] = field(default_factory=list)
    sets: list[list[int]] = field(default_factory=lambda: [[1], [0, 1]])
    d_star: int | None = None
    eps: float = 0.1
    nodes: int = 24
    samples: int = 200_000

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise UsageError(f"unknown engine {self.engine!r}; choose from {ENGINES}")
        try:
            self.model_params()
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad params: {exc}") from None
        for g in self.graphs():
            for v in self._referenced(g):
                if not 0 <= v < g.n:
                    raise UsageError(f"vertex {v} does not exist in a graph with {g.n} vertices")

    def _referenced(self, g: Graph) -> list[int]:
        out = list(self.pair_for(g))
        for s in self.sets:
            out.extend(s)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(obj, load_schema("experiment_config"))
        except jsonschema.ValidationError as exc:
            raise UsageError(f"invalid config: {exc.message}") from None
        return cls(**obj)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(obj)

    def to_json(self) -> dict:
        return asdict(self)

    def model_params(self, **changes) -> ModelParams:
        d = dict(self.params)
        d.update(changes)
        return ModelParams(**d)

    def graphs(self, sizes: Sequence[Sequence[int]] | None = None) -> list[Graph]:
        try:
            return [make_graph(self.generator, *s) for s in (sizes or self.sizes)]
        except (TypeError, ValueError) as exc:
            raise UsageError(str(exc)) from None

    def pair_for(self, g: Graph) -> tuple[int, int]:
        if self.pair == "endpoints":
            return 0, g.n - 1
        x, y = self.pair
        return int(x), int(y)

    def schedule(self) -> Schedule:
        return Schedule(**self.mcmc)


# --- correlation helpers -------------------------------------------------------

@dataclass(frozen=True)
class ConvergedCorrelation:
    value: float
    tail_bound: float
    caps: tuple[int, int]


def converged_correlation(g: ExtendedGraph, p: ModelParams, A: Sequence[int], tol: float = 1e-6,
                          start: int = 4, max_cap: int = 40) -> ConvergedCorrelation:
    """Exact correlation of the exponential interaction, raising both caps
    until the rigorous truncation bound drops below ``tol``."""
    cap_o = start
    cap_g = max(start, ee.default_ghost_cap(p.h))
    while True:
        spec = ee.EnumerationSpec(g, p.with_(cap_orig=cap_o, cap_ghost=cap_g))
        r = ee.correlation(spec, A)
        if r.boltzmann_tail_bound < tol:
            return ConvergedCorrelation(r.value, r.boltzmann_tail_bound, (cap_o, cap_g))
        if cap_o >= max_cap:
            raise NonConvergence(f"tail bound {r.boltzmann_tail_bound:.2e} at caps {cap_o}/{cap_g}")
        cap_o += 2
        cap_g += 2


def _truncation(cfg: ExperimentConfig) -> int | None:
    return None if cfg.interaction == BOLTZMANN else int(cfg.interaction)


def correlation_row(cfg: ExperimentConfig, g: Graph, p: ModelParams) -> tuple[float, float]:
    """(estimate, stderr) of the transverse two-point function for one graph."""
    x, y = cfg.pair_for(g)
    eg = attach_ghost(g)
    if cfg.engine == "exact":
        k = _truncation(cfg)
        if k is not None:
            # links beyond k per edge carry no weight in the truncated model
            r = ee.correlation(ee.EnumerationSpec(eg, p.with_(cap_orig=k)), (x, y))
            return r.value, r.tail_bound
        if p.cap_orig is None:
            c = converged_correlation(eg, p, (x, y))
            return c.value, c.tail_bound
        r = ee.correlation(ee.EnumerationSpec(eg, p), (x, y))
        return r.value, r.boltzmann_tail_bound
    if cfg.engine == "spin_oracle":
        method = "quadrature" if p.N in (2, 3) and g.n <= 8 else "monte_carlo"
        r = spin_correlation(g, p, (x, y), method=method, interaction=cfg.interaction,
                             nodes=cfg.nodes, samples=cfg.samples, seed=cfg.seeds[0])
        return r.estimate, r.stderr
    if cfg.engine == "mcmc":
        if _truncation(cfg) is not None:
            p = p.with_(cap_orig=_truncation(cfg))
        name = f"M:{x}:{y}"
        res = estimate(eg, p, [name], cfg.schedule(), seed=cfg.seeds[0])
        h2 = p.h ** 2
        return res[name].mean / h2, res[name].stderr / h2
    raise UsageError(f"engine {cfg.engine!r} does not compute two-point functions")


# --- decay ---------------------------------------------------------------------

@dataclass
class DecayFit:
    rate: float
    prefactor: float
    covariance: list[list[float]]
    r_squared: float
    residuals: list[float]
    used_rows: int

    def to_json(self) -> dict:
        return asdict(self)


def fit_decay(d: Sequence[float], est: Sequence[float], err: Sequence[float]) -> DecayFit:
    """Weighted least squares of log(estimate) against distance.

    Only rows with ``estimate > 5 * stderr`` enter the fit.  The weight of a
    row is the inverse of its relative error, floored at ``REL_ERROR_FLOOR``.
    """
    d, est, err = (np.asarray(a, dtype=float) for a in (d, est, err))
    keep = est > 5 * err
    if keep.sum() < 2:
        raise InsufficientSignal(f"{int(keep.sum())} rows above the noise floor, need 2")
    d, est, err = d[keep], est[keep], err[keep]
    y = np.log(est)
    sig = np.maximum(err / est, REL_ERROR_FLOOR)
    w = 1.0 / sig
    if len(d) > 3:
        coef, cov = np.polyfit(d, y, 1, w=w, cov=True)
    else:
        coef, cov = np.polyfit(d, y, 1, w=w, cov="unscaled")
    resid = y - np.polyval(coef, d)
    ybar = np.average(y, weights=w ** 2)
    ss_tot = float(np.sum(w ** 2 * (y - ybar) ** 2))
    ss_res = float(np.sum(w ** 2 * resid ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-coef[0]), float(math.exp(coef[1])), np.asarray(cov).tolist(), r2,
                    resid.tolist(), int(len(d)))


@dataclass
class DecayReport:
    h: float
    engine: str
    rows: list[dict]
    fit: DecayFit | None
    monotone: bool
    status: str
    sweep: list[dict] = field(default_factory=list)
    sweep_slope: float | None = None
    passes: bool = False

    def to_json(self) -> dict:
        d = asdict(self)
        d["fit"] = None if self.fit is None else self.fit.to_json()
        return d


def _decay_rows(cfg: ExperimentConfig, p: ModelParams, sizes) -> list[dict]:
    rows = []
    for s, g in zip(sizes, cfg.graphs(sizes)):
        x, y = cfg.pair_for(g)
        est, err = correlation_row(cfg, g, p)
        rows.append({"size": list(s), "distance": graph_distance(g, x, y), "estimate": est,
                     "stderr": err})
    return rows


def _fit_rows(rows: list[dict]) -> DecayFit:
    return fit_decay([r["distance"] for r in rows], [r["estimate"] for r in rows],
                     [r["stderr"] for r in rows])


def run_decay(cfg: ExperimentConfig) -> DecayReport:
    p = cfg.model_params()
    if p.h == 0:
        return DecayReport(0.0, cfg.engine, [], None, False, H_ZERO_MESSAGE)
    rows = _decay_rows(cfg, p, cfg.sizes)
    rows.sort(key=lambda r: r["distance"])
    est = [r["estimate"] for r in rows]
    monotone = all(b < a for a, b in zip(est, est[1:]))
    fit = _fit_rows(rows)
    rep = DecayReport(p.h, cfg.engine, rows, fit, monotone, "fitted")
    ok = monotone and fit.rate > 0 and fit.r_squared > 0.98
    if cfg.h_sweep:
        sizes = cfg.h_sweep_sizes or cfg.sizes
        for h in cfg.h_sweep:
            if h == 0:
                rep.sweep.append({"h": 0.0, "rate": None, "status": H_ZERO_MESSAGE})
                continue
            f = _fit_rows(_decay_rows(cfg, p.with_(h=h), sizes))
            rep.sweep.append({"h": h, "rate": f.rate, "r_squared": f.r_squared, "status": "fitted"})
        pts = [(r["h"], r["rate"]) for r in rep.sweep if r["rate"] is not None and r["rate"] > 0]
        if len(pts) >= 2:
            hs, rs = np.log([a for a, _ in pts]), np.log([b for _, b in pts])
            rep.sweep_slope = float(np.polyfit(hs, rs, 1)[0])
        ok = ok and rep.sweep_slope is not None and 1.5 <= rep.sweep_slope <= 2.5
    rep.passes = bool(ok)
    return rep


# --- local-time tails -------------------------------------------------------

@dataclass
class TailRow:
    k: int
    A: list[int]
    z: int
    probability: float
    probability_stderr: float
    bound: float
    ghost_moment: float
    ghost_moment_stderr: float
    ghost_bound: float
    above_threshold: bool
    vacuous: bool
    violation: bool


@dataclass
class TailReport:
    params: dict
    d_star: int
    threshold: int | None
    rows: list[TailRow]
    passes: bool

    def to_json(self) -> dict:
        return asdict(self)


def run_local_time_tails(cfg: ExperimentConfig) -> TailReport:
    """MCMC estimates of P(n_x >= k for all x in A) and E[m_zg; same event]
    against c1^|A| and h c1^|A|, on the first graph of the sweep."""
    p = cfg.model_params()
    g = cfg.graphs()[0]
    eg = attach_ghost(g)
    d_star = cfg.d_star if cfg.d_star is not None else g.max_degree
    k_grid = cfg.k_grid or [0, 1, 2]
    names = []
    for k in k_grid:
        for A in cfg.sets:
            a = ",".join(map(str, A))
            names += [f"n_ge:{k}:{a}", f"m_n_ge:{A[0]}:{k}:{a}"]
    res = estimate(eg, p, names, cfg.schedule(), seed=cfg.seeds[0])
    threshold = None
    rows = []
    for k in k_grid:
        c1 = constants_chain(p, d_star, k, cfg.eps).c1
        if c1 < 1 and threshold is None:
            threshold = k
        for A in cfg.sets:
            a = ",".join(map(str, A))
            pr, mo = res[f"n_ge:{k}:{a}"], res[f"m_n_ge:{A[0]}:{k}:{a}"]
            bound = c1 ** len(A)
            gbound = p.abs_h * bound
            viol = pr.mean > bound + 3 * pr.stderr or mo.mean > gbound + 3 * mo.stderr
            rows.append(TailRow(k, list(A), A[0], pr.mean, pr.stderr, bound, mo.mean, mo.stderr,
                                gbound, c1 < 1, k == 0 or bound >= 1, bool(viol)))
    return TailReport(p.to_json(), d_star, threshold, rows, not any(r.violation for r in rows))


# --- verification suite --------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    verdict: str
    value: float
    threshold: float
    details: dict = field(default_factory=dict)


@dataclass
class SuiteReport:
    preset: str
    mutation: float
    checks: list[CheckResult]

    @property
    def passes(self) -> bool:
        return all(c.verdict == "PASS" for c in self.checks)

    def to_json(self) -> dict:
        return {"preset": self.preset, "mutation": self.mutation, "passes": self.passes,
                "checks": [asdict(c) for c in self.checks]}


PRESETS = {
    "desk": {"betas": [0.2, 0.5], "hs": [0.5, 1.0], "Ns": [2, 3], "sizes": [2, 3],
             "mcmc_steps": 500_000, "explore_runs": 50_000},
    "beta0": {"betas": [0.0], "hs": [1.0], "Ns": [2, 3], "sizes": [2, 3],
              "mcmc_steps": 200_000, "explore_runs": 20_000},
}


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _oracle_check(pre: dict, mutation: float) -> CheckResult:
    worst, rows = 0.0, []
    ok = True
    for L in pre["sizes"]:
        g = make_graph("path", L)
        eg = attach_ghost(g)
        for N in pre["Ns"]:
            for beta in pre["betas"]:
                for h in pre["hs"]:
                    p = ModelParams(N, beta, h)
                    ex = converged_correlation(eg, p.with_(site_weight_error=mutation), (0, L - 1))
                    sp = spin_correlation(g, p, (0, L - 1))
                    diff = abs(ex.value - sp.estimate)
                    tol = max(1e-3, 3 * sp.stderr + ex.tail_bound)
                    ok &= diff <= tol
                    worst = max(worst, diff)
                    rows.append({"L": L, "N": N, "beta": beta, "h": h, "exact": ex.value,
                                 "oracle": sp.estimate, "diff": diff, "tol": tol})
    return CheckResult("enumeration_vs_spin_integral", _verdict(ok), worst, 1e-3, {"rows": rows})


SUITE_SWITCH_CAPS = (2, 4, 6)


def _colour_switch_check(pre: dict, mutation: float) -> CheckResult:
    """Delta along ghost caps of one parity; both ends of the odd/even
    alternation decrease geometrically."""
    ok, worst, rows = True, 0.0, []
    for L in pre["sizes"]:
        eg = attach_ghost(make_graph("path", L))
        for N in pre["Ns"]:
            p = ModelParams(N, max(pre["betas"]), max(pre["hs"]), cap_orig=4,
                            site_weight_error=mutation)
            rep = ee.verify_colour_switch(ee.EnumerationSpec(eg, p), 0, L - 1, SUITE_SWITCH_CAPS)
            good = rep.final_delta < 1e-3 and (rep.strictly_decreasing or max(rep.delta) < 1e-12)
            ok &= good
            worst = max(worst, rep.final_delta)
            rows.append({"L": L, "N": N, **rep.to_json()})
    return CheckResult("colour_switch", _verdict(ok), worst, 1e-3, {"rows": rows})


def _exploration_check(pre: dict, mutation: float, seed: int) -> CheckResult:
    eg = attach_ghost(make_graph("path", 2))
    beta = max(pre["betas"])
    p = ModelParams(2, beta, 1.0, cap_orig=2, cap_ghost=2)
    m, c = ([2], [[2, 2]]) if beta > 0 else ([0], [[]])
    exact = ee.conditional_distribution(ee.EnumerationSpec(eg, p), m, c).table()
    traces = run_many(eg, p.with_(site_weight_error=mutation), m, c, pre["explore_runs"], seed=seed)
    tv = tv_distance(final_law(traces), exact)
    return CheckResult("exploration_law", _verdict(tv <= 0.02), tv, 0.02,
                       {"runs": pre["explore_runs"], "states": len(exact)})


def _mcmc_check(pre: dict, mutation: float, seed: int) -> CheckResult:
    rows, worst = [], 0.0
    for L in pre["sizes"]:
        eg = attach_ghost(make_graph("path", L))
        p = ModelParams(2, max(pre["betas"]), 1.0, cap_orig=2, cap_ghost=2)
        exact = lump(ee.exact_table(ee.EnumerationSpec(eg, p)), unlabelled_key)
        emp = lump(empirical_law(eg, p.with_(site_weight_error=mutation), pre["mcmc_steps"], seed),
                   unlabelled_key)
        tv = tv_distance(emp, exact)
        worst = max(worst, tv)
        rows.append({"L": L, "tv": tv, "states": len(exact)})
    return CheckResult("mcmc_stationarity", _verdict(worst <= 0.02), worst, 0.02,
                       {"rows": rows, "steps": pre["mcmc_steps"]})


def run_verification_suite(cfg: ExperimentConfig | None = None, preset: str = "desk",
                           mutation: float = 0.0) -> SuiteReport:
    """Cross-oracle checks; failures are verdicts, not exceptions.

    ``mutation`` multiplies every site weight U(r), r >= 1, by
    ``1 + mutation`` in the engine under test, never in the reference.
    """
    if preset not in PRESETS:
        raise UsageError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    pre = PRESETS[preset]
    seed = cfg.seeds[0] if cfg is not None else 0
    checks = [_oracle_check(pre, mutation), _colour_switch_check(pre, mutation),
              _exploration_check(pre, mutation, seed), _mcmc_check(pre, mutation, seed)]
    return SuiteReport(preset, mutation, checks)
