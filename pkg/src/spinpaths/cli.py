"""Command-line entry point: ``spinpaths <subcommand> [options]``.

Exit codes: 0 on success or PASS, 1 when a check fails, 2 on usage errors.
Reports are JSON with sorted keys; tables go to CSV and figures to PNG
next to the JSON file.  Without ``--output`` the JSON is printed, unless
``SPINPATHS_OUTPUT_DIR`` names a directory, in which case the report is
written there as ``<subcommand>.json``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from . import exact_engine as ee
from .errors import SpinPathsError, UsageError
from .experiments import (ExperimentConfig, run_decay, run_local_time_tails,
                          run_verification_suite)
from .exploration import death_statistics, domination_check, final_law, run_many
from .graph_core import attach_ghost, graph_from_json, make_graph
from .spin_oracle import BOLTZMANN, spin_correlation
from .weights import ModelParams, constants_chain
from .worm_mcmc import Schedule, estimate, tv_distance

OUTPUT_ENV = "SPINPATHS_OUTPUT_DIR"
# largest conditional table compared against the exploration output
MAX_TABLE = 100_000
SUBCOMMANDS = ("enumerate", "oracle", "mcmc", "explore", "decay", "tails", "verify", "constants")


# --- output helpers ------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def atomic_write(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _report_path(args) -> Path | None:
    if args.output:
        return Path(args.output)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env) / f"{args.command}.json"
    return None


def emit(args, report: dict, tables: dict[str, tuple] | None = None, figures=None) -> None:
    """Write the JSON report, sibling CSV tables and figures, or print the JSON."""
    path = _report_path(args)
    text = dumps(report)
    if path is None:
        sys.stdout.write(text)
        return
    atomic_write(path, text)
    for suffix, (header, rows) in (tables or {}).items():
        atomic_write(path.with_name(f"{path.stem}{suffix}.csv"), csv_text(header, rows))
    for suffix, fn in (figures or {}).items():
        fn(report, path.with_name(f"{path.stem}{suffix}.png"))
    print(f"wrote {path}")


# --- argument helpers ------------------------------------------------------------

def parse_graph(text: str):
    if text.endswith(".json"):
        return graph_from_json(text)
    name, *rest = text.split(":")
    try:
        ints = [int(t) for t in ",".join(rest).split(",") if t]
    except ValueError:
        raise UsageError(f"bad graph spec {text!r}; use e.g. path:3 or grid:3,3") from None
    try:
        return make_graph(name, *ints)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _model_args(p: argparse.ArgumentParser, caps: bool = True) -> None:
    p.add_argument("--graph", default="path:2", help="generator:args (path:3, grid:2,3) or a JSON file")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--h", type=float, default=1.0)
    if caps:
        p.add_argument("--cap-orig", type=int, default=None)
        p.add_argument("--cap-ghost", type=int, default=None)
    p.add_argument("--mutation", type=float, default=0.0,
                   help="relative error injected into every site weight U(r), r >= 1")


def _params(args) -> ModelParams:
    try:
        return ModelParams(args.N, args.beta, args.h, cap_orig=getattr(args, "cap_orig", None),
                           cap_ghost=getattr(args, "cap_ghost", None),
                           site_weight_error=args.mutation)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _mcmc_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--batches", type=int, default=50)


def _config(args) -> ExperimentConfig:
    obj = {}
    if args.config:
        try:
            obj = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    params = dict(obj.get("params", {"N": 2, "beta": 0.4, "h": 1.0}))
    for key in ("N", "beta", "h"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    obj["params"] = params
    if getattr(args, "engine", None):
        obj["engine"] = args.engine
    if getattr(args, "sizes", None):
        obj["sizes"] = [[L] for L in int_list(args.sizes)]
    if getattr(args, "h_sweep", None):
        obj["h_sweep"] = float_list(args.h_sweep)
    if getattr(args, "k_grid", None):
        obj["k_grid"] = int_list(args.k_grid)
    if getattr(args, "seed", None) is not None:
        obj["seeds"] = [args.seed]
    return ExperimentConfig.from_dict(obj)


# --- subcommands ---------------------------------------------------------------

def cmd_enumerate(args) -> int:
    g = attach_ghost(parse_graph(args.graph))
    p = _params(args)
    if p.cap_orig is None:
        p = p.with_(cap_orig=6)
    spec = ee.EnumerationSpec(g, p, mode=args.mode, budget=args.budget)
    out = {"partition": ee.enumerate_partition(spec).to_json()}
    if args.A:
        r = ee.correlation(spec.with_mode(ee.AGGREGATE), int_list(args.A))
        out["correlation"] = r.__dict__
    emit(args, out)
    return 0


def cmd_oracle(args) -> int:
    g = parse_graph(args.graph)
    p = _params(args)
    inter = BOLTZMANN if args.interaction == BOLTZMANN else int(args.interaction)
    r = spin_correlation(g, p, int_list(args.A), method=args.method, interaction=inter,
                         nodes=args.nodes, samples=args.samples, seed=args.seed)
    emit(args, r.to_json())
    return 0


def cmd_mcmc(args) -> int:
    g = attach_ghost(parse_graph(args.graph))
    p = _params(args)
    sched = Schedule(args.burn_in, args.thin, args.steps, args.batches)
    obs = args.observable or ["m:0"]
    path = _report_path(args)
    trace = None
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        trace = path.with_name(f"{path.stem}_trace.csv")
    res = estimate(g, p, obs, sched, seed=args.seed, check=not args.no_check, trace_path=trace)
    emit(args, res.to_json())
    return 0


def _edge_data(args, n_edges: int) -> tuple[list[int], list[list[int]]]:
    cols = [int_list(part) for part in args.colours.split(";")] if args.colours else []
    cols += [[] for _ in range(n_edges - len(cols))]
    if len(cols) != n_edges:
        raise UsageError(f"colour lists for {len(cols)} edges, graph has {n_edges}")
    return [len(c) for c in cols], cols


def cmd_explore(args) -> int:
    g = attach_ghost(parse_graph(args.graph))
    p = _params(args)
    m, c = _edge_data(args, g.n_orig_edges)
    if p.cap_orig is None:
        p = p.with_(cap_orig=max([4] + m))
    traces = run_many(g, p, m, c, args.runs, seed=args.seed, x0=args.x0, k=args.k)
    c6 = args.c6 if args.c6 is not None else constants_chain(p, g.base.max_degree, args.k).c6
    deaths = death_statistics(traces, args.k, c6)
    dom = domination_check(traces, c6, int_list(args.ell), list(range(1, args.rmax + 1)), args.k)
    law = ee.conditional_distribution(ee.EnumerationSpec(g, p), m, c)
    law_tv = tv_distance(final_law(traces), law.table()) if law.size() <= MAX_TABLE else None
    report = {"runs": args.runs, "seed": args.seed, "k": args.k, "c6": c6,
              "death": deaths.to_json(), "domination": dom.to_json(), "law_tv": law_tv}
    path = _report_path(args)
    if args.dump and traces:
        traces[0].dump_jsonl(args.dump, g)
    rows = [(r.ell, r.r, r.empirical, r.bound, r.stderr, r.violation) for r in dom.rows]
    from .plotting import domination_figure
    emit(args, report, {"_domination": (["ell", "r", "empirical", "bound", "stderr", "violation"], rows)},
         {"_domination": lambda rep, pth: domination_figure(rep["domination"], pth)} if path else None)
    return 0 if deaths.passes and dom.passes else 1


def cmd_decay(args) -> int:
    from .plotting import decay_figure
    rep = run_decay(_config(args)).to_json()
    rows = [(r["distance"], r["estimate"], r["stderr"]) for r in rep["rows"]]
    tables = {"_rows": (["distance", "estimate", "stderr"], rows)}
    if rep["sweep"]:
        tables["_sweep"] = (["h", "rate"], [(r["h"], r["rate"]) for r in rep["sweep"]])
    emit(args, rep, tables, {"": decay_figure} if rep["rows"] else None)
    return 0 if rep["passes"] or rep["status"] != "fitted" else 1


def cmd_tails(args) -> int:
    from .plotting import tails_figure
    rep = run_local_time_tails(_config(args)).to_json()
    header = ["k", "A", "probability", "probability_stderr", "bound", "ghost_moment",
              "ghost_moment_stderr", "ghost_bound", "vacuous", "violation"]
    rows = [[r[hname] if hname != "A" else ",".join(map(str, r["A"])) for hname in header]
            for r in rep["rows"]]
    emit(args, rep, {"_rows": (header, rows)}, {"": tails_figure})
    return 0 if rep["passes"] else 1


def cmd_verify(args) -> int:
    cfg = ExperimentConfig(seeds=[args.seed])
    rep = run_verification_suite(cfg, preset=args.preset, mutation=args.mutation).to_json()
    rows = [(c["name"], c["verdict"], c["value"], c["threshold"]) for c in rep["checks"]]
    emit(args, rep, {"_checks": (["name", "verdict", "value", "threshold"], rows)})
    for name, verdict, value, thr in rows:
        print(f"{verdict} {name} value={value:.3e} threshold={thr:g}", file=sys.stderr)
    return 0 if rep["passes"] else 1


def cmd_constants(args) -> int:
    try:
        p = ModelParams(args.N, args.beta, args.h)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    emit(args, constants_chain(p, args.dstar, args.k, args.eps).to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinpaths", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--output", "-o", default=None, help="JSON report path")
        p.set_defaults(func=fn)
        return p

    p = add("enumerate", cmd_enumerate, "exact partition functions and correlations")
    _model_args(p)
    p.add_argument("--A", default="", help="comma-separated source vertices")
    p.add_argument("--mode", choices=[ee.AGGREGATE, ee.EXPLICIT], default=ee.AGGREGATE)
    p.add_argument("--budget", type=int, default=ee.DEFAULT_BUDGET)

    p = add("oracle", cmd_oracle, "spin correlations by quadrature or Monte Carlo")
    _model_args(p, caps=False)
    p.add_argument("--A", default="0,1")
    p.add_argument("--method", choices=["quadrature", "monte_carlo"], default="quadrature")
    p.add_argument("--interaction", default=BOLTZMANN, help="'boltzmann' or a truncation order")
    p.add_argument("--nodes", type=int, default=24)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)

    p = add("mcmc", cmd_mcmc, "worm-type Markov chain estimates")
    _model_args(p)
    _mcmc_args(p)
    p.add_argument("--observable", action="append",
                   help="M:x:y, m:z, n_ge:k:a,b, m_n_ge:z:k:a,b or E:x:y:eps:k (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-check", action="store_true", help="skip the equilibration check")

    p = add("explore", cmd_explore, "walk-tracking exploration, death and domination statistics")
    _model_args(p)
    p.add_argument("--colours", default="", help="colours of the links per original edge, "
                   "edges separated by ';' (e.g. '2,2;' for two N-links on the first edge)")
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--x0", type=int, default=0)
    p.add_argument("--c6", type=float, default=None)
    p.add_argument("--ell", default="1,2,3")
    p.add_argument("--rmax", type=int, default=20)
    p.add_argument("--dump", default=None, help="JSON-lines dump of the first trace")
    p.add_argument("--seed", type=int, default=0)

    for name, fn, help_ in (("decay", cmd_decay, "correlation decay and rate fits"),
                            ("tails", cmd_tails, "local-time tail probabilities versus bounds")):
        p = add(name, fn, help_)
        p.add_argument("--config", default=None, help="ExperimentConfig JSON file")
        p.add_argument("--N", type=int, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--h", type=float, default=None)
        p.add_argument("--engine", default=None)
        p.add_argument("--sizes", default=None, help="comma-separated path lengths")
        p.add_argument("--seed", type=int, default=None)
        if name == "decay":
            p.add_argument("--h-sweep", default=None, help="comma-separated field values")
        else:
            p.add_argument("--k-grid", default=None)

    p = add("verify", cmd_verify, "cross-oracle verification suite")
    p.add_argument("--preset", default="desk")
    p.add_argument("--mutation", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)

    p = add("constants", cmd_constants, "explicit constants of the bound chain")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dstar", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    return ap


def cli_main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        # bad input values (out-of-range vertices, zero field, ...) count as usage errors
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SpinPathsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    run()
