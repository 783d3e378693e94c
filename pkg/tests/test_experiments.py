import math

import jsonschema
import numpy as np
import pytest

from spinpaths.errors import InsufficientSignal, UsageError
from spinpaths.experiments import (H_ZERO_MESSAGE, ExperimentConfig, converged_correlation,
                                   correlation_row, fit_decay, load_schema, run_decay,
                                   run_local_time_tails)
from spinpaths.graph_core import attach_ghost, path_graph
from spinpaths.spin_oracle import spin_correlation
from spinpaths.weights import ModelParams, constants_chain


def test_fit_recovers_exact_exponential():
    d = np.arange(1, 8)
    est = 0.7 * np.exp(-1.3 * d)
    fit = fit_decay(d, est, est * 1e-3)
    assert fit.rate == pytest.approx(1.3, rel=1e-10)
    assert fit.prefactor == pytest.approx(0.7, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.used_rows == 7


def test_fit_drops_noise_dominated_rows():
    d = [1, 2, 3, 4]
    est = [0.5, 0.2, 0.01, 0.001]
    err = [0.01, 0.01, 0.01, 0.01]
    assert fit_decay(d, est, err).used_rows == 2
    with pytest.raises(InsufficientSignal):
        fit_decay(d, est, [0.2, 0.2, 0.2, 0.2])


def test_zero_field_report():
    rep = run_decay(ExperimentConfig(params={"N": 2, "beta": 0.4, "h": 0.0}))
    assert rep.status == H_ZERO_MESSAGE
    assert rep.rows == [] and not rep.passes


def test_config_validation():
    with pytest.raises(UsageError):
        ExperimentConfig(engine="bogus")
    with pytest.raises(UsageError):
        ExperimentConfig(pair=[0, 5], sizes=[[3]])
    with pytest.raises(UsageError):
        ExperimentConfig.from_dict({"nonsense": 1})
    with pytest.raises(UsageError):
        ExperimentConfig(params={"N": 0, "beta": 0.1, "h": 1.0})
    cfg = ExperimentConfig.from_dict({"sizes": [[2], [3]], "params": {"N": 3, "beta": 0.2, "h": 0.5}})
    assert cfg.model_params() == ModelParams(3, 0.2, 0.5)
    assert cfg.pair_for(path_graph(3)) == (0, 2)


def test_config_from_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"engine": "spin_oracle", "sizes": [[2]]}')
    assert ExperimentConfig.from_file(path).engine == "spin_oracle"
    path.write_text("{not json")
    with pytest.raises(UsageError):
        ExperimentConfig.from_file(path)


def test_converged_correlation_matches_oracle():
    g = path_graph(3)
    p = ModelParams(2, 0.5, 0.8)
    ex = converged_correlation(attach_ghost(g), p, (0, 2), tol=1e-8)
    assert ex.tail_bound < 1e-8
    assert ex.value == pytest.approx(spin_correlation(g, p, (0, 2)).estimate, abs=1e-8)


def test_engines_agree_on_truncated_model():
    g = path_graph(3)
    p = ModelParams(2, 0.4, 1.0)
    exact = correlation_row(ExperimentConfig(engine="exact", sizes=[[3]]), g, p)
    oracle = correlation_row(ExperimentConfig(engine="spin_oracle", sizes=[[3]]), g, p)
    assert abs(exact[0] - oracle[0]) <= exact[1] + 3 * oracle[1] + 1e-9
    boltz = correlation_row(ExperimentConfig(engine="exact", interaction="boltzmann", sizes=[[3]]), g, p)
    ref = spin_correlation(g, p, (0, 2)).estimate
    assert abs(boltz[0] - ref) <= boltz[1] + 1e-9


def test_decay_report_validates():
    cfg = ExperimentConfig(sizes=[[L] for L in range(2, 6)], h_sweep=[0.5, 1.0],
                           h_sweep_sizes=[[2], [3], [4]])
    rep = run_decay(cfg)
    assert rep.monotone and rep.fit.rate > 0
    assert len(rep.sweep) == 2 and rep.sweep_slope is not None
    jsonschema.validate(rep.to_json(), load_schema("decay_report"))


def test_constants_report_validates():
    rep = constants_chain(ModelParams(2, 0.5, 0.5), 2, 6).to_json()
    jsonschema.validate(rep, load_schema("constants_report"))


def test_local_time_tails_small_run():
    cfg = ExperimentConfig(engine="mcmc", sizes=[[3]], params={"N": 2, "beta": 0.1, "h": 0.5},
                           k_grid=[0, 1, 2], mcmc={"burn_in": 2000, "thin": 5, "steps": 100_000})
    rep = run_local_time_tails(cfg)
    assert len(rep.rows) == 3 * len(cfg.sets)
    k0 = [r for r in rep.rows if r.k == 0]
    assert all(r.probability == 1.0 and r.vacuous for r in k0)
    probs = [r.probability for r in rep.rows if r.A == [1]]
    assert all(b <= a for a, b in zip(probs, probs[1:]))
    assert rep.passes
    assert math.isfinite(rep.rows[-1].bound)
