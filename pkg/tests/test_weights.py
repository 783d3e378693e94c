import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinpaths.errors import FieldZero, InvalidState
from spinpaths.graph_core import attach_ghost, path_graph
from spinpaths.weights import (LogAccumulator, ModelParams, compositions, config_log_weight,
                               constants_chain, log_c1, log_x_sup_closed, logsumexp, script_K,
                               site_weight, sphere_moment, sphere_monomial_mean, x_sup)
from spinpaths.wire_model import WireConfig


def test_site_weight_values():
    assert site_weight(0, 3) == pytest.approx(1.0)
    assert site_weight(1, 2) == pytest.approx(0.5)
    assert site_weight(1, 3) == pytest.approx(1 / 3)
    assert site_weight(3, 2) == pytest.approx(1 / (8 * 6))
    assert site_weight(2, 4) == pytest.approx(1 / (4 * 2 * 3))


@pytest.mark.parametrize("N", [1, 2, 3, 5])
def test_sphere_moments_low_order(N):
    assert sphere_moment([0] * N) == pytest.approx(1.0)
    assert sphere_moment([1] + [0] * (N - 1)) == pytest.approx(1 / N)
    assert sphere_moment([2] + [0] * (N - 1)) == pytest.approx(3 / (N * (N + 2)))
    if N > 1:
        assert sphere_moment([1, 1] + [0] * (N - 2)) == pytest.approx(1 / (N * (N + 2)))


def test_sphere_monomial_mean_odd_is_zero():
    assert sphere_monomial_mean([1, 2]) == 0.0
    assert sphere_monomial_mean([2, 2]) == pytest.approx(1 / 8)


def test_sphere_moment_against_sampling():
    rng = np.random.default_rng(7)
    v = rng.standard_normal((400_000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    emp = np.mean(v[:, 0] ** 4 * v[:, 1] ** 2)
    assert emp == pytest.approx(sphere_moment([2, 1, 0]), rel=0.02)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=4))
def test_sphere_moment_unit_norm_identity(n):
    # E[|phi|^2 prod] = E[prod] because |phi| = 1
    total = sum(sphere_moment([a + (i == j) for j, a in enumerate(n)]) for i in range(len(n)))
    assert total == pytest.approx(sphere_moment(n), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 8), st.integers(1, 4))
def test_compositions_count(total, parts):
    comps = list(compositions(total, parts))
    assert len(comps) == math.comb(total + parts - 1, parts - 1)
    assert len(set(comps)) == len(comps)
    assert all(sum(c) == total and min(c) >= 0 for c in comps)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_x_sup_is_concentrated(N):
    for k in range(12):
        assert x_sup(k, N) == pytest.approx(sphere_moment([k] + [0] * (N - 1)))
        assert math.log(x_sup(k, N)) == pytest.approx(log_x_sup_closed(k, N), abs=1e-12)


def test_script_K():
    assert script_K(2, 2) == pytest.approx(0.5)
    assert script_K(0, 3) == pytest.approx(1.0)
    assert script_K(3, 2) == pytest.approx(min(sphere_moment([2, 0]), sphere_moment([1, 1])))


def test_loop_and_ghost_pair_weights():
    g = attach_ghost(path_graph(2))
    beta, h = 0.7, 0.3
    for N in (2, 3):
        p = ModelParams(N, beta, h)
        w = WireConfig.empty(g, N)
        a, b = w.add_link(0, 1), w.add_link(0, 1)
        w.pair(a, b, 0)
        w.pair(a, b, 1)
        assert math.exp(config_log_weight(g, w, p)) == pytest.approx(beta ** 2 / (2 * N ** 2))
        w = WireConfig.empty(g, N)
        e = g.ghost_edge(0)
        a, b = w.add_link(e, N), w.add_link(e, N)
        w.pair(a, b, 0)
        assert math.exp(config_log_weight(g, w, p)) == pytest.approx(h ** 2 / (2 * N))


def test_weight_ignores_link_labels():
    g = attach_ghost(path_graph(3))
    p = ModelParams(2, 0.4, 0.8)
    w1 = WireConfig.empty(g, 2)
    a, b = w1.add_link(0, 1), w1.add_link(0, 2)
    c, d = w1.add_link(0, 1), w1.add_link(0, 2)
    w1.pair(a, c, 0), w1.pair(a, c, 1), w1.pair(b, d, 0), w1.pair(b, d, 1)
    w2 = WireConfig.empty(g, 2)
    a, b = w2.add_link(0, 2), w2.add_link(0, 1)
    c, d = w2.add_link(0, 1), w2.add_link(0, 2)
    w2.pair(b, c, 0), w2.pair(b, c, 1), w2.pair(a, d, 0), w2.pair(a, d, 1)
    assert config_log_weight(g, w1, p) == pytest.approx(config_log_weight(g, w2, p))


def test_invalid_config_has_no_weight():
    g = attach_ghost(path_graph(2))
    w = WireConfig.empty(g, 2)
    w.add_link(g.ghost_edge(0), 1)
    with pytest.raises(InvalidState):
        config_log_weight(g, w, ModelParams(2, 0.1, 0.1))


def test_site_weight_error_hook():
    g = attach_ghost(path_graph(2))
    w = WireConfig.empty(g, 2)
    e = g.ghost_edge(0)
    a, b = w.add_link(e, 2), w.add_link(e, 2)
    w.pair(a, b, 0)
    base = config_log_weight(g, w, ModelParams(2, 0.1, 0.5))
    bumped = config_log_weight(g, w, ModelParams(2, 0.1, 0.5, site_weight_error=0.01))
    assert bumped - base == pytest.approx(math.log1p(0.01))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-700, 700), max_size=30))
def test_log_accumulator_matches_logsumexp(vals):
    acc = LogAccumulator()
    for v in vals:
        acc.add(v)
    if vals:
        assert acc.value == pytest.approx(logsumexp(vals), rel=1e-12, abs=1e-12)
    else:
        assert acc.value == -math.inf


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(0)
    with pytest.raises(ValueError):
        ModelParams(2, beta=-1)
    with pytest.raises(ValueError):
        ModelParams(2, couplings={(0, 1): -0.1})
    p = ModelParams(2, 0.3, couplings={(1, 0): 0.5})
    assert p.coupling((0, 1)) == 0.5
    assert p.coupling((1, 2)) == 0.3
    assert p.max_coupling == 0.5


def test_constants_chain_relations():
    rep = constants_chain(ModelParams(2, 0.5, 0.5), d_star=2, k=6)
    assert rep.c4_lower == pytest.approx(0.25 / (0.25 + 8))
    assert rep.c6 == pytest.approx(rep.c4_lower / 7)
    assert rep.c5_upper == pytest.approx(8 / 0.25)
    assert rep.c1 == pytest.approx(x_sup(6, 2) * math.exp(0.5 + 2 * 0.5 * 3) / 0.5)
    with pytest.raises(FieldZero):
        constants_chain(ModelParams(2, 0.5, 0.0), 2, 6)


def test_constants_monotone_in_coordinates():
    base = constants_chain(ModelParams(2, 0.2, 0.5), 2, 10)
    assert constants_chain(ModelParams(2, 0.3, 0.5), 2, 10).c1 > base.c1
    assert constants_chain(ModelParams(2, 0.2, 0.6), 2, 10).c1 > base.c1
    assert constants_chain(ModelParams(2, 0.2, 0.5), 3, 10).c1 > base.c1
    assert constants_chain(ModelParams(2, 0.2, 0.5), 2, 11).c1 < base.c1
    assert constants_chain(ModelParams(2, 0.2, 0.6), 2, 10).c4_lower > base.c4_lower


def test_thresholds_are_least():
    rep = constants_chain(ModelParams(2, 0.1, 0.5), 2, 5)
    K = rep.K_threshold
    assert K is not None and K > 0
    # K is astronomically large here, so use the closed-form log c1
    assert math.log(4) + 0.1 * log_c1(K, 2, 0.1, 0.5, 2) < -1
    assert not math.log(4) + 0.1 * log_c1(K - 1, 2, 0.1, 0.5, 2) < -1
    K0 = rep.K0_threshold
    assert log_c1(K0, 2, 0.1, 1.0, 2) < -1 <= log_c1(K0 - 1, 2, 0.1, 1.0, 2)
