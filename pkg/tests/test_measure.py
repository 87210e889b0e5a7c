import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inclusion_meta import InclusionChain, InclusionModel, StateSpace, stationary_measure
from inclusion_meta.measure import dump_measure_csv, log_sum_exp, valley_mass, weight_sequence

from . import oracles
from .conftest import graphs


def test_weight_values():
    t = weight_sequence(0.5, 3)
    assert t.w(0) == 1.0
    assert t.w(1) == pytest.approx(0.5, rel=1e-14)
    assert t.w(2) == pytest.approx(0.375, rel=1e-14)
    assert t.w(3) == pytest.approx(0.375 * 2.5 / 3, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 2.0), st.integers(0, 200))
def test_weights_match_log_gamma(d, N):
    t = weight_sequence(d, N)
    ref = np.array([oracles.log_w(k, d) for k in range(N + 1)])
    assert np.allclose(t.log_w, ref, rtol=1e-11, atol=1e-11)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-8, 1.0), st.integers(1, 500))
def test_growth_bounds(d, N):
    t = weight_sequence(d, N)
    assert t.check_bounds() == 0.0
    g = t.growth_factors()
    assert g[0] == pytest.approx(1.0)


def test_log_sum_exp():
    assert log_sum_exp([]) == -math.inf
    assert log_sum_exp([0.0, 0.0]) == pytest.approx(math.log(2))
    assert log_sum_exp([-1000.0, -1000.0]) == pytest.approx(-1000 + math.log(2))


@pytest.mark.parametrize("N,d", [(3, 0.3), (6, 0.05), (10, 1e-3)])
def test_measure_matches_oracle(g4, N, d):
    model = InclusionModel(g4, N, d)
    sp = StateSpace(4, N)
    tab = stationary_measure(model, sp)
    confs, mu = oracles.measure(g4.rate, [1, 1, 0.5, 0.5], N, d)
    assert np.array_equal(confs, sp.configs)
    assert np.allclose(tab.mu, mu, rtol=1e-11, atol=0)
    assert tab.mu.sum() == pytest.approx(1.0, rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(graphs(), st.integers(1, 8), st.floats(1e-4, 0.5))
def test_detailed_balance_on_every_edge(g, N, d):
    chain = InclusionChain(InclusionModel(g, N, d))
    lhs = chain.measure.log_mu[chain.tail] + np.log(chain.q_fwd)
    with np.errstate(divide="ignore"):
        rhs = chain.measure.log_mu[chain.head] + np.log(chain.q_bwd)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-11)


def test_condensation_on_valleys(g4):
    prev = 0.0
    for N in (10, 20, 40):
        model = InclusionModel(g4, N, 1.0 / N)
        sp = StateSpace(4, N)
        mass = valley_mass(stationary_measure(model, sp), sp, [0, 1])
        assert mass > prev
        prev = mass
    assert valley_mass(stationary_measure(model, sp), sp, []) == 0.0


def test_space_mismatch(g4):
    with pytest.raises(ValueError):
        stationary_measure(InclusionModel(g4, 3, 0.1), StateSpace(4, 4))


def test_measure_csv(tmp_path, g3):
    model = InclusionModel(g3, 2, 0.1)
    sp = StateSpace(3, 2)
    path = tmp_path / "mu.csv"
    dump_measure_csv(path, sp, stationary_measure(model, sp), g3.sites)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,1,2,3,log_mu"
    assert len(lines) == sp.size + 1
