import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inclusion_meta import (
    InclusionModel,
    SiteGraph,
    StateSpace,
    count_configurations,
    enumerate_configurations,
    graph_distance,
    jump_rate,
    sigma_move,
    validate_model,
)
from inclusion_meta.errors import (
    DetailedBalanceViolation,
    DiffusionScheduleWarning,
    NotIrreducible,
    SelfLoopRejected,
    StateSpaceTooLarge,
)

from . import oracles
from .conftest import graphs, two_cluster_graph


def test_three_site_derived_sets(g3):
    rep = validate_model(g3)
    assert rep.ok
    assert g3.s_star == (0, 2)
    assert g3.level2_components == ((0,), (2,))
    assert g3.non_star_sites == (1,)
    assert g3.kappa_star == 2
    assert g3.m_star.tolist() == [1.0, 0.5, 1.0]


def test_symmetric_uniform_model_is_all_star():
    g = SiteGraph("abc", [[0, 1, 1], [1, 0, 1], [1, 1, 0]], [1, 1, 1])
    assert validate_model(g).ok
    assert g.s_star == (0, 1, 2)
    assert g.level2_components == ((0, 1, 2),)


def test_forced_imbalance_rejected():
    g = SiteGraph("ab", [[0, 1], [2, 0]], [1, 1])
    with pytest.raises(DetailedBalanceViolation) as info:
        validate_model(g)
    assert info.value.residual == pytest.approx(0.5)
    assert not validate_model(g, strict=False).ok


def test_disconnected_rejected():
    g = SiteGraph("abc", [[0, 1, 0], [1, 0, 0], [0, 0, 0]], [1, 1, 1])
    with pytest.raises(NotIrreducible) as info:
        validate_model(g)
    assert info.value.unreachable == ["c"]


def test_self_loop_rejected():
    g = SiteGraph("ab", [[1, 1], [1, 0]], [1, 1])
    with pytest.raises(SelfLoopRejected):
        validate_model(g)


def test_validation_exit_codes():
    assert DetailedBalanceViolation("a", "b", 1.0).exit_code == 2
    assert StateSpaceTooLarge(10, 5).exit_code == 3


def test_sigma_move_examples():
    assert sigma_move([2, 0], 0, 1).tolist() == [1, 1]
    assert sigma_move([0, 2], 0, 1).tolist() == [0, 2]
    eta = np.array([3, 1, 0])
    assert sigma_move(sigma_move(eta, 0, 2), 2, 0).tolist() == eta.tolist()
    with pytest.raises(ValueError):
        sigma_move(eta, 1, 1)


def test_jump_rate_formula(g3):
    m = InclusionModel(g3, 4, 0.1)
    eta = np.array([2, 1, 1])
    assert jump_rate(m, eta, 0, 1) == pytest.approx(2 * (0.1 + 1) * 1.0)
    assert jump_rate(m, eta, 1, 2) == pytest.approx(1 * (0.1 + 1) * 2.0)
    assert jump_rate(m, eta, 0, 2) == 0.0
    assert jump_rate(m, np.array([0, 4, 0]), 0, 1) == 0.0


def test_schedule_warning(g3):
    with pytest.warns(DiffusionScheduleWarning):
        InclusionModel(g3, 10, 0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        InclusionModel(g3, 10, 0.001)
    m = InclusionModel(g3, 10, 0.01)
    assert m.theta1 == pytest.approx(100)
    assert m.theta2 == pytest.approx(10 / 1e-4)


def test_bad_parameters(g3):
    with pytest.raises(ValueError):
        InclusionModel(g3, 0, 0.1)
    with pytest.raises(ValueError):
        InclusionModel(g3, 3, 0.0)


@pytest.mark.parametrize("n_sites,N", [(1, 5), (2, 0), (3, 4), (4, 6)])
def test_enumeration_matches_itertools(n_sites, N):
    confs = enumerate_configurations(n_sites=n_sites, N=N)
    assert confs.shape[0] == count_configurations(n_sites, N)
    assert np.array_equal(confs, oracles.configurations(n_sites, N))


def test_state_cap():
    with pytest.raises(StateSpaceTooLarge):
        StateSpace(6, 40, cap=1000)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 12))
def test_rank_is_inverse_of_enumeration(n_sites, N):
    sp = StateSpace(n_sites, N)
    assert np.array_equal(sp.rank(sp.configs), np.arange(sp.size))


def test_valleys_and_tubes(g3):
    sp = StateSpace(3, 5)
    assert sp.configs[sp.valley(0)].tolist() == [5, 0, 0]
    tube = sp.tube(0, 1)
    assert sp.configs[tube[2]].tolist() == [3, 2, 0]
    assert sp.valley(0) == sp.size - 1  # lexicographic order puts it last


def test_transition_edges_cover_every_move(g3):
    sp = StateSpace(3, 4)
    tail, head, src, dst = sp.transition_edges(g3.rate)
    pairs = {(int(a), int(b)) for a, b in zip(tail, head)}
    expect = set()
    for i, c in enumerate(sp.configs):
        for x in range(3):
            for y in range(3):
                if x != y and c[x] > 0 and (g3.rate[x, y] > 0 or g3.rate[y, x] > 0):
                    j = sp.rank(sigma_move(c, x, y))
                    expect.add((min(i, j), max(i, j)))
    assert {(min(a, b), max(a, b)) for a, b in pairs} == expect
    assert len(pairs) == len(expect)


def test_graph_distance():
    g = two_cluster_graph()
    assert graph_distance(g, ["a1"], ["b"]) == 2
    assert graph_distance(g, ["a1"], ["c"]) == 3
    assert graph_distance(g, ["b"], ["e"]) == 3


@settings(max_examples=30, deadline=None)
@given(graphs())
def test_random_graphs_validate(g):
    rep = validate_model(g)
    assert rep.ok
    flat = [x for c in g.level2_components for x in c]
    assert sorted(flat) == list(g.s_star)
    for i, a in enumerate(g.level2_components):
        for b in g.level2_components[i + 1:]:
            assert np.all(g.rate[np.ix_(a, b)] == 0)
