import os

import numpy as np
import pytest
from hypothesis import strategies as st

from inclusion_meta import SiteGraph

MODELS = os.path.join(os.path.dirname(__file__), "..", "demos", "models")



def three_site():
    return SiteGraph(["1", "2", "3"], [[0, 1, 0], [2, 0, 2], [0, 1, 0]], [1, 0.5, 1])


def four_site():
    r = [[0, 0, 1, 1], [0, 0, 1, 1], [2, 2, 0, 1], [2, 2, 1, 0]]
    return SiteGraph(["x1", "x2", "y1", "y2"], r, [1, 1, 0.5, 0.5])


def paired_well():
    r = np.zeros((4, 4))
    r[0, 1] = r[1, 0] = 1
    r[1, 3], r[3, 1] = 1, 2
    r[2, 3], r[3, 2] = 1, 2
    return SiteGraph(["a1", "a2", "b", "y"], r, [1, 1, 1, 0.5])


def random_graph(rng, n_sites, p_edge=0.6, n_star=None):
    """Random reversible walk: symmetric conductances over a random measure.

    A spanning path keeps the walk irreducible.
    """
    m = rng.uniform(0.2, 1.0, n_sites)
    if n_star:
        m[rng.choice(n_sites, n_star, replace=False)] = 1.0
    c = np.zeros((n_sites, n_sites))
    order = rng.permutation(n_sites)
    for a, b in zip(order, order[1:]):
        c[a, b] = c[b, a] = rng.uniform(0.2, 2.0)
    for a in range(n_sites):
        for b in range(a + 1, n_sites):
            if c[a, b] == 0 and rng.random() < p_edge:
                c[a, b] = c[b, a] = rng.uniform(0.2, 2.0)
    r = c / m[:, None]
    return SiteGraph([f"s{i}" for i in range(n_sites)], r, m)


@st.composite
def graphs(draw, min_sites=2, max_sites=4):
    n = draw(st.integers(min_sites, max_sites))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_graph(np.random.default_rng(seed), n)


@pytest.fixture
def g3():
    return three_site()


@pytest.fixture
def g4():
    return four_site()


@pytest.fixture
def gpair():
    return paired_well()


def two_cluster_graph():
    names = ["a1", "a2", "b", "c", "e", "y1", "y2"]
    ix = {s: i for i, s in enumerate(names)}
    r = np.zeros((7, 7))
    for a, b, v in [("a1", "a2", 1), ("a2", "a1", 1), ("a1", "y1", 1), ("y1", "a1", 2),
                    ("b", "y1", 1), ("y1", "b", 2), ("c", "y2", 1), ("y2", "c", 2),
                    ("e", "y2", 1), ("y2", "e", 2), ("y1", "y2", 1), ("y2", "y1", 1)]:
        r[ix[a], ix[b]] = v
    return SiteGraph(names, r, [1, 1, 1, 1, 1, 0.5, 0.5])
