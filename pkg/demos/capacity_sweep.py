"""
Capacity between two condensates
================================

Two heavy sites talk only through a lighter one.  With ``d = N^-2`` the
capacity between the two full valleys shrinks like ``d^2 / N``; after
rescaling it settles on ``1 / (2 R)`` where ``R`` is the channel resistance.
The exact value is bracketed by a test function (upper) and a test flow
(lower) that are built without any linear solve.
"""

import os

import numpy as np

from inclusion_meta import InclusionChain, InclusionModel, load_model
from inclusion_meta.variational import capacity_sandwich, resistance_continuum

here = os.path.dirname(os.path.abspath(__file__))
graph = load_model(os.path.join(here, "models", "three_site.yaml")).graph

# the limit only needs the walk on sites: one quadrature
R = resistance_continuum(graph, 0, 1)
print(f"channel resistance R = {R:.6f}")

print(f"{'N':>4} {'states':>7} {'lower':>9} {'cap':>9} {'upper':>9}   (all times N / d^2)")
for N in (8, 16, 32, 64):
    chain = InclusionChain(InclusionModel(graph, N, N ** -2.0))
    rep = capacity_sandwich(chain, (0,))
    n = rep.normalized
    print(f"{N:>4} {chain.size:>7} {n['lower']:>9.4f} {n['cap']:>9.4f} {n['upper']:>9.4f}")

# the bracket tightens and all three columns approach 1 / (2 R)
print(f"target 1/(2R) = {rep.target:.4f}")
