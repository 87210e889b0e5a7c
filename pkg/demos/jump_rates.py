"""
Mean jump rates between wells
=============================

The process watched only while a condensate sits on a heavy site is, for
large ``N``, a Markov chain on the heavy sites.  Its rates follow from
three capacities per pair; on the time scale ``N / d^2`` they approach
``1 / (|S_i| R_ij)``.  Wells with no common light neighbour never
exchange mass on this scale, which splits the heavy sites into blocks.
"""

import os

import numpy as np

from inclusion_meta import InclusionChain, InclusionModel, load_model
from inclusion_meta.analysis import level3_partition, limit_generator, mean_rate_via_capacities

here = os.path.dirname(os.path.abspath(__file__))
np.set_printoptions(precision=4, suppress=True)

# two wells joined by one light site: a single rate, which tends to 2
graph = load_model(os.path.join(here, "models", "three_site.yaml")).graph
for N in (16, 32, 64):
    rep = mean_rate_via_capacities(InclusionChain(InclusionModel(graph, N, N ** -2.0)))
    print(f"N={N:>3}: rescaled rate {rep.normalized[0, 1]:.4f}, limit {rep.target[0, 1]:.4f}")

# two clusters of wells whose bridges only touch each other
clusters = load_model(os.path.join(here, "models", "two_clusters.yaml")).graph
limit = limit_generator(clusters, "second")
print("components:", [[clusters.sites[x] for x in c] for c in clusters.level2_components])
print("limit generator:")
print(limit.generator())
print("blocks that never exchange mass on this scale:", level3_partition(limit))
