"""Mean jump rates between components, limit chains and sweep diagnostics.

The mean rate from component ``i`` to ``j`` of the process traced on the
metastable valleys follows from three capacities:

    mu(E(i)) r(i, j) = (Cap_i + Cap_j - Cap_ij) / 2

where ``Cap_i`` is the capacity between the valleys of ``i`` and all other
metastable valleys and ``Cap_ij`` the one between the valleys of ``i`` and
``j`` together and the rest (0 when nothing is left).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InconsistentCapacities
from .potential import capacity
from .simulate import SimulationRun, simulate_path
from .variational import resistance_set

__all__ = [
    "LimitChain",
    "RateMatrixReport",
    "limit_generator",
    "level3_partition",
    "component_capacities",
    "mean_rate_via_capacities",
    "h1_ratio",
    "limit_marginals",
    "marginal_check",
]

CLIP_RTOL = 1e-8


@dataclass
class LimitChain:
    """Markov chain on component (or site) labels.

    ``blocked[i, j]`` marks pairs whose rate is zero because no channel
    joins them (infinite resistance); ``rate`` is always finite.
    """

    states: tuple
    rate: np.ndarray
    scale: str
    blocked: np.ndarray = None

    def generator(self):
        Q = self.rate.copy()
        np.fill_diagonal(Q, 0.0)
        np.fill_diagonal(Q, -Q.sum(axis=1))
        return Q


def limit_generator(graph, scale="second", resistances=None):
    """Limit chain on the first or the second time scale.

    The first-scale chain lives on the metastable sites with the underlying
    walk rates; the second-scale chain lives on components with rates
    ``1 / (|S_i| R_ij)`` and 0 for blocked pairs.
    """
    if scale == "first":
        idx = list(graph.s_star)
        R = graph.rate[np.ix_(idx, idx)].copy()
        np.fill_diagonal(R, 0.0)
        return LimitChain(tuple(graph.sites[x] for x in idx), R, "first", R == 0)
    if scale != "second":
        raise ValueError("scale must be 'first' or 'second'")
    res = resistances if resistances is not None else resistance_set(graph)
    k = graph.kappa_star
    blocked = res.blocked.copy()
    R = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i != j and not blocked[i, j]:
                R[i, j] = 1.0 / (len(graph.level2_components[i]) * res.r_continuum[i, j])
    return LimitChain(tuple(range(k)), R, "second", blocked)


def level3_partition(chain):
    """Irreducible classes of the second-scale chain, as tuples of components."""
    k = len(chain.states)
    adj = csr_matrix((chain.rate > 0).astype(float))
    _, labels = connected_components(adj, directed=True, connection="strong")
    blocks = {}
    for i in range(k):
        blocks.setdefault(labels[i], []).append(i)
    return sorted((tuple(b) for b in blocks.values()), key=lambda b: b[0])


def component_capacities(chain):
    """Capacities needed by the mean-rate formula.

    Returns ``(single, pair)`` with ``single[i] = Cap_i`` and
    ``pair[i, j] = Cap_ij`` (``Cap(., empty) = 0``).
    """
    graph = chain.graph
    k = graph.kappa_star
    single = np.zeros(k)
    pair = np.zeros((k, k))
    for i in range(k):
        rest = [c for c in range(k) if c != i]
        single[i] = capacity(chain, chain.component_valleys([i]),
                             chain.component_valleys(rest) if rest else []).capacity
    for i in range(k):
        for j in range(i + 1, k):
            rest = [c for c in range(k) if c not in (i, j)]
            val = 0.0
            if rest:
                val = capacity(chain, chain.component_valleys([i, j]),
                               chain.component_valleys(rest)).capacity
            pair[i, j] = pair[j, i] = val
    return single, pair


@dataclass
class RateMatrixReport:
    """Mean jump rates between components and their second-scale limit.

    Attributes
    ----------
    r_star : ndarray
        Mean rates.
    normalized : ndarray
        ``theta2 * r_star``.
    target : ndarray
        Limit rates ``1 / (|S_i| R_ij)``.
    clipped : list
        ``(i, j, value)`` for negative round-off set to 0.
    """

    r_star: np.ndarray
    normalized: np.ndarray
    target: np.ndarray
    masses: np.ndarray
    clipped: list = field(default_factory=list)
    h1_ratios: dict = field(default_factory=dict)

    def relative_error(self):
        mask = self.target > 0
        out = np.zeros_like(self.target)
        out[mask] = np.abs(self.normalized[mask] / self.target[mask] - 1.0)
        return out

    def as_dict(self):
        return {"r_star": self.r_star.tolist(), "normalized": self.normalized.tolist(),
                "target": self.target.tolist(), "component_mass": self.masses.tolist(),
                "clipped": [list(c) for c in self.clipped],
                "h1_ratios": {str(k): v for k, v in self.h1_ratios.items()}}


def mean_rate_via_capacities(chain, caps=None):
    """Mean jump rates between components from capacities.

    Raises
    ------
    InconsistentCapacities
        If a negative combination exceeds ``1e-8`` relative to the capacities.
    """
    graph = chain.graph
    single, pair = caps if caps is not None else component_capacities(chain)
    k = graph.kappa_star
    masses = np.array([float(np.sum(chain.mu[chain.component_valleys([i])])) for i in range(k)])
    r_star = np.zeros((k, k))
    clipped = []
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            val = 0.5 * (single[i] + single[j] - pair[i, j])
            if val < 0:
                scale = max(single[i], single[j], pair[i, j], 1e-300)
                if -val > CLIP_RTOL * scale:
                    raise InconsistentCapacities(
                        f"capacity combination for ({i},{j}) is {val:.3e}, beyond round-off"
                    )
                clipped.append((i, j, float(val)))
                val = 0.0
            r_star[i, j] = val / masses[i]
    target = limit_generator(graph, "second").rate
    return RateMatrixReport(r_star, chain.model.theta2 * r_star, target, masses, clipped)


def h1_ratio(chain, i):
    """Escape capacity of component ``i`` over its weakest internal capacity.

    Returns 0 for a singleton component (the infimum is vacuous).
    """
    graph = chain.graph
    comp = graph.level2_components[i]
    if len(comp) < 2:
        return 0.0
    rest = [c for c in range(graph.kappa_star) if c != i]
    esc = capacity(chain, chain.component_valleys([i]), chain.component_valleys(rest)).capacity
    inner = min(capacity(chain, [chain.valley(a)], [chain.valley(b)]).capacity
                for a in comp for b in comp if a < b)
    return esc / inner


def limit_marginals(limit, start, times):
    """Law of the limit chain at each time, started from state ``start``."""
    Q = limit.generator()
    p0 = np.zeros(Q.shape[0])
    p0[start] = 1.0
    return np.array([p0 @ expm(Q * t) for t in times])


def marginal_check(model, start_site, times, replicas, seed):
    """Monte Carlo marginals on the second time scale against the limit chain.

    Parameters
    ----------
    times : array_like
        Rescaled times ``s``; the path is sampled at ``theta2 * s``.

    Returns
    -------
    dict with ``times``, ``outside`` (fraction of replicas outside every
    metastable valley), ``empirical`` (component frequencies), ``limit``
    and ``stderr``.
    """
    graph = model.graph
    times = np.asarray(times, dtype=float)
    labels = graph.component_labels()
    k = graph.kappa_star
    counts = np.zeros((times.size, k))
    outside = np.zeros(times.size)
    horizon = float(times.max()) * model.theta2 if times.size else 0.0
    for rep in range(replicas):
        tr = simulate_path(model, SimulationRun(seed, rep, t_end=np.nextafter(horizon, np.inf)),
                           start_site, sample_times=times * model.theta2)
        for n, site in enumerate(tr.sample_sites):
            lab = labels[site] if site >= 0 else -1
            if lab >= 0:
                counts[n, lab] += 1
            else:
                outside[n] += 1
    emp = counts / replicas
    start = int(labels[graph.index(start_site)])
    lim = limit_marginals(limit_generator(graph, "second"), start, times)
    se = np.sqrt(np.maximum(emp * (1 - emp), 1.0 / replicas) / replicas)
    return {"times": times.tolist(), "outside": (outside / replicas).tolist(),
            "empirical": emp.tolist(), "limit": lim.tolist(), "stderr": se.tolist(),
            "replicas": replicas, "seed": seed}
