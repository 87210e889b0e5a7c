"""Site graphs, inclusion models and the configuration space.

A particle at site ``x`` jumps to ``y`` at rate ``eta_x * (d + eta_y) * r(x, y)``.
Sites are addressed by dense integer indices everywhere in the hot paths;
the original string identifiers are kept on :class:`SiteGraph` for reporting.

Configurations are integer vectors of occupation numbers.  The full space
of configurations with ``N`` particles is enumerated in lexicographic order
(first site most significant, ascending) and ranked with a combinatorial
number system so that index <-> configuration maps are exact and vectorised.
"""

import math
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    DetailedBalanceViolation,
    DiffusionScheduleWarning,
    NotIrreducible,
    SelfLoopRejected,
    StateSpaceTooLarge,
    Unreachable,
)

__all__ = [
    "SiteGraph",
    "InclusionModel",
    "ValidationReport",
    "StateSpace",
    "validate_model",
    "sigma_move",
    "jump_rate",
    "count_configurations",
    "enumerate_configurations",
    "graph_distance",
    "DEFAULT_STATE_CAP",
]

DEFAULT_STATE_CAP = 2_000_000
STAR_RTOL = 1e-9
BALANCE_RTOL = 1e-12


class SiteGraph:
    """Finite site set with reversible rates and the derived metastable data.

    Parameters
    ----------
    sites : sequence of str
        Site identifiers, in the order used for dense indices.
    rate : array_like, shape (n, n)
        ``rate[x, y] = r(x, y)``.  Must be nonnegative.
    measure : array_like, shape (n,)
        Reversible measure ``m``; any positive scale, it is renormalised.

    Notes
    -----
    The graph is not validated on construction; call :func:`validate_model`
    (``InclusionModel`` does this for you).  Derived attributes:

    ``max_measure``
        largest value of the normalised measure.
    ``s_star``
        indices whose measure is within a relative ``1e-9`` of the maximum.
    ``m_star``
        ``measure / max_measure``, set exactly to 1 on ``s_star``.
    ``level2_components``
        tuple of tuples of indices, the connected pieces of ``s_star`` under
        the r-positive edges, ordered by smallest member.
    ``non_star_sites``
        indices outside ``s_star`` in ascending order.
    """

    def __init__(self, sites, rate, measure):
        sites = tuple(str(s) for s in sites)
        rate = np.array(rate, dtype=float)
        measure = np.array(measure, dtype=float)
        n = len(sites)
        if rate.shape != (n, n):
            raise ValueError(f"rate matrix must have shape ({n}, {n}), got {rate.shape}")
        if measure.shape != (n,):
            raise ValueError(f"measure must have length {n}")
        if len(set(sites)) != n:
            raise ValueError("site identifiers must be unique")
        if np.any(rate < 0) or not np.all(np.isfinite(rate)):
            raise ValueError("rates must be finite and nonnegative")
        if np.any(measure <= 0) or not np.all(np.isfinite(measure)):
            raise ValueError("measure must be finite and positive")

        measure = measure / measure.sum()
        mmax = measure.max()
        star = np.flatnonzero(measure >= mmax * (1.0 - STAR_RTOL))
        m_star = measure / mmax
        m_star[star] = 1.0

        self.sites = sites
        self.rate = rate
        self.measure = measure
        self.max_measure = float(mmax)
        self.m_star = m_star
        self.s_star = tuple(int(x) for x in star)
        self.non_star_sites = tuple(x for x in range(n) if x not in set(self.s_star))
        self.level2_components = _components_within(rate, self.s_star)
        self._index = {s: i for i, s in enumerate(sites)}
        for arr in (self.rate, self.measure, self.m_star):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, sites, rates, measure):
        """Build from a list of ``(from, to, value)`` triples and a measure.

        ``measure`` may be a sequence aligned with ``sites`` or a mapping
        from site identifier to weight.
        """
        sites = [str(s) for s in sites]
        index = {s: i for i, s in enumerate(sites)}
        rate = np.zeros((len(sites), len(sites)))
        for a, b, v in rates:
            rate[index[str(a)], index[str(b)]] += float(v)
        if isinstance(measure, dict):
            measure = [measure[s] for s in sites]
        return cls(sites, rate, measure)

    @property
    def n_sites(self):
        return len(self.sites)

    @property
    def kappa_star(self):
        return len(self.level2_components)

    def index(self, site):
        """Dense index of a site identifier (integers pass through)."""
        if isinstance(site, (int, np.integer)):
            return int(site)
        return self._index[str(site)]

    def indices(self, sites):
        return [self.index(s) for s in sites]

    def component_of(self, x):
        """Level-2 component index containing site ``x``, or -1 if ``x`` is not in S-star."""
        x = self.index(x)
        for i, comp in enumerate(self.level2_components):
            if x in comp:
                return i
        return -1

    def component_labels(self):
        """Array mapping each site to its component index (-1 off S-star)."""
        lab = np.full(self.n_sites, -1, dtype=np.int64)
        for i, comp in enumerate(self.level2_components):
            lab[list(comp)] = i
        return lab

    def describe(self):
        """Plain-dict summary used by reports."""
        name = self.sites
        return {
            "sites": list(name),
            "s_star": [name[x] for x in self.s_star],
            "kappa_star": self.kappa_star,
            "level2_components": [[name[x] for x in c] for c in self.level2_components],
            "non_star_sites": [name[x] for x in self.non_star_sites],
            "m_star": {name[x]: float(self.m_star[x]) for x in range(self.n_sites)},
        }


def _components_within(rate, subset):
    subset = list(subset)
    if not subset:
        return ()
    sub = rate[np.ix_(subset, subset)]
    adj = csr_matrix((sub > 0) | (sub.T > 0))
    ncomp, labels = connected_components(adj, directed=False)
    comps = [[] for _ in range(ncomp)]
    for pos, lab in enumerate(labels):
        comps[lab].append(subset[pos])
    comps.sort(key=min)
    return tuple(tuple(sorted(c)) for c in comps)


@dataclass
class ValidationReport:
    ok: bool
    issues: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "ok": self.ok,
            "issues": [e.as_dict() for e in self.issues],
            **self.summary,
        }


def validate_model(graph, strict=True):
    """Check self-loops, detailed balance and irreducibility.

    Parameters
    ----------
    graph : SiteGraph
    strict : bool
        Raise the first issue found instead of returning it in the report.

    Returns
    -------
    ValidationReport
        ``summary`` holds S-star, its components and the non-star sites.

    Raises
    ------
    SelfLoopRejected, DetailedBalanceViolation, NotIrreducible
        When ``strict`` and the corresponding check fails.
    """
    r, m, names = graph.rate, graph.measure, graph.sites
    n = graph.n_sites
    issues = []
    for x in range(n):
        if r[x, x] != 0:
            issues.append(SelfLoopRejected(names[x], r[x, x]))
    flux = m[:, None] * r
    for x in range(n):
        for y in range(x + 1, n):
            a, b = flux[x, y], flux[y, x]
            scale = max(a, b)
            if scale > 0 and abs(a - b) > BALANCE_RTOL * scale:
                issues.append(DetailedBalanceViolation(names[x], names[y], abs(a - b) / scale))
    offdiag = r.copy()
    np.fill_diagonal(offdiag, 0.0)
    seen = _reachable(offdiag, 0)
    if len(seen) < n:
        issues.append(
            NotIrreducible([names[x] for x in sorted(seen)],
                           [names[x] for x in range(n) if x not in seen])
        )
    report = ValidationReport(ok=not issues, issues=issues, summary=graph.describe())
    if strict and issues:
        err = issues[0]
        err.report = report
        raise err
    return report


def _reachable(rate, start):
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in np.flatnonzero(rate[x] > 0):
            y = int(y)
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def graph_distance(graph, A, B):
    """Length of the shortest r-positive path from site set ``A`` to ``B``.

    Raises
    ------
    Unreachable
        If no path exists (impossible for irreducible graphs).
    """
    A = set(graph.indices(A))
    B = set(graph.indices(B))
    if not A or not B:
        raise ValueError("A and B must be nonempty")
    if A & B:
        return 0
    dist = {x: 0 for x in A}
    queue = deque(A)
    while queue:
        x = queue.popleft()
        for y in np.flatnonzero(graph.rate[x] > 0):
            y = int(y)
            if y in dist or y == x:
                continue
            dist[y] = dist[x] + 1
            if y in B:
                return dist[y]
            queue.append(y)
    raise Unreachable(f"no r-positive path from {sorted(A)} to {sorted(B)}")


class InclusionModel:
    """Site graph together with particle number ``N`` and diffusion ``d``.

    Parameters
    ----------
    graph : SiteGraph
    N : int
        Number of particles, positive.
    d : float
        Diffusion parameter, positive.
    schedule_tag : str, optional
        Free text describing how ``d`` was chosen (e.g. ``"N^-2"``).
    validate : bool
        Run :func:`validate_model` in strict mode.
    """

    def __init__(self, graph, N, d, schedule_tag=None, validate=True):
        N = int(N)
        d = float(d)
        if N < 1:
            raise ValueError("N must be a positive integer")
        if not d > 0 or not math.isfinite(d):
            raise ValueError("d must be positive and finite")
        if validate:
            validate_model(graph, strict=True)
        self.graph = graph
        self.N = N
        self.d = d
        self.schedule_tag = schedule_tag
        if d * math.log(N) > 0.1:
            warnings.warn(
                f"d*log(N) = {d * math.log(N):.3g} > 0.1; the condensation regime assumes d*log(N) -> 0",
                DiffusionScheduleWarning,
                stacklevel=2,
            )

    @property
    def n_sites(self):
        return self.graph.n_sites

    @property
    def theta1(self):
        """First time scale ``1/d``."""
        return 1.0 / self.d

    @property
    def theta2(self):
        """Second time scale ``N/d**2``."""
        return self.N / self.d ** 2

    def valley(self, x):
        """Configuration with all particles at site ``x``."""
        eta = np.zeros(self.n_sites, dtype=np.int64)
        eta[self.graph.index(x)] = self.N
        return eta

    def __repr__(self):
        return f"InclusionModel(sites={len(self.graph.sites)}, N={self.N}, d={self.d:g})"


def sigma_move(eta, x, y):
    """Move one particle from ``x`` to ``y``; unchanged if ``x`` is empty."""
    if x == y:
        raise ValueError("sigma_move needs x != y")
    out = np.array(eta, dtype=np.int64, copy=True)
    if out[x] > 0:
        out[x] -= 1
        out[y] += 1
    return out


def jump_rate(model, eta, x, y):
    """Rate ``eta_x (d + eta_y) r(x, y)`` of moving one particle from x to y."""
    if x == y:
        raise ValueError("jump_rate needs x != y")
    return float(eta[x] * (model.d + eta[y]) * model.graph.rate[x, y])


def count_configurations(n_sites, N):
    """Number of ways to place N particles on ``n_sites`` sites."""
    return math.comb(N + n_sites - 1, n_sites - 1)


def enumerate_configurations(model=None, *, n_sites=None, N=None, cap=DEFAULT_STATE_CAP):
    """All configurations in lexicographic order, shape ``(count, n_sites)``.

    Either pass a model or both ``n_sites`` and ``N``.

    Raises
    ------
    StateSpaceTooLarge
        When the count exceeds ``cap``.
    """
    if model is not None:
        n_sites, N = model.n_sites, model.N
    count = count_configurations(n_sites, N)
    if count > cap:
        raise StateSpaceTooLarge(count, cap)
    # table[k][n]: compositions of n into k parts, lexicographically ascending
    table = [np.array([[n]], dtype=np.int64) for n in range(N + 1)]
    for k in range(2, n_sites + 1):
        new = []
        for n in range(N + 1):
            blocks = []
            for v in range(n + 1):
                tail = table[n - v]
                head = np.full((tail.shape[0], 1), v, dtype=np.int64)
                blocks.append(np.hstack([head, tail]))
            new.append(np.vstack(blocks))
        table = new
    return table[N]


class StateSpace:
    """Enumerated configurations with exact ranking.

    Parameters
    ----------
    n_sites, N : int
    cap : int
        Largest admissible number of configurations.

    Attributes
    ----------
    configs : ndarray, shape (size, n_sites)
        ``configs[i]`` is the configuration of index ``i``.
    """

    def __init__(self, n_sites, N, cap=DEFAULT_STATE_CAP):
        self.n_sites = int(n_sites)
        self.N = int(N)
        self.configs = enumerate_configurations(n_sites=self.n_sites, N=self.N, cap=cap)
        self.configs.setflags(write=False)
        self.size = self.configs.shape[0]
        self._offsets = self._rank_offsets()

    def _rank_offsets(self):
        N, s = self.N, self.n_sites
        # off[k, rem, a] = number of compositions of rem into (k+1) parts whose
        # first part is below a, i.e. sum_{v<a} count(rem - v, k parts)
        off = np.zeros((s, N + 1, N + 2), dtype=np.int64)
        for k in range(1, s):
            for rem in range(N + 1):
                acc = 0
                for a in range(rem + 1):
                    off[k, rem, a] = acc
                    acc += math.comb(rem - a + k - 1, k - 1)
                off[k, rem, rem + 1] = acc
        return off

    def rank(self, eta):
        """Index of one configuration or of each row of a 2-d array."""
        eta = np.asarray(eta, dtype=np.int64)
        single = eta.ndim == 1
        eta = np.atleast_2d(eta)
        if eta.shape[1] != self.n_sites:
            raise ValueError("configuration length does not match the number of sites")
        if np.any(eta < 0) or np.any(eta.sum(axis=1) != self.N):
            raise ValueError("not a configuration of this space")
        rem = np.full(eta.shape[0], self.N, dtype=np.int64)
        idx = np.zeros(eta.shape[0], dtype=np.int64)
        for x in range(self.n_sites - 1):
            k = self.n_sites - x - 1
            idx += self._offsets[k, rem, eta[:, x]]
            rem = rem - eta[:, x]
        return int(idx[0]) if single else idx

    def valley(self, x):
        """Index of the configuration with all particles at site ``x``."""
        eta = np.zeros(self.n_sites, dtype=np.int64)
        eta[x] = self.N
        return self.rank(eta)

    def valleys(self, sites):
        return np.array([self.valley(x) for x in sites], dtype=np.int64)

    def tube(self, x, y):
        """Indices of the path ``N-i`` particles at x, ``i`` at y, for i = 0..N."""
        eta = np.zeros((self.N + 1, self.n_sites), dtype=np.int64)
        i = np.arange(self.N + 1)
        eta[:, x] = self.N - i
        eta[:, y] += i
        return self.rank(eta)

    def support_masks(self):
        """Bitmask of occupied sites for every configuration."""
        weights = (1 << np.arange(self.n_sites, dtype=np.int64))
        return ((self.configs > 0).astype(np.int64) * weights).sum(axis=1)

    def transition_edges(self, rate):
        """Unordered edges of the configuration graph.

        Each edge is stored once, oriented as the move of one particle from
        site ``src`` to site ``dst`` with ``src < dst`` in site index.

        Returns
        -------
        tail, head, src, dst : ndarray of int64
            ``head`` is obtained from ``tail`` by moving one particle from
            site ``src`` to site ``dst``.
        """
        rate = np.asarray(rate)
        tails, heads, srcs, dsts = [], [], [], []
        for x in range(self.n_sites):
            for y in range(x + 1, self.n_sites):
                if rate[x, y] <= 0 and rate[y, x] <= 0:
                    continue
                t = np.flatnonzero(self.configs[:, x] > 0)
                moved = self.configs[t].copy()
                moved[:, x] -= 1
                moved[:, y] += 1
                tails.append(t)
                heads.append(self.rank(moved))
                srcs.append(np.full(t.size, x, dtype=np.int64))
                dsts.append(np.full(t.size, y, dtype=np.int64))
        if not tails:
            e = np.zeros(0, dtype=np.int64)
            return e, e.copy(), e.copy(), e.copy()
        return (np.concatenate(tails), np.concatenate(heads),
                np.concatenate(srcs), np.concatenate(dsts))
