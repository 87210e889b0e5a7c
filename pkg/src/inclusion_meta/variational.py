"""Explicit test functions, test flows and resistance constants.

Sites of the metastable set are grouped in components ``S_i``; the sites
outside it are the intermediate sites ``y_p``.  A *channel* between
components ``i`` and ``j`` is a triple ``(x, z, y)`` with ``x`` in ``S_i``,
``z`` in ``S_j`` and an intermediate site ``y`` adjacent to both.  The
resistance between two components is the integral over ``t`` in [0, 1] of
the inverse of the total channel conductance

    sum over channels of 1 / ((1 - m_star(y)) ((1 - t)/r(x, y) + t/r(z, y)))

and its discrete analogue replaces ``(1 - t, t)`` by ``(N - t, t - 1)`` and
the integral by a sum over ``t = 1..N``.  The resistance is infinite when
no channel exists.

The test function interpolates between valleys along three-site tubes
``{x, y, z}`` using partial sums of the discrete resistance; the test flow
pushes mass through the same tubes.  Both give the two sides of a
variational bracket around the exact capacity.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import ChannelUndefined, ConditionViolated, TrivialFlowForPartition
from .potential import (
    DiscreteFlow,
    capacity,
    dirichlet_form,
    generalized_thomson_bound,
    solve_equilibrium_potential,
)

__all__ = [
    "ResistanceSet",
    "TestFunction",
    "SigmaDecomposition",
    "SandwichReport",
    "channels",
    "resistance_continuum",
    "resistance_discrete",
    "resistance_set",
    "kernel_K",
    "kernel_L",
    "build_test_function",
    "build_test_flow",
    "classify_edges",
    "dirichlet_decomposition",
    "capacity_sandwich",
    "check_simple_shape",
]


# ---------------------------------------------------------------- channels

def channels(graph, i, j):
    """Open channels ``(x, z, y)`` between components ``i`` and ``j``.

    A channel is open when ``r(x, y) * r(z, y) > 0``.
    """
    r = graph.rate
    out = []
    for x in graph.level2_components[i]:
        for z in graph.level2_components[j]:
            for y in graph.non_star_sites:
                if r[x, y] * r[z, y] > 0:
                    out.append((x, z, y))
    return out


def _conductance_sum(graph, chans, a, b):
    """Total channel conductance for weights ``a`` (near ``x``) and ``b`` (near ``z``).

    ``a`` and ``b`` are arrays of the same shape.  Where some channel has
    ``a = b = 0`` its conductance is infinite and so is the sum.
    """
    r, m = graph.rate, graph.m_star
    total = np.zeros(np.shape(a))
    with np.errstate(divide="ignore"):
        for x, z, y in chans:
            series = a / r[x, y] + b / r[z, y]
            total = total + 1.0 / ((1.0 - m[y]) * series)
    return total


def resistance_continuum(graph, i, j):
    """Resistance between components ``i`` and ``j`` by adaptive quadrature.

    Returns ``math.inf`` when no channel is open.

    Examples
    --------
    One intermediate site with ``m_star = 1/2`` and unit rates towards it
    gives ``integral of (1/2) dt = 1/2``.
    """
    if i == j:
        raise ValueError("resistance needs two distinct components")
    chans = channels(graph, i, j)
    if not chans:
        return math.inf

    def integrand(t):
        return 1.0 / float(_conductance_sum(graph, chans, np.array(1.0 - t), np.array(t)))

    val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-10, epsrel=1e-12, limit=200)
    return float(val)


def _inverse_conductances(graph, N, i, j):
    """``1 / D_t`` for ``t = 1..N`` (index ``t-1``); raises if no channel."""
    chans = channels(graph, i, j)
    if not chans:
        raise ChannelUndefined(f"components {i} and {j} share no open channel")
    t = np.arange(1, N + 1, dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 / _conductance_sum(graph, chans, N - t, t - 1.0)


def resistance_discrete(graph, N, i, j):
    """Discrete resistance: sum over ``t = 1..N`` of ``1 / D_t``; ``inf`` if blocked."""
    if i == j:
        raise ValueError("resistance needs two distinct components")
    if not channels(graph, i, j):
        return math.inf
    return float(np.sum(_inverse_conductances(graph, N, i, j)))


@dataclass
class ResistanceSet:
    """Resistances between all component pairs.

    Attributes
    ----------
    r_continuum : ndarray (kappa, kappa)
        Quadrature values, ``inf`` when blocked, 0 on the diagonal.
    r_discrete : ndarray or None
        Discrete values for the given ``N``.
    P, Q : dict
        ``(x, z) -> list of y`` with ``r(x,y) r(z,y) > 0`` (P) and
        ``r(x,y) + r(z,y) > 0`` (Q), for ``x``, ``z`` in distinct components.
    """

    r_continuum: np.ndarray
    r_discrete: np.ndarray = None
    P: dict = field(default_factory=dict)
    Q: dict = field(default_factory=dict)

    @property
    def blocked(self):
        b = ~np.isfinite(self.r_continuum)
        np.fill_diagonal(b, False)
        return b

    @property
    def I(self):
        """Ordered pairs of distinct components with finite resistance."""
        k = self.r_continuum.shape[0]
        return {(i, j) for i in range(k) for j in range(k) if i != j and not self.blocked[i, j]}


def resistance_set(graph, N=None):
    k = graph.kappa_star
    rc = np.zeros((k, k))
    rd = np.zeros((k, k)) if N is not None else None
    for i in range(k):
        for j in range(i + 1, k):
            rc[i, j] = rc[j, i] = resistance_continuum(graph, i, j)
            if N is not None:
                rd[i, j] = rd[j, i] = resistance_discrete(graph, N, i, j)
    r = graph.rate
    P, Q = {}, {}
    comps = graph.level2_components
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            for x in comps[i]:
                for z in comps[j]:
                    P[(x, z)] = [y for y in graph.non_star_sites if r[x, y] * r[z, y] > 0]
                    Q[(x, z)] = [y for y in graph.non_star_sites if r[x, y] + r[z, y] > 0]
    return ResistanceSet(rc, rd, P, Q)


# ---------------------------------------------------------------- kernels

def _shares(N, rx, rz):
    """Fractions ``a_t/(a_t+b_t)`` and ``b_t/(a_t+b_t)`` for ``t = 1..N``.

    ``a_t = (N-t)/rx`` and ``b_t = (t-1)/rz``.  A zero count is a finite 0
    whatever the rate; a positive count over a zero rate is a blocked
    (infinite) term.  A blocked term against a finite one takes the whole
    share, so ``finite/blocked`` is 0 and ``blocked/blocked`` is 1.
    """
    fa = np.zeros(N)
    fb = np.zeros(N)
    for t in range(1, N + 1):
        ca, cb = N - t, t - 1
        a_blocked = ca > 0 and rx == 0
        b_blocked = cb > 0 and rz == 0
        if a_blocked and b_blocked:
            raise ChannelUndefined("both legs of the channel are closed")
        if a_blocked:
            fa[t - 1] = 1.0
        elif b_blocked:
            fb[t - 1] = 1.0
        else:
            a = ca / rx if ca else 0.0
            b = cb / rz if cb else 0.0
            if a + b == 0:
                fa[t - 1] = fb[t - 1] = 0.5  # only for N = 1, weighted by 1/D = 0
            else:
                fa[t - 1] = a / (a + b)
                fb[t - 1] = b / (a + b)
    return fa, fb


@lru_cache(maxsize=4096)
def _profile(graph_key, N, x, z, y, kind):
    graph, i, j = _GRAPHS[graph_key]
    inv_d = _inverse_conductances(graph, N, i, j)
    if kind == "K":
        fa, fb = _shares(N, graph.rate[x, y], graph.rate[z, y])
    else:
        t = np.arange(1, N + 1, dtype=float)
        fa, fb = (N - t) / (N - 1), (t - 1) / (N - 1)
    cum_a = np.concatenate([[0.0], np.cumsum(fa * inv_d)])
    cum_b = np.concatenate([[0.0], np.cumsum(fb * inv_d)])
    return cum_a, cum_b


_GRAPHS = {}


def _tube_profile(graph, N, x, z, y, kind):
    i, j = graph.component_of(x), graph.component_of(z)
    key = (id(graph), i, j)
    _GRAPHS[key] = (graph, i, j)
    return _profile(key, N, x, z, y, kind)


def _check_kernel_args(graph, N, i, n, p, j, m, k, ell):
    if not channels(graph, i, j):
        raise ChannelUndefined(f"components {i} and {j} share no open channel")
    if not (k >= 1 and ell >= 0 and k + ell <= N):
        raise ValueError("need k >= 1, l >= 0 and k + l <= N")
    return (graph.level2_components[i][n], graph.level2_components[j][m], graph.non_star_sites[p])


def kernel_K(graph, N, i, n, p, j, m, k, ell):
    """Partial-sum kernel for a tube through an open or half-open intermediate site.

    Parameters
    ----------
    i, j : int
        Component indices.
    n, m : int
        Positions of the sites within components ``i`` and ``j``.
    p : int
        Position of the intermediate site among the non-star sites.
    k, ell : int
        Particles at the ``i``-site and at the intermediate site.
    """
    x, z, y = _check_kernel_args(graph, N, i, n, p, j, m, k, ell)
    cum_a, cum_b = _tube_profile(graph, N, x, z, y, "K")
    return float(cum_a[k] + cum_b[k + ell])


def kernel_L(graph, N, i, n, p, j, m, k, ell):
    """Kernel for tubes whose intermediate site touches neither endpoint."""
    x, z, y = _check_kernel_args(graph, N, i, n, p, j, m, k, ell)
    if N < 2:
        raise ValueError("the L kernel needs N >= 2")
    cum_a, cum_b = _tube_profile(graph, N, x, z, y, "L")
    return float(cum_a[k] + cum_b[k + ell])


# ---------------------------------------------------------------- test function

@dataclass
class TestFunction:
    __test__ = False  # not a pytest class

    values: np.ndarray
    variant: str
    A: tuple = ()


def check_simple_shape(graph):
    """Validate the four-site shape with two metastable sites.

    Returns ``(x1, x2, y1, y2)`` as site indices.

    Raises
    ------
    ConditionViolated
    """
    r = graph.rate
    if graph.n_sites != 4 or len(graph.s_star) != 2 or graph.kappa_star != 2:
        raise ConditionViolated("simple shape needs four sites of which exactly two are metastable")
    x1, x2 = graph.s_star
    if r[x1, x2] != 0 or r[x2, x1] != 0:
        raise ConditionViolated("the two metastable sites must not be directly connected")
    y1, y2 = graph.non_star_sites
    for x in (x1, x2):
        for y in (y1, y2):
            if not r[y, x] > r[x, y] > 0:
                raise ConditionViolated(
                    f"need r(y,x) > r(x,y) > 0 for x={graph.sites[x]}, y={graph.sites[y]}"
                )
    return x1, x2, y1, y2


def _mask_sets(graph, mask):
    sites = [x for x in range(graph.n_sites) if mask >> x & 1]
    star = set(graph.s_star)
    X = [x for x in sites if x in star]
    Y = [x for x in sites if x not in star]
    return X, Y


def _in_tube_union(graph, mask):
    """True if the occupied sites fit inside some ``{x_i, y, x_j}`` with i != j."""
    X, Y = _mask_sets(graph, mask)
    if len(Y) > 1 or len(X) > 2:
        return False
    if len(X) == 2 and graph.component_of(X[0]) == graph.component_of(X[1]):
        return False
    return graph.kappa_star >= 2 and len(graph.non_star_sites) >= 1


def _tube_value(graph, N, res, x, z, y, k, ell, fx, fz):
    """Test function inside the tube ``{x, y, z}`` at ``k`` on x and ``ell`` on y."""
    i, j = graph.component_of(x), graph.component_of(z)
    r = graph.rate
    rx, rz = r[x, y], r[z, y]
    if not res.blocked[i, j]:
        kind = "K" if rx + rz > 0 else "L"
        cum_a, cum_b = _tube_profile(graph, N, x, z, y, kind)
        total = res.r_discrete[i, j]
        K = cum_a[k] + cum_b[k + ell]
        return (K * fx + (total - K) * fz) / total
    if rx + rz > 0:
        if rx > 0:
            return ((k + ell) * fx + (N - ell - k) * fz) / N
        return (k * fx + (N - k) * fz) / N
    return ((k + ell / 2) * fx + (N - k - ell / 2) * fz) / N


def build_test_function(chain, variant="general", A=None):
    """Test function approximating the equilibrium potential.

    Parameters
    ----------
    chain : InclusionChain
    variant : {"simple", "general"}
        ``"simple"`` requires the four-site shape (see
        :func:`check_simple_shape`) and targets the potential between the
        two metastable valleys.  ``"general"`` targets the potential between
        the valleys of the components in ``A`` and those of the rest.
    A : iterable of int
        Component indices on the value-1 side (general variant).

    Raises
    ------
    ConditionViolated
        For an inadmissible shape or a trivial partition.
    """
    if variant == "simple":
        return _simple_test_function(chain)
    if variant != "general":
        raise ValueError("variant must be 'simple' or 'general'")
    graph = chain.graph
    A = tuple(sorted(set(A or ())))
    k = graph.kappa_star
    if not A or len(A) >= k or any(a < 0 or a >= k for a in A):
        raise ConditionViolated("A must be a nonempty proper subset of the components")
    N = chain.model.N
    res = resistance_set(graph, N)
    comps = graph.level2_components
    fsite = np.zeros(graph.n_sites)
    for a in A:
        fsite[list(comps[a])] = 1.0

    eta = chain.space.configs
    masks = chain.space.support_masks()
    f = np.full(chain.size, np.nan)
    later = []
    half = N // 2
    for mask in np.unique(masks):
        rows = np.flatnonzero(masks == mask)
        X, Y = _mask_sets(graph, int(mask))
        sites = X + Y
        if len(sites) == 1:
            f[rows] = fsite[sites[0]]
        elif _in_tube_union(graph, int(mask)):
            if len(X) == 1:
                f[rows] = fsite[X[0]]
            elif len(X) == 0:
                f[rows] = 0.0  # cannot happen with >= 2 occupied sites
            else:
                x, z = sorted(X)
                y = Y[0] if Y else graph.non_star_sites[0]
                kk = eta[rows, x]
                ll = eta[rows, y] if Y else np.zeros_like(kk)
                f[rows] = _tube_value(graph, N, res, x, z, y, kk, ll, fsite[x], fsite[z])
        elif len(X) == 2 and len(Y) <= 1:
            f[rows] = fsite[X[0]]  # two sites of the same component (plus one y)
        elif len(X) == 3 and not Y and len({graph.component_of(x) for x in X}) < 3:
            later.append((rows, X))
        else:
            mass = np.zeros(rows.size)
            hit = np.zeros(rows.size, dtype=bool)
            for a in A:
                mass = eta[rows][:, list(comps[a])].sum(axis=1)
                hit |= mass > half
            f[rows] = hit.astype(float)
    for rows, X in later:
        labels = [graph.component_of(x) for x in X]
        if len(set(labels)) == 1:
            f[rows] = fsite[X[0]]
            continue
        for a in range(3):
            for b in range(a + 1, 3):
                if labels[a] == labels[b]:
                    pair = (X[a], X[b])
        keep, drop = min(pair), max(pair)
        moved = eta[rows].copy()
        moved[:, keep] += moved[:, drop]
        moved[:, drop] = 0
        f[rows] = f[chain.space.rank(moved)]
    if np.any(np.isnan(f)):
        raise RuntimeError("test function left undefined on some configurations")
    return TestFunction(values=f, variant="general", A=A)


def _simple_kernel(graph, N, x1, x2, ys, p):
    """Cumulative sums of the two-channel kernel for intermediate site ``ys[p]``."""
    r, m = graph.rate, graph.m_star
    t = np.arange(1, N + 1, dtype=float)
    y = ys[p]
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = sum(1.0 / ((1 - m[q]) * ((N - t) / r[x1, q] + (t - 1) / r[x2, q])) for q in ys)
        mix = (N - t) / r[x1, y] + (t - 1) / r[x2, y]
        first = ((N - t) / r[x1, y] / mix) / denom
        second = ((t - 1) / r[x2, y] / mix) / denom
    first = np.nan_to_num(first, nan=0.0, posinf=0.0)
    second = np.nan_to_num(second, nan=0.0, posinf=0.0)
    return np.concatenate([[0.0], np.cumsum(first)]), np.concatenate([[0.0], np.cumsum(second)])


def _simple_test_function(chain):
    graph = chain.graph
    x1, x2, y1, y2 = check_simple_shape(graph)
    N = chain.model.N
    ys = (y1, y2)
    total = resistance_discrete(graph, N, graph.component_of(x1), graph.component_of(x2))
    eta = chain.space.configs
    f = np.where(eta[:, x1] > N // 2, 1.0, 0.0)  # everything outside the tubes
    # valleys and the x-y tubes
    for x, val in ((x1, 1.0), (x2, 0.0)):
        for y in ys:
            on = (eta[:, x] + eta[:, y] == N) & (eta[:, x] >= 1)
            f[on] = val
    for y in ys:
        f[eta[:, y] == N] = 0.0
    for p, y in enumerate(ys):
        other = ys[1 - p]
        on = (eta[:, other] == 0) & (eta[:, x1] >= 1) & (eta[:, x2] >= 1)
        cum_a, cum_b = _simple_kernel(graph, N, x1, x2, ys, p)
        k = eta[on, x1]
        ell = eta[on, y]
        f[on] = (cum_a[k] + cum_b[k + ell]) / total
    return TestFunction(values=f, variant="simple", A=(graph.component_of(x1),))


# ---------------------------------------------------------------- edge classes

@dataclass
class SigmaDecomposition:
    """Dirichlet form split by where the move happens.

    ``edge_class[e]`` is 1 (inside a three-site tube), 2 (between two tubes),
    3 (between the tube union and its complement) or 4 (outside the tubes).
    """

    edge_class: np.ndarray
    sigma: np.ndarray = None

    @property
    def sigma1(self):
        return float(self.sigma[0])

    @property
    def sigma2(self):
        return float(self.sigma[1])

    @property
    def sigma3(self):
        return float(self.sigma[2])

    @property
    def sigma4(self):
        return float(self.sigma[3])

    @property
    def total(self):
        return float(np.sum(self.sigma))

    def remainder_ratio(self):
        """``(sigma2 + sigma3 + sigma4) / sigma1``."""
        return float(np.sum(self.sigma[1:]) / self.sigma[0])

    def counts(self):
        return np.bincount(self.edge_class, minlength=5)[1:]


def classify_edges(chain, variant="general"):
    """Assign every edge to one of the four classes.

    Edges shared by several three-site tubes (those inside a two-site
    sub-tube) are counted once, in class 1.
    """
    graph = chain.graph
    if variant == "simple":
        check_simple_shape(graph)
    masks = chain.space.support_masks()
    uniq = np.unique(np.concatenate([masks, masks[chain.tail] | masks[chain.head]]))
    table = {int(u): _in_tube_union(graph, int(u)) for u in uniq}
    lookup = np.vectorize(table.__getitem__, otypes=[bool])
    in_u = lookup(masks)
    joint = lookup(masks[chain.tail] | masks[chain.head])
    ut, uh = in_u[chain.tail], in_u[chain.head]
    cls = np.full(chain.n_edges, 4, dtype=np.int64)
    cls[ut != uh] = 3
    cls[ut & uh] = 2
    cls[joint] = 1
    return SigmaDecomposition(edge_class=cls)


def dirichlet_decomposition(chain, f, classes=None):
    """Split ``D(f)`` into the four classes of :func:`classify_edges`."""
    values = f.values if isinstance(f, TestFunction) else np.asarray(f, dtype=float)
    if classes is None:
        classes = classify_edges(chain)
    diff = values[chain.head] - values[chain.tail]
    terms = chain.conductance * diff * diff
    sigma = np.bincount(classes.edge_class, weights=terms, minlength=5)[1:]
    return SigmaDecomposition(edge_class=classes.edge_class, sigma=sigma)


# ---------------------------------------------------------------- test flow

def _flow_tube(graph, N, x, z, y, resistance, chans):
    """Pairs and values of the test flow inside the tube ``{x, y, z}``.

    ``x`` is on the source side.  Returns ``(from, to, value)`` arrays of
    configurations (as occupation rows) and flow values.
    """
    r, m = graph.rate, graph.m_star
    ks, ls = [], []
    for ell in range(0, N // 2):
        for k in range(1, N - ell):
            ks.append(k)
            ls.append(ell)
    k = np.array(ks, dtype=np.int64)
    ell = np.array(ls, dtype=np.int64)
    a = (N - k - ell - 1).astype(float)
    b = (k + ell).astype(float)
    denom = _conductance_sum(graph, chans, a, b)
    c_p = a / r[x, y] + b / r[z, y]
    g = m[y] ** ell / c_p / (resistance * denom)
    base = np.zeros((k.size, graph.n_sites), dtype=np.int64)
    base[:, x] = k
    base[:, y] = ell
    base[:, z] = N - k - ell
    to_y_from_x = base.copy()
    to_y_from_x[:, x] -= 1
    to_y_from_x[:, y] += 1
    to_y_from_z = base.copy()
    to_y_from_z[:, z] -= 1
    to_y_from_z[:, y] += 1
    return base, to_y_from_x, to_y_from_z, g


def build_test_flow(chain, variant="general", A=None):
    """Test flow through the three-site tubes from the ``A`` side to the rest.

    Raises
    ------
    TrivialFlowForPartition
        When no open channel joins ``A`` to its complement.
    """
    graph = chain.graph
    N = chain.model.N
    space = chain.space
    froms, tos, vals = [], [], []
    if variant == "simple":
        x1, x2, y1, y2 = check_simple_shape(graph)
        r, m = graph.rate, graph.m_star
        res = resistance_continuum(graph, graph.component_of(x1), graph.component_of(x2))
        for y in (y1, y2):
            for ell in range(0, N // 2):
                k = np.arange(1, N - ell)
                if k.size == 0:
                    continue
                e2 = N - k - ell  # occupation of x2
                with np.errstate(divide="ignore"):
                    denom = sum(1.0 / ((1 - m[q]) * ((e2 - 1) / r[x1, q] + (k + ell) / r[x2, q]))
                                for q in (y1, y2))
                g = m[y] ** ell / ((e2 - 1) / r[x1, y] + (k + ell) / r[x2, y]) / (res * denom)
                base = np.zeros((k.size, 4), dtype=np.int64)
                base[:, x1], base[:, y], base[:, x2] = k, ell, e2
                mv1 = base.copy()
                mv1[:, x1] -= 1
                mv1[:, y] += 1
                mv2 = base.copy()
                mv2[:, x2] -= 1
                mv2[:, y] += 1
                froms += [base, base]
                tos += [mv1, mv2]
                vals += [g, -g]
        A = (graph.component_of(x1),)
    elif variant == "general":
        A = tuple(sorted(set(A or ())))
        k_star = graph.kappa_star
        if not A or len(A) >= k_star:
            raise ConditionViolated("A must be a nonempty proper subset of the components")
        B = [j for j in range(k_star) if j not in A]
        comps = graph.level2_components
        r = graph.rate
        for i in A:
            for j in B:
                chans = channels(graph, i, j)
                if not chans:
                    continue
                res = resistance_continuum(graph, i, j)
                for x in comps[i]:
                    for z in comps[j]:
                        for y in graph.non_star_sites:
                            if r[x, y] * r[z, y] <= 0:
                                continue
                            base, mvx, mvz, g = _flow_tube(graph, N, x, z, y, res, chans)
                            froms += [base, base]
                            tos += [mvx, mvz]
                            vals += [g, -g]
    else:
        raise ValueError("variant must be 'simple' or 'general'")
    if not vals:
        raise TrivialFlowForPartition("no open channel crosses the partition; the test flow is zero")
    a = space.rank(np.vstack(froms))
    b = space.rank(np.vstack(tos))
    return DiscreteFlow.from_pairs(chain, a, b, np.concatenate(vals))


# ---------------------------------------------------------------- sandwich

@dataclass
class SandwichReport:
    N: int
    d: float
    capacity: float
    lower: float
    upper: float
    target: float
    flux: float = float("nan")
    note: str = ""

    @property
    def scale(self):
        return self.N / self.d ** 2

    @property
    def normalized(self):
        s = self.scale
        return {"cap": self.capacity * s, "lower": self.lower * s, "upper": self.upper * s}

    def ordered(self, rtol=1e-9):
        return (self.lower <= self.capacity * (1 + rtol)) and (self.capacity <= self.upper * (1 + rtol))

    def as_row(self):
        n = self.normalized
        return {
            "N": self.N, "d_N": self.d, "cap": self.capacity, "lower": self.lower,
            "upper": self.upper, "target": self.target, "cap_norm": n["cap"],
            "lower_norm": n["lower"], "upper_norm": n["upper"], "note": self.note,
        }


def capacity_sandwich(chain, A, variant="general"):
    """Exact capacity between the ``A`` components and the rest, with its bracket.

    The upper end is the Dirichlet form of the test function, the lower end
    the generalized Thomson value of the test flow with the exact potential.
    ``target`` is ``(1/|S_star|) * sum over i in A, j not in A of 1/R_ij``
    (blocked pairs contribute 0), the predicted limit of ``cap * N / d**2``.
    """
    graph = chain.graph
    if variant == "simple":
        x1, _, _, _ = check_simple_shape(graph)
        A = (graph.component_of(x1),)
    A = tuple(sorted(set(A)))
    B = tuple(j for j in range(graph.kappa_star) if j not in A)
    if not A or not B:
        raise ConditionViolated("A must be a nonempty proper subset of the components")
    src = chain.component_valleys(A)
    snk = chain.component_valleys(B)
    f = build_test_function(chain, variant, A)
    pot = solve_equilibrium_potential(chain, src, snk)
    note = ""
    try:
        psi = build_test_flow(chain, variant, A)
        lower = generalized_thomson_bound(chain, psi, pot)
    except TrivialFlowForPartition:
        lower = 0.0
        note = "no open channel across the partition; lower bound set to 0"
    rep = capacity(chain, src, snk)
    upper = dirichlet_form(chain, f.values)
    res = resistance_set(graph)
    target = sum(1.0 / res.r_continuum[i, j] for i in A for j in B if not res.blocked[i, j])
    target /= len(graph.s_star)
    out = SandwichReport(chain.model.N, chain.model.d, rep.capacity, lower, upper, target,
                         flux=rep.flux, note=note)
    return out
