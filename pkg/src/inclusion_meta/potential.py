"""Potential theory on the configuration graph.

The reversible chain is encoded as a weighted graph whose edge weights are
the conductances ``c(eta, zeta) = mu(eta) q(eta, zeta)``; each unordered edge
is stored once, so the factor 1/2 in the Dirichlet form and in the flow
inner product is absorbed by single counting.

Linear solves use the symmetric weighted Laplacian ``L = diag(c.sum) - C``
after eliminating the boundary, which is symmetric positive definite for any
nonempty boundary of an irreducible chain.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BracketViolation,
    DivisionByZeroRate,
    RatioNotContracting,
    SolveDiverged,
    TrivialFlow,
)
from .measure import stationary_measure
from .model import DEFAULT_STATE_CAP, StateSpace

__all__ = [
    "InclusionChain",
    "PotentialField",
    "DiscreteFlow",
    "CapacityReport",
    "TubeResidual",
    "dirichlet_form",
    "solve_equilibrium_potential",
    "capacity",
    "flow_of_function",
    "flow_inner",
    "flow_norm",
    "divergence",
    "generalized_thomson_bound",
    "exact_mean_hitting",
    "mean_hitting_field",
    "tube_residual_check",
    "tube_flatness_check",
    "DIRECT_SOLVE_LIMIT",
]

# Above this many unknowns the solver switches from sparse LU to Jacobi-PCG.
DIRECT_SOLVE_LIMIT = 1_000_000
RESIDUAL_TOL = 1e-9


class InclusionChain:
    """Configuration graph of a model with its invariant measure and edges.

    Parameters
    ----------
    model : InclusionModel
    cap : int
        Maximum number of configurations to enumerate.

    Attributes
    ----------
    space : StateSpace
    measure : MeasureTable
    mu : ndarray
        Normalised invariant probabilities.
    tail, head, src, dst : ndarray
        Edge list; ``head`` is ``tail`` with one particle moved ``src -> dst``.
    q_fwd, q_bwd : ndarray
        Jump rates ``tail -> head`` and ``head -> tail``.
    conductance : ndarray
        ``mu(tail) q_fwd`` which equals ``mu(head) q_bwd`` by reversibility.
    """

    def __init__(self, model, cap=DEFAULT_STATE_CAP):
        self.model = model
        self.space = StateSpace(model.n_sites, model.N, cap=cap)
        self.measure = stationary_measure(model, self.space)
        self.mu = self.measure.mu
        r = model.graph.rate
        d = model.d
        tail, head, src, dst = self.space.transition_edges(r)
        eta = self.space.configs
        et, eh = eta[tail], eta[head]
        rows = np.arange(tail.size)
        self.tail, self.head, self.src, self.dst = tail, head, src, dst
        self.q_fwd = et[rows, src] * (d + et[rows, dst]) * r[src, dst]
        self.q_bwd = eh[rows, dst] * (d + eh[rows, src]) * r[dst, src]
        log_c = self.measure.log_mu[tail] + np.log(self.q_fwd)
        self.conductance = np.exp(log_c)
        n = self.space.size
        W = sp.coo_matrix((self.conductance, (tail, head)), shape=(n, n)).tocsr()
        W = W + W.T
        self.total_conductance = np.asarray(W.sum(axis=1)).ravel()
        self.laplacian = (sp.diags(self.total_conductance) - W).tocsr()
        ids = np.arange(1, tail.size + 1, dtype=float)
        self._edge_lookup = sp.coo_matrix(
            (np.concatenate([ids, -ids]), (np.concatenate([tail, head]), np.concatenate([head, tail]))),
            shape=(n, n),
        ).tocsr()
        self._factor_cache = {}

    @property
    def size(self):
        return self.space.size

    @property
    def n_edges(self):
        return self.tail.size

    @property
    def graph(self):
        return self.model.graph

    def valley(self, x):
        return self.space.valley(self.graph.index(x))

    def valleys(self, sites):
        return self.space.valleys([self.graph.index(x) for x in sites])

    def component_valleys(self, comps):
        """Configuration indices of the valleys of the listed level-2 components."""
        sites = [x for i in comps for x in self.graph.level2_components[i]]
        return self.space.valleys(sites)

    def edge_ids(self, a, b):
        """Edge index and orientation sign for ordered pairs ``(a, b)``.

        Returns ``(ids, signs)``; ``sign = +1`` when ``(a, b)`` is stored as
        ``tail -> head`` and ``-1`` for the reverse.  Pairs that are not
        edges raise :class:`DivisionByZeroRate`.
        """
        a = np.atleast_1d(np.asarray(a, dtype=np.int64))
        b = np.atleast_1d(np.asarray(b, dtype=np.int64))
        raw = np.asarray(self._edge_lookup[a, b]).ravel()
        if np.any(raw == 0):
            bad = int(np.flatnonzero(raw == 0)[0])
            raise DivisionByZeroRate(
                f"pair ({int(a[bad])}, {int(b[bad])}) has zero jump rate; a flow cannot charge it"
            )
        return np.abs(raw).astype(np.int64) - 1, np.sign(raw)

    def generator_matrix(self):
        """Sparse generator ``Q`` with ``Q[eta, zeta] = q(eta, zeta)`` off the diagonal."""
        n = self.size
        Q = sp.coo_matrix(
            (np.concatenate([self.q_fwd, self.q_bwd]),
             (np.concatenate([self.tail, self.head]), np.concatenate([self.head, self.tail]))),
            shape=(n, n),
        ).tocsr()
        return Q - sp.diags(np.asarray(Q.sum(axis=1)).ravel())


def _as_values(chain, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (chain.size,):
        raise ValueError(f"function must have one value per configuration ({chain.size})")
    return f


def dirichlet_form(chain, f):
    """``sum`` over unordered edges of ``mu q (f(zeta) - f(eta))**2``."""
    f = _as_values(chain, f)
    diff = f[chain.head] - f[chain.tail]
    return float(np.dot(chain.conductance, diff * diff))


@dataclass
class PotentialField:
    """Solution of the Dirichlet problem with value 1 on ``source`` and 0 on ``sink``."""

    values: np.ndarray
    source: np.ndarray
    sink: np.ndarray
    harmonic_residual: float
    iterations: int = 1


def _split(chain, A, B):
    A = np.unique(np.atleast_1d(np.asarray(A, dtype=np.int64)))
    B = np.unique(np.atleast_1d(np.asarray(B, dtype=np.int64)))
    if A.size == 0:
        raise ValueError("source set must be nonempty")
    if np.intersect1d(A, B).size:
        raise ValueError("source and sink sets must be disjoint")
    boundary = np.zeros(chain.size, dtype=bool)
    boundary[A] = True
    boundary[B] = True
    return A, B, np.flatnonzero(~boundary)


def _solve_spd(chain, free, rhs):
    """Solve ``L[free, free] x = rhs``; returns ``(x, iterations)``."""
    if free.size <= DIRECT_SOLVE_LIMIT:
        key = (free.size, hash(free.tobytes()))
        cache = chain._factor_cache
        if key not in cache:
            L = chain.laplacian[free][:, free].tocsc()
            # symmetric positive definite: symmetric ordering, no pivoting
            cache.clear()
            cache[key] = spla.splu(L, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                   options=dict(SymmetricMode=True))
        return cache[key].solve(rhs), 1
    L = chain.laplacian[free][:, free].tocsc()
    diag = L.diagonal()
    M = sp.diags(1.0 / diag)
    maxiter = int(50 * math.sqrt(free.size))
    x, info = spla.cg(L, rhs, rtol=1e-10, atol=0.0, maxiter=maxiter, M=M)
    if info != 0:
        res = np.linalg.norm(L @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
        raise SolveDiverged(maxiter if info > 0 else 0, res)
    return x, maxiter


def _harmonic_residual(chain, values, free):
    """Max over free states of ``|L h| / total conductance``, i.e. the
    generator applied to ``h`` relative to the total jump rate."""
    if free.size == 0:
        return 0.0
    r = (chain.laplacian @ values)[free]
    return float(np.max(np.abs(r) / chain.total_conductance[free]))


def solve_equilibrium_potential(chain, A, B):
    """Probability of hitting ``A`` before ``B`` from every configuration.

    Parameters
    ----------
    chain : InclusionChain
    A, B : array_like of int
        Disjoint configuration index sets; ``A`` nonempty.  An empty ``B``
        gives the constant function 1.

    Raises
    ------
    SolveDiverged
        If the harmonic residual stays above ``1e-9`` after one refinement.
    """
    A, B, free = _split(chain, A, B)
    h = np.zeros(chain.size)
    h[A] = 1.0
    if B.size == 0:
        h[:] = 1.0
        return PotentialField(h, A, B, 0.0, 0)
    if free.size:
        L_fa = chain.laplacian[free][:, A]
        rhs = -np.asarray(L_fa.sum(axis=1)).ravel()
        x, its = _solve_spd(chain, free, rhs)
        h[free] = x
        res = _harmonic_residual(chain, h, free)
        if res > RESIDUAL_TOL:
            corr, more = _solve_spd(chain, free, -(chain.laplacian @ h)[free])
            h[free] += corr
            its += more
            res = _harmonic_residual(chain, h, free)
            if res > RESIDUAL_TOL:
                raise SolveDiverged(its, res)
    else:
        its, res = 0, 0.0
    np.clip(h, 0.0, 1.0, out=h)
    return PotentialField(h, A, B, res, its)


@dataclass
class CapacityReport:
    """Capacity with its equilibrium potential and optional variational bracket."""

    capacity: float
    potential: PotentialField
    flux: float
    lower_bound: float = float("nan")
    upper_bound: float = float("nan")
    solver_iterations: int = 1
    residual: float = 0.0

    def bracket_ok(self, rtol=1e-9):
        ok = True
        if not math.isnan(self.lower_bound):
            ok &= self.lower_bound <= self.capacity * (1 + rtol) + 1e-300
        if not math.isnan(self.upper_bound):
            ok &= self.capacity <= self.upper_bound * (1 + rtol) + 1e-300
        return bool(ok)


def capacity(chain, A, B, test_function=None, test_flow=None, rtol=1e-9):
    """Capacity between configuration sets ``A`` and ``B``.

    The value is ``D(h)`` for the equilibrium potential ``h``; the net flux
    out of ``A`` is reported alongside as an independent check.  Optionally
    a test function (Dirichlet upper bound) and a test flow (generalized
    Thomson lower bound) are evaluated.

    Raises
    ------
    BracketViolation
        If the bounds do not enclose the capacity within ``rtol``.
    """
    A_arr = np.atleast_1d(np.asarray(A, dtype=np.int64))
    B_arr = np.atleast_1d(np.asarray(B, dtype=np.int64))
    pot = solve_equilibrium_potential(chain, A_arr, B_arr)
    if B_arr.size == 0:
        return CapacityReport(0.0, pot, 0.0, solver_iterations=0)
    cap = dirichlet_form(chain, pot.values)
    flux = float(np.sum((chain.laplacian @ pot.values)[pot.source]))
    rep = CapacityReport(cap, pot, flux, solver_iterations=pot.iterations,
                         residual=pot.harmonic_residual)
    if test_function is not None:
        rep.upper_bound = dirichlet_form(chain, test_function)
    if test_flow is not None:
        rep.lower_bound = generalized_thomson_bound(chain, test_flow, pot)
    if not rep.bracket_ok(rtol):
        raise BracketViolation(
            f"bracket violated: lower={rep.lower_bound:.6e} cap={cap:.6e} upper={rep.upper_bound:.6e}"
        )
    return rep


class DiscreteFlow:
    """Antisymmetric edge function stored once per unordered edge.

    ``values[e]`` is the flow from ``chain.tail[e]`` to ``chain.head[e]``;
    the reverse orientation is implied with the opposite sign, so
    antisymmetry and compatibility hold by construction.
    """

    def __init__(self, chain, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (chain.n_edges,):
            raise ValueError("flow needs one value per edge")
        self.chain = chain
        self.values = values

    @classmethod
    def zeros(cls, chain):
        return cls(chain, np.zeros(chain.n_edges))

    @classmethod
    def from_pairs(cls, chain, a, b, values):
        """Accumulate ``values`` on ordered pairs ``(a, b)``.

        Raises
        ------
        DivisionByZeroRate
            If some pair is not an edge of the configuration graph.
        """
        ids, signs = chain.edge_ids(a, b)
        out = np.zeros(chain.n_edges)
        np.add.at(out, ids, signs * np.asarray(values, dtype=float))
        return cls(chain, out)

    def __call__(self, a, b):
        """Value of the flow on the ordered pair ``(a, b)``."""
        ids, signs = self.chain.edge_ids(a, b)
        out = signs * self.values[ids]
        return out if out.size > 1 else float(out[0])

    def __add__(self, other):
        return DiscreteFlow(self.chain, self.values + other.values)

    def __mul__(self, c):
        return DiscreteFlow(self.chain, self.values * c)

    __rmul__ = __mul__

    def is_trivial(self):
        return not np.any(self.values)


def flow_of_function(chain, f):
    """The flow ``mu(eta) q(eta, zeta) (f(eta) - f(zeta))``."""
    f = _as_values(chain, f)
    return DiscreteFlow(chain, chain.conductance * (f[chain.tail] - f[chain.head]))


def flow_inner(phi, psi):
    """Inner product ``sum over unordered edges of phi psi / (mu q)``."""
    return float(np.dot(phi.values, psi.values / phi.chain.conductance))


def flow_norm(phi):
    """Norm induced by :func:`flow_inner`."""
    return math.sqrt(flow_inner(phi, phi))


def divergence(phi, subset=None):
    """Net outflow at every configuration, or summed over ``subset``."""
    ch = phi.chain
    div = (np.bincount(ch.tail, weights=phi.values, minlength=ch.size)
           - np.bincount(ch.head, weights=phi.values, minlength=ch.size))
    if subset is None:
        return div
    return float(div[np.asarray(subset, dtype=np.int64)].sum())


def generalized_thomson_bound(chain, psi, potential):
    """``[sum_eta h(eta) div psi(eta)]**2 / ||psi||**2``, a lower bound on the capacity.

    Raises
    ------
    TrivialFlow
        If ``psi`` vanishes identically.
    """
    if psi.is_trivial():
        raise TrivialFlow("flow is identically zero")
    h = potential.values if isinstance(potential, PotentialField) else np.asarray(potential)
    # sum h div psi = <Phi_h, psi>; the edge form avoids cancellation between
    # large opposite divergences at neighbouring configurations
    num = float(np.dot(psi.values, h[chain.tail] - h[chain.head]))
    return num * num / flow_inner(psi, psi)


def mean_hitting_field(chain, target):
    """Expected hitting time of ``target`` from every configuration."""
    target = np.unique(np.atleast_1d(np.asarray(target, dtype=np.int64)))
    if target.size == 0:
        raise ValueError("target must be nonempty")
    mask = np.ones(chain.size, dtype=bool)
    mask[target] = False
    free = np.flatnonzero(mask)
    u = np.zeros(chain.size)
    if free.size:
        x, its = _solve_spd(chain, free, chain.mu[free])
        u[free] = x
        res = np.abs((chain.laplacian @ u)[free] - chain.mu[free]) / chain.total_conductance[free]
        scale = np.maximum(np.abs(u[free]), 1.0)
        if np.max(res / scale) > RESIDUAL_TOL:
            raise SolveDiverged(its, float(np.max(res / scale)))
    return u


def exact_mean_hitting(chain, start, target):
    """Expected time to reach ``target`` from configuration index ``start``."""
    target = np.atleast_1d(np.asarray(target, dtype=np.int64))
    if int(start) in set(target.tolist()):
        return 0.0
    return float(mean_hitting_field(chain, target)[int(start)])


@dataclass
class TubeResidual:
    """Per-step harmonic defect along a two-site path.

    ``residuals[i-1]`` is the defect at the configuration with ``i``
    particles moved, ``scaled`` multiplies it by ``i (N - i) / (d N)`` and
    ``constant`` is the largest scaled value.
    """

    residuals: np.ndarray
    scaled: np.ndarray
    constant: float


def tube_residual_check(chain, h, x, y):
    """Defect of ``h`` from the nearest-neighbour average along the ``x``-``y`` path."""
    g = chain.graph
    x, y = g.index(x), g.index(y)
    rxy, ryx = g.rate[x, y], g.rate[y, x]
    if rxy + ryx <= 0:
        raise ValueError("sites are not adjacent")
    h = h.values if isinstance(h, PotentialField) else np.asarray(h)
    N, d = chain.model.N, chain.model.d
    path = chain.space.tube(x, y)
    hv = h[path]
    i = np.arange(1, N)
    avg = (rxy * hv[2:] + ryx * hv[:-2]) / (rxy + ryx)
    res = np.abs(hv[1:-1] - avg)
    scaled = res * i * (N - i) / (d * N)
    return TubeResidual(res, scaled, float(scaled.max()) if scaled.size else 0.0)


def tube_flatness_check(chain, h, a, b, c):
    """Sup distances of ``h`` from 1 along ``a``-``c`` and from 0 along ``b``-``c``.

    Only the first half of each path (at most ``N/2`` particles moved to
    ``c``) is inspected.

    Raises
    ------
    RatioNotContracting
        Unless ``r(c,a) > r(a,c) > 0`` and ``r(c,b) > r(b,c) > 0``.
    """
    g = chain.graph
    a, b, c = g.index(a), g.index(b), g.index(c)
    r = g.rate
    if not (r[c, a] > r[a, c] > 0 and r[c, b] > r[b, c] > 0):
        raise RatioNotContracting(
            "need r(c,a) > r(a,c) > 0 and r(c,b) > r(b,c) > 0 for the flatness estimate"
        )
    h = h.values if isinstance(h, PotentialField) else np.asarray(h)
    half = chain.model.N // 2
    pa = chain.space.tube(a, c)[: half + 1]
    pb = chain.space.tube(b, c)[: half + 1]
    return float(np.max(np.abs(h[pa] - 1.0))), float(np.max(h[pb]))
