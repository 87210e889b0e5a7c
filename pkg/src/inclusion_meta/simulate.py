"""Exact event-driven simulation and Monte Carlo estimators.

The sampler keeps, for every site ``z``, the partial sum
``A_z = sum_w r(z, w) eta_w`` so that the total rate of moves out of ``z``
is ``eta_z (d * sum_w r(z, w) + A_z)``.  A jump ``z -> w`` changes ``A`` by
``r(., w) - r(., z)``, an ``O(|S|)`` update.  A move is drawn in two
stages: first the departure site, then the arrival site.

Every replica owns a Philox stream keyed by ``(seed, replica_id)``, so
results do not depend on the order in which replicas run.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import sigma_move
from .potential import InclusionChain, exact_mean_hitting, solve_equilibrium_potential

__all__ = [
    "SimulationRun",
    "Trajectory",
    "TraceStatistics",
    "SampleStatistics",
    "ThermalizationResult",
    "simulate_path",
    "trace_on_valleys",
    "hitting_time_samples",
    "thermalization_probability",
    "thermalization_exact",
    "occupation_fraction",
    "holding_time_samples",
    "jump_frequencies",
    "long_run_occupation",
    "write_event_log_csv",
    "summary_json",
]

STATUS = {0: "target", 1: "horizon", 2: "event_cap"}


@njit(cache=True)
def _grow(a, n):
    if n < a.shape[0]:
        return a
    b = np.empty(max(2 * a.shape[0], 16), dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _kernel(eta, rate, d, stop, t_end, max_events, rng, sample_times, log_moves):
    S = eta.size
    N = 0
    for z in range(S):
        N += eta[z]
    row_sum = np.zeros(S)
    A = np.zeros(S)
    for z in range(S):
        for w in range(S):
            row_sum[z] += rate[z, w]
            A[z] += rate[z, w] * eta[w]
    R = np.zeros(S)
    for z in range(S):
        R[z] = eta[z] * (d * row_sum[z] + A[z])

    valley = -1
    for z in range(S):
        if eta[z] == N:
            valley = z
    local = np.zeros(S)
    visits = np.zeros(S, dtype=np.int64)
    seg_site = np.empty(16, dtype=np.int64)
    seg_in = np.empty(16)
    seg_out = np.empty(16)
    nseg = 0
    if valley >= 0:
        visits[valley] += 1
        seg_site[0] = valley
        seg_in[0] = 0.0
        nseg = 1
    labels = np.full(sample_times.size, -2, dtype=np.int64)
    si = 0
    mv_t = np.empty(16 if log_moves else 0)
    mv_z = np.empty(16 if log_moves else 0, dtype=np.int64)
    mv_w = np.empty(16 if log_moves else 0, dtype=np.int64)
    t = 0.0
    n = 0
    status = 1
    while True:
        if valley >= 0 and stop[valley]:
            status = 0
            break
        if n >= max_events:
            status = 2
            break
        total = 0.0
        for z in range(S):
            total += R[z]
        if total > 0:
            t_next = t + rng.standard_exponential() / total
        elif t_end < np.inf:
            t_next = np.inf
        else:
            status = 2  # no move is possible and no horizon: nothing will happen
            break
        if t_next >= t_end:
            t_next = t_end
            status = 1
        while si < sample_times.size and sample_times[si] < t_next:
            labels[si] = valley
            si += 1
        if valley >= 0:
            local[valley] += t_next - t
        t = t_next
        if status == 1 and t >= t_end:
            break
        # departure site
        u = rng.random() * total
        z = -1
        acc = 0.0
        for s in range(S):
            if R[s] > 0:
                z = s
                acc += R[s]
                if u < acc:
                    break
        # arrival site
        out = d * row_sum[z] + A[z]
        u = rng.random() * out
        w = -1
        acc = 0.0
        for s in range(S):
            q = rate[z, s] * (d + eta[s])
            if q > 0:
                w = s
                acc += q
                if u < acc:
                    break
        eta[z] -= 1
        eta[w] += 1
        for s in range(S):
            A[s] += rate[s, w] - rate[s, z]
        for s in range(S):
            R[s] = eta[s] * (d * row_sum[s] + A[s])
        if valley >= 0:
            seg_out[nseg - 1] = t
            valley = -1
        if eta[w] == N:
            valley = w
            visits[w] += 1
            seg_site = _grow(seg_site, nseg)
            seg_in = _grow(seg_in, nseg)
            seg_out = _grow(seg_out, nseg)
            seg_site[nseg] = w
            seg_in[nseg] = t
            nseg += 1
        if log_moves:
            mv_t = _grow(mv_t, n)
            mv_z = _grow(mv_z, n)
            mv_w = _grow(mv_w, n)
            mv_t[n] = t
            mv_z[n] = z
            mv_w[n] = w
        n += 1
    if valley >= 0:
        seg_out[nseg - 1] = t
    m = n if log_moves else 0
    return (t, n, status, valley, local, visits, seg_site[:nseg], seg_in[:nseg],
            seg_out[:nseg], labels, mv_t[:m], mv_z[:m], mv_w[:m])


@dataclass
class SimulationRun:
    """Seed, replica and stopping budget of one trajectory.

    ``(seed, replica_id)`` determines the random stream, so equal runs on the
    same model reproduce the same trajectory bit for bit.
    """

    seed: int
    replica_id: int = 0
    t_end: float = math.inf
    max_events: int = 10**8
    log_events: bool = False

    def generator(self):
        ss = np.random.SeedSequence([int(self.seed) & (2**64 - 1), int(self.replica_id)])
        return np.random.Generator(np.random.Philox(ss))


@dataclass
class Trajectory:
    """Summary of a simulated path.

    Attributes
    ----------
    time : float
        Elapsed time at the stop.
    events : int
        Number of jumps.
    status : str
        ``"target"``, ``"horizon"`` or ``"event_cap"``.
    final_site : int
        Site holding every particle at the stop, or -1.
    local_time, visits : ndarray
        Time spent in and number of entries into each valley.
    segments : ndarray (k, 3)
        ``(site, t_in, t_out)`` for every stay in a valley, in order.
    sample_sites : ndarray
        Valley site at each requested sample time (-1 outside a valley,
        -2 after the stop).
    moves : tuple of ndarray or None
        ``(time, from_site, to_site)`` per jump when logging is on.
    """

    model: object
    run: SimulationRun
    start: np.ndarray
    time: float
    events: int
    status: str
    final_site: int
    local_time: np.ndarray
    visits: np.ndarray
    segments: np.ndarray
    sample_times: np.ndarray
    sample_sites: np.ndarray
    moves: tuple = None

    def event_log(self, space):
        """Rows ``(time, from_index, to_index)`` with configuration indices."""
        if self.moves is None:
            raise ValueError("trajectory was simulated without event logging")
        t, zs, ws = self.moves
        eta = self.start.copy()
        rows = []
        cur = int(space.rank(eta))
        for k in range(t.size):
            eta = sigma_move(eta, int(zs[k]), int(ws[k]))
            nxt = int(space.rank(eta))
            rows.append((float(t[k]), cur, nxt))
            cur = nxt
        return rows


def _start_config(model, start):
    if np.ndim(start) == 0:
        return model.valley(start)
    eta = np.asarray(start, dtype=np.int64).copy()
    if eta.shape != (model.n_sites,) or eta.sum() != model.N or eta.min() < 0:
        raise ValueError("start configuration does not match the model")
    return eta


def _site_mask(model, sites):
    mask = np.zeros(model.n_sites, dtype=np.bool_)
    for s in sites:
        mask[model.graph.index(s)] = True
    return mask


def simulate_path(model, run, start, stop_sites=(), sample_times=None):
    """Simulate from ``start`` until a stop valley, the horizon or the event cap.

    Parameters
    ----------
    model : InclusionModel
    run : SimulationRun
    start : site or array_like
        A site (start from its valley) or a full configuration.
    stop_sites : iterable of sites
        Stop on entering the valley of any of these sites.
    sample_times : array_like, optional
        Increasing times at which the current valley is recorded.

    Returns
    -------
    Trajectory
    """
    eta0 = _start_config(model, start)
    stop = _site_mask(model, stop_sites)
    st = np.asarray(sample_times if sample_times is not None else [], dtype=float)
    if st.size and np.any(np.diff(st) < 0):
        raise ValueError("sample times must be increasing")
    out = _kernel(eta0.copy(), np.ascontiguousarray(model.graph.rate, dtype=float), float(model.d),
                  stop, float(run.t_end), int(run.max_events), run.generator(), st,
                  bool(run.log_events))
    t, n, status, valley, local, visits, ss, si, so, labels, mt, mz, mw = out
    segments = np.column_stack([ss.astype(float), si, so]) if ss.size else np.zeros((0, 3))
    return Trajectory(
        model=model, run=run, start=eta0, time=float(t), events=int(n), status=STATUS[int(status)],
        final_site=int(valley), local_time=local, visits=visits, segments=segments,
        sample_times=st, sample_sites=labels, moves=(mt, mz, mw) if run.log_events else None,
    )


@dataclass
class TraceStatistics:
    """Path watched only inside a set of valleys.

    ``projected_jumps`` lists ``(trace time / theta2, component)`` each time
    the component label of the visited valley changes (the first entry
    included).
    """

    visits: dict
    local_time: dict
    outside_time: float
    elapsed: float
    projected_jumps: list = field(default_factory=list)

    @property
    def outside_fraction(self):
        return self.outside_time / self.elapsed if self.elapsed > 0 else 0.0


def trace_on_valleys(traj, target=None):
    """Excise the time spent outside ``target`` valleys.

    Parameters
    ----------
    traj : Trajectory
    target : iterable of sites, ``"full"`` or None
        Sites whose valleys are kept; None means the metastable sites and
        ``"full"`` the whole configuration space (times unchanged).
    """
    model = traj.model
    graph = model.graph
    if isinstance(target, str) and target == "full":
        return TraceStatistics(visits={}, local_time={}, outside_time=0.0, elapsed=traj.time)
    sites = graph.s_star if target is None else tuple(graph.indices(target))
    keep = set(sites)
    local = {graph.sites[x]: float(traj.local_time[x]) for x in sites}
    visits = {graph.sites[x]: int(traj.visits[x]) for x in sites}
    outside = traj.time - math.fsum(local.values())
    jumps = []
    clock = 0.0
    last = None
    labels = graph.component_labels()
    for site, t_in, t_out in traj.segments:
        site = int(site)
        if site not in keep:
            continue
        lab = int(labels[site])
        if lab != last:
            jumps.append((clock / model.theta2, lab))
            last = lab
        clock += t_out - t_in
    return TraceStatistics(visits=visits, local_time=local, outside_time=float(outside),
                           elapsed=traj.time, projected_jumps=jumps)


@dataclass
class SampleStatistics:
    samples: np.ndarray
    censored: int
    seed: int
    replicas: int

    @property
    def mean(self):
        return float(np.mean(self.samples)) if self.samples.size else math.nan

    @property
    def variance(self):
        return float(np.var(self.samples, ddof=1)) if self.samples.size > 1 else math.nan

    @property
    def stderr(self):
        n = self.samples.size
        return math.sqrt(self.variance / n) if n > 1 else math.nan

    def as_dict(self):
        return {"mean": self.mean, "variance": self.variance, "stderr": self.stderr,
                "replicas": self.replicas, "censored": self.censored, "seed": self.seed}


def hitting_time_samples(model, start, target, replicas, seed, max_events=10**8):
    """Independent samples of the time to reach any valley in ``target``.

    Replicas that hit the event cap are dropped and counted as censored.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    eta0 = _start_config(model, start)
    stop = _site_mask(model, target)
    if any(stop[x] and eta0[x] == model.N for x in range(model.n_sites)):
        return SampleStatistics(np.zeros(replicas), 0, seed, replicas)
    out, censored = [], 0
    for rep in range(replicas):
        tr = simulate_path(model, SimulationRun(seed, rep, max_events=max_events), eta0, target)
        if tr.status == "target":
            out.append(tr.time)
        else:
            censored += 1
    return SampleStatistics(np.array(out), censored, seed, replicas)


@dataclass
class ThermalizationResult:
    """Estimates of ``P[reach zeta before leaving the component]`` per valley pair."""

    component: int
    probability: dict
    stderr: dict
    replicas: int
    seed: int

    @property
    def min_probability(self):
        return min(self.probability.values()) if self.probability else math.nan

    def as_dict(self, names=None):
        def key(p):
            return f"{names[p[0]]}->{names[p[1]]}" if names else f"{p[0]}->{p[1]}"
        return {"component": self.component, "replicas": self.replicas, "seed": self.seed,
                "probability": {key(p): v for p, v in self.probability.items()},
                "stderr": {key(p): v for p, v in self.stderr.items()}}


def thermalization_probability(model, i, replicas, seed, max_events=10**8):
    """For valleys ``eta != zeta`` of component ``i``, estimate the probability
    of visiting ``zeta`` before any valley of another component.

    A singleton component has nothing to thermalize and yields an empty result.
    """
    graph = model.graph
    comp = graph.level2_components[i]
    others = [x for x in graph.s_star if x not in comp]
    prob, err = {}, {}
    for a in comp:
        for b in comp:
            if a == b:
                continue
            hits = 0
            for rep in range(replicas):
                tr = simulate_path(model, SimulationRun(seed, rep, max_events=max_events), a,
                                   [b, *others])
                hits += tr.final_site == b
            p = hits / replicas
            prob[(a, b)] = p
            err[(a, b)] = math.sqrt(max(p * (1 - p), 1.0 / replicas) / replicas)
    return ThermalizationResult(i, prob, err, replicas, seed)


def thermalization_exact(chain, i):
    """Exact counterparts of :func:`thermalization_probability` by potential solves."""
    graph = chain.graph
    comp = graph.level2_components[i]
    others = [x for x in graph.s_star if x not in comp]
    out = {}
    for a in comp:
        for b in comp:
            if a != b:
                h = solve_equilibrium_potential(chain, [chain.valley(b)], chain.valleys(others))
                out[(a, b)] = float(h.values[chain.valley(a)])
    return out


def occupation_fraction(model, start, horizon, replicas, seed, max_events=10**9):
    """Fraction of ``[0, horizon]`` spent outside the metastable valleys."""
    eta0 = _start_config(model, start)
    star = list(model.graph.s_star)
    fr = []
    for rep in range(replicas):
        tr = simulate_path(model, SimulationRun(seed, rep, t_end=horizon, max_events=max_events),
                           eta0)
        inside = math.fsum(tr.local_time[star])
        fr.append((tr.time - inside) / tr.time if tr.time > 0 else 0.0)
    return SampleStatistics(np.array(fr), 0, seed, replicas)


def holding_time_samples(model, eta, n, seed):
    """``n`` holding times at configuration ``eta``."""
    eta0 = _start_config(model, eta)
    return np.array([simulate_path(model, SimulationRun(seed, k, max_events=1), eta0).time
                     for k in range(n)])


def jump_frequencies(model, eta, n, seed):
    """Counts of first moves ``(from_site, to_site)`` out of ``eta`` over ``n`` runs."""
    eta0 = _start_config(model, eta)
    counts = {}
    for k in range(n):
        tr = simulate_path(model, SimulationRun(seed, k, max_events=1, log_events=True), eta0)
        _, zs, ws = tr.moves
        key = (int(zs[0]), int(ws[0]))
        counts[key] = counts.get(key, 0) + 1
    return counts


def long_run_occupation(model, start, events, seed):
    """Fraction of time spent in the metastable valleys along one long path."""
    tr = simulate_path(model, SimulationRun(seed, 0, max_events=events), start)
    return math.fsum(tr.local_time[list(model.graph.s_star)]) / tr.time


def write_event_log_csv(path, traj, space):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "from_index", "to_index"])
        for t, a, b in traj.event_log(space):
            w.writerow([repr(t), a, b])


def summary_json(payload):
    """Deterministic JSON text (sorted keys, fixed float repr)."""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n"


def exact_hitting_mean(model, start, target):
    """Exact mean hitting time of ``target`` valleys from ``start`` (convenience)."""
    chain = InclusionChain(model)
    eta0 = _start_config(model, start)
    tgt = chain.valleys(model.graph.indices(target))
    return exact_mean_hitting(chain, int(chain.space.rank(eta0)), tgt)
