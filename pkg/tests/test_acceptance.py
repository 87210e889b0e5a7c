"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
written straight to the terminal.
"""

import time

import numpy as np
import pytest

from inclusion_meta import (
    DiscreteFlow,
    InclusionChain,
    InclusionModel,
    StateSpace,
    capacity,
    dirichlet_form,
    exact_mean_hitting,
    flow_norm,
    flow_of_function,
    generalized_thomson_bound,
    hitting_time_samples,
    mean_hitting_field,
    solve_equilibrium_potential,
    stationary_measure,
    thermalization_exact,
    thermalization_probability,
    tube_flatness_check,
    tube_residual_check,
)
from inclusion_meta.analysis import level3_partition, limit_generator, mean_rate_via_capacities
from inclusion_meta.measure import valley_mass
from inclusion_meta.simulate import occupation_fraction
from inclusion_meta.variational import (
    build_test_function,
    capacity_sandwich,
    dirichlet_decomposition,
    resistance_continuum,
    resistance_discrete,
)

from . import oracles
from .conftest import four_site, paired_well, random_graph, three_site, two_cluster_graph

SWEEP = (16, 32, 64)


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
        assert ok, detail
    return emit


def _random_models(count, seed, max_sites=5):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        g = random_graph(rng, int(rng.integers(2, max_sites + 1)), n_star=int(rng.integers(1, 3)))
        out.append((g, int(rng.integers(1, 26)), float(rng.uniform(1e-3, 0.5))))
    return out


def _decreasing(vals):
    return all(b < a for a, b in zip(vals, vals[1:]))


def test_criterion_01_reversibility(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for g, N, d in _random_models(30, seed=101):
        chain = InclusionChain(InclusionModel(g, N, d))
        lhs = chain.mu[chain.tail] * chain.q_fwd
        rhs = chain.mu[chain.head] * chain.q_bwd
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.maximum(lhs, rhs))))
    dt = time.perf_counter() - t0
    verdict(1, worst <= 1e-10 and dt <= 10, f"max relative residual {worst:.2e}, {dt:.1f} s")


def test_criterion_02_flow_norm(verdict):
    rng = np.random.default_rng(202)
    worst = 0.0
    for g, N, d in _random_models(10, seed=202):
        chain = InclusionChain(InclusionModel(g, N, d))
        for _ in range(20):
            f = rng.normal(size=chain.size)
            D = dirichlet_form(chain, f)
            worst = max(worst, abs(flow_norm(flow_of_function(chain, f)) ** 2 - D) / D)
    verdict(2, worst <= 1e-10, f"max relative error {worst:.2e}")


def test_criterion_03_dirichlet_optimality(verdict):
    rng = np.random.default_rng(303)
    chain = InclusionChain(InclusionModel(four_site(), 12, 0.05))
    A, B = [chain.valley(0)], [chain.valley(1)]
    h = solve_equilibrium_potential(chain, A, B)
    base = dirichlet_form(chain, h.values)
    violations = 0
    for _ in range(100):
        g = rng.normal(size=chain.size) * rng.uniform(1e-6, 1.0)
        g[A + B] = 0.0
        violations += base > dirichlet_form(chain, h.values + g) * (1 + 1e-12)
    ok = violations == 0 and h.harmonic_residual <= 1e-8
    verdict(3, ok, f"{violations} violations in 100 perturbations, harmonic residual {h.harmonic_residual:.2e}")


def test_criterion_04_generalized_thomson(verdict):
    rng = np.random.default_rng(404)
    chain = InclusionChain(InclusionModel(four_site(), 10, 0.05))
    rep = capacity(chain, [chain.valley(0)], [chain.valley(1)])
    over = 0
    for _ in range(50):
        psi = DiscreteFlow(chain, rng.normal(size=chain.n_edges) * chain.conductance * rng.uniform(0.1, 10))
        over += generalized_thomson_bound(chain, psi, rep.potential) > rep.capacity * (1 + 1e-12)
    eq = generalized_thomson_bound(chain, flow_of_function(chain, rep.potential.values), rep.potential)
    err = abs(eq / rep.capacity - 1)
    verdict(4, over == 0 and err <= 1e-8, f"{over} of 50 flows above Cap, equality error {err:.2e}")


def test_criterion_05_oracle_equivalence(verdict):
    cases = [(three_site(), N, d) for N in (4, 10, 18) for d in (0.2, 0.01)]
    cases += [(four_site(), N, d) for N in (3, 8) for d in (0.1, 0.005)]
    cases += [(paired_well(), 8, 0.05)]
    cases += [(g, min(N, 6), d) for g, N, d in _random_models(6, seed=505, max_sites=4)]
    worst = 0.0
    n = 0
    for g, N, d in cases:
        chain = InclusionChain(InclusionModel(g, N, d))
        if chain.size > 200:
            continue
        n += 1
        confs, Q = oracles.generator(g.rate, N, d)
        _, mu = oracles.measure(g.rate, g.measure, N, d)
        A = [chain.valley(int(g.s_star[0]))]
        B = [chain.valley(int(x)) for x in range(g.n_sites) if chain.valley(int(x)) not in A][:1]
        h = solve_equilibrium_potential(chain, A, B).values
        href = oracles.equilibrium_potential(Q, A, B)
        mask = np.abs(href) > 1e-300
        e_h = float(np.max(np.abs(h[mask] / href[mask] - 1))) if mask.any() else 0.0
        e_h = max(e_h, float(np.max(np.abs(h[~mask])))) if (~mask).any() else e_h
        cap = capacity(chain, A, B).capacity
        e_c = abs(cap / oracles.capacity(Q, mu, A, B) - 1)
        u = mean_hitting_field(chain, B)
        uref = oracles.mean_hitting(Q, B)
        free = uref > 0
        e_u = float(np.max(np.abs(u[free] / uref[free] - 1)))
        worst = max(worst, e_h, e_c, e_u)
    verdict(5, worst <= 1e-10 and n >= 10, f"{n} instances, max relative error {worst:.2e}")


def test_criterion_06_condensation(verdict):
    g = four_site()
    masses, ratios = [], []
    for N in (10, 20, 40, 80):
        model = InclusionModel(g, N, 1.0 / N)
        sp = StateSpace(4, N)
        mass = valley_mass(stationary_measure(model, sp), sp, [0, 1])
        masses.append(mass)
        ratios.append((1 - mass) * N)
    increasing = all(b > a for a, b in zip(masses, masses[1:]))
    spread = max(ratios) / min(ratios)
    verdict(6, increasing and spread <= 2,
            f"valley mass {np.round(masses, 4).tolist()}, outside/d spread {spread:.3f}")


@pytest.mark.parametrize("name", ["three_site", "four_site"])
def test_criterion_07_capacity_sandwich(verdict, name):
    g = three_site() if name == "three_site" else four_site()
    t0 = time.perf_counter()
    errs, ordered, norm = [], True, []
    for N in SWEEP:
        chain = InclusionChain(InclusionModel(g, N, N ** -2.0))
        rep = capacity_sandwich(chain, (0,))
        ordered &= rep.lower <= rep.capacity <= rep.upper
        norm.append(rep.normalized["cap"])
        errs.append(abs(rep.normalized["cap"] / rep.target - 1))
    dt = time.perf_counter() - t0
    ok = ordered and errs[-1] <= 0.25 and _decreasing(errs) and dt <= 120
    verdict(7, ok, f"{name}: normalized Cap {np.round(norm, 4).tolist()} vs target {rep.target:.4f}, "
                   f"bracket ordered={ordered}, {dt:.1f} s")


def test_criterion_08_discrete_resistance(verdict):
    worst = []
    for g in (three_site(), four_site()):
        r = resistance_continuum(g, 0, 1)
        for N in (32, 64, 128):
            worst.append(abs(resistance_discrete(g, N, 0, 1) / N**2 - r) * N / 5)
    verdict(8, max(worst) <= 1, f"max |r_N/N^2 - r| * N/5 = {max(worst):.3f}")


def test_criterion_09_sigma_decomposition(verdict):
    g = four_site()
    ratios, exact = [], 0.0
    for N in SWEEP:
        chain = InclusionChain(InclusionModel(g, N, N ** -2.0))
        f = build_test_function(chain, "simple")
        sd = dirichlet_decomposition(chain, f)
        exact = max(exact, abs(sd.total / dirichlet_form(chain, f.values) - 1))
        ratios.append(sd.remainder_ratio())
    ok = exact <= 1e-12 and ratios[-1] <= 0.05 and _decreasing(ratios)
    verdict(9, ok, f"sum identity error {exact:.1e}, remainder/main {np.round(ratios, 4).tolist()} "
                   "(need <= 0.05 at N=64)")


def test_criterion_10_rate_matrix(verdict):
    g = three_site()
    errs = []
    for N in SWEEP:
        rep = mean_rate_via_capacities(InclusionChain(InclusionModel(g, N, N ** -2.0)))
        errs.append(float(rep.relative_error()[0, 1]))
    blocks = level3_partition(limit_generator(two_cluster_graph()))
    ok = errs[-1] <= 0.25 and _decreasing(errs) and len(blocks) == 2
    verdict(10, ok, f"relative errors {np.round(errs, 4).tolist()}, level-3 blocks {blocks}")


def test_criterion_11_monte_carlo(verdict):
    t0 = time.perf_counter()
    N, d, reps, seed = 12, 0.05, 2000, 1
    model = InclusionModel(three_site(), N, d)
    chain = InclusionChain(model)
    hit = hitting_time_samples(model, "1", ["3"], reps, seed)
    exact = exact_mean_hitting(chain, chain.valley(0), [chain.valley(2)])
    z = (hit.mean - exact) / hit.stderr
    replay = hitting_time_samples(model, "1", ["3"], 50, seed)
    reproducible = np.array_equal(replay.samples, hit.samples[:50])

    pmodel = InclusionModel(paired_well(), N, d)
    pchain = InclusionChain(pmodel)
    mc = thermalization_probability(pmodel, 0, reps, seed)
    ex = thermalization_exact(pchain, 0)
    th_ok = True
    for k, p in ex.items():
        q = mc.probability[k]
        se = max(np.sqrt(p * (1 - p) / reps), 1.0 / reps)
        th_ok &= q >= 0.9 and abs(q - p) <= 3 * se

    occ = occupation_fraction(model, "1", model.theta2, reps, seed)
    outside = occ.mean
    dt = time.perf_counter() - t0
    ok = abs(z) <= 3 and th_ok and outside <= 0.05 and dt <= 300 and reproducible
    verdict(11, ok, f"hitting z={z:.2f}, thermalization ok={th_ok} "
                    f"({ {f'{a}->{b}': round(v, 4) for (a, b), v in mc.probability.items()} }), "
                    f"outside fraction {outside:.3f} (need <= 0.05), reproducible={reproducible}, {dt:.1f} s")


def test_criterion_12_tube_checks(verdict):
    g = four_site()
    consts, flats = [], []
    for N in SWEEP:
        chain = InclusionChain(InclusionModel(g, N, N ** -2.0))
        h = solve_equilibrium_potential(chain, [chain.valley(0)], [chain.valley(1)])
        consts.append(tube_residual_check(chain, h, "x1", "y1").constant)
        flats.append(max(tube_flatness_check(chain, h, "x1", "x2", "y1")))
    spread = max(consts) / min(consts)
    ok = spread < 2 and flats[-1] <= 0.05 and _decreasing(flats)
    verdict(12, ok, f"residual constants {np.round(consts, 4).tolist()} (spread {spread:.3f}), "
                    f"flatness {[f'{v:.1e}' for v in flats]}")
