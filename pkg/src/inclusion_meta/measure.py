"""Invariant measure of the inclusion process, computed in log space.

The unnormalised weight of a configuration is
``prod_x w(eta_x) * m_star(x) ** eta_x`` with ``w(0) = 1`` and
``(k + 1) w(k + 1) = (d + k) w(k)``.  For small ``d`` these weights span
many orders of magnitude (roughly ``d ** (#occupied sites)``), so everything
is kept as logarithms until the final normalisation.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WeightTable",
    "MeasureTable",
    "weight_sequence",
    "stationary_measure",
    "valley_mass",
    "log_sum_exp",
    "dump_measure_csv",
]


@dataclass(frozen=True)
class WeightTable:
    """``log_w[k] = log w(k)`` for ``k = 0..N``."""

    log_w: np.ndarray
    d: float

    @property
    def N(self):
        return len(self.log_w) - 1

    def w(self, k):
        return math.exp(self.log_w[k])

    def growth_factors(self):
        """``(d + k) w(k) / d`` for ``k = 0..N``.

        Equals ``prod_{j=1..k} (1 + d/j)``, hence lies in
        ``[1, exp(d * H_k)]`` with ``H_k`` the harmonic number.
        """
        k = np.arange(self.N + 1)
        return np.exp(np.log(self.d + k) + self.log_w - math.log(self.d))

    def check_bounds(self):
        """Verify ``1 <= (d+k) w(k)/d <= exp(d H_k)`` for every ``k``.

        Returns the largest violation (0.0 when both bounds hold up to
        floating round-off of one ulp per factor).
        """
        g = self.growth_factors()
        k = np.arange(self.N + 1)
        harmonic = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, self.N + 1))])
        upper = np.exp(self.d * harmonic)
        slack = 4 * np.finfo(float).eps * (k + 1)
        lo = np.maximum(1.0 - g - slack, 0.0)
        hi = np.maximum(g - upper * (1 + slack), 0.0)
        return float(max(lo.max(), hi.max()))


def weight_sequence(d, N):
    """Log weights ``log w(k)``, ``k = 0..N``, by the one-step recurrence.

    Examples
    --------
    >>> t = weight_sequence(0.5, 2)
    >>> round(t.w(1), 12), round(t.w(2), 12)
    (0.5, 0.375)
    """
    if not d > 0:
        raise ValueError("d must be positive")
    if N < 0:
        raise ValueError("N must be nonnegative")
    k = np.arange(N, dtype=float)
    steps = np.log(d + k) - np.log(k + 1.0)
    log_w = np.concatenate([[0.0], np.cumsum(steps)])
    log_w.setflags(write=False)
    return WeightTable(log_w=log_w, d=float(d))


def log_sum_exp(values):
    """Stable ``log(sum(exp(values)))``; terms are added largest first."""
    v = np.sort(np.asarray(values, dtype=float))[::-1]
    if v.size == 0:
        return -math.inf
    top = v[0]
    if not math.isfinite(top):
        return top
    return top + math.log(math.fsum(np.exp(v - top)))


@dataclass(frozen=True)
class MeasureTable:
    """Log weights of all configurations and the normalising constant.

    Attributes
    ----------
    log_weight : ndarray
        Unnormalised log weight per configuration index.
    log_Z : float
        Log of the partition sum.
    weights : WeightTable
    """

    log_weight: np.ndarray
    log_Z: float
    weights: WeightTable

    @property
    def log_mu(self):
        return self.log_weight - self.log_Z

    @property
    def mu(self):
        """Normalised probabilities (may underflow to 0 for tiny ``d``)."""
        return np.exp(self.log_weight - self.log_Z)

    @property
    def Z(self):
        return math.exp(self.log_Z)


def stationary_measure(model, space):
    """Exact invariant measure over an enumerated configuration space.

    Parameters
    ----------
    model : InclusionModel
    space : StateSpace
        Must have been built for ``model.N`` and the model's site count.

    Returns
    -------
    MeasureTable
    """
    if space.N != model.N or space.n_sites != model.n_sites:
        raise ValueError("state space does not match the model")
    table = weight_sequence(model.d, model.N)
    log_m = np.log(model.graph.m_star)
    eta = space.configs
    log_weight = table.log_w[eta].sum(axis=1) + eta @ log_m
    log_weight.setflags(write=False)
    return MeasureTable(log_weight=log_weight, log_Z=log_sum_exp(log_weight), weights=table)


def valley_mass(table, space, sites):
    """Total probability of the fully condensed configurations on ``sites``."""
    sites = list(sites)
    if not sites:
        return 0.0
    idx = space.valleys(sites)
    return float(np.exp(table.log_weight[idx] - table.log_Z).sum())


def dump_measure_csv(path, space, table, site_names=None):
    """Write ``index, occupations..., log_mu`` rows for debugging."""
    names = list(site_names) if site_names is not None else [f"s{x}" for x in range(space.n_sites)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", *names, "log_mu"])
        for i, (eta, lm) in enumerate(zip(space.configs, table.log_mu)):
            w.writerow([i, *eta.tolist(), repr(float(lm))])
