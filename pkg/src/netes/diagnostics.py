"""Numerical checks of the update-diversity variance bound.

For one iteration with parameters theta_i, mirrored perturbations eps_i,
and rank-shaped rewards s_i (so min s = -max s), the across-agent variance
of the degree-normalized unit-learning-rate update

    u_i = 1 / (sigma^2 deg_i) * sum_j a_ij s_j (theta_j + sigma eps_j - theta_i)

(a_ij including the forced self-entry) is compared against

    max(s)^2 / (N sigma^4) * (reachability * F - homogeneity * G)

where F is the spread term sqrt(sum_{j,k,m} ((x_j - theta_m).(x_k - theta_m))^2)
over candidates x = theta + sigma*eps, and G is the drift term
(sigma^2/N) * ||sum_i eps_i||^2 (exactly zero for mirrored sets).
Reachability and homogeneity are computed on the simple graph.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics, topology
from .optimizer import (
    AgentPopulation,
    ESHyperparams,
    PerturbationSet,
    compute_update,
    perturb,
    shape_fitness,
)
from .seeding import derive_rng, derive_seed
from .topology import Graph, GraphFamily

DEFAULT_SPREAD_CAP = 64


class ResourceError(RuntimeError):
    """Population too large for the cubic-cost spread term."""


class PremiseError(ValueError):
    """Shaped rewards do not satisfy min = -max."""


@dataclass
class BoundReport:
    lhs_variance: float
    rhs_bound: float
    spread_term: float
    drift_term: float
    reachability: float
    homogeneity: float
    holds: bool


def update_variance(updates: np.ndarray) -> float:
    """Across-agent variance of update vectors, scalarized as the trace of
    the agent covariance (population normalization)."""
    updates = np.asarray(updates, dtype=float)
    if updates.ndim != 2 or updates.shape[0] < 2:
        raise ValueError(f"need (N>=2, d) updates, got shape {updates.shape}")
    return float(updates.var(axis=0, ddof=0).sum())


def offset_spread(
    theta: np.ndarray,
    epsilon: np.ndarray,
    sigma: float,
    max_agents: int = DEFAULT_SPREAD_CAP,
) -> float:
    """Spread term: sqrt of the sum over all (j, k, m) triples of the
    squared dot product of candidate offsets from agent m.

    Cost is O(N^3 d); populations above max_agents are refused.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[0]
    if n > max_agents:
        raise ResourceError(
            f"population of {n} exceeds the spread-term cap of {max_agents}"
        )
    candidates = theta + sigma * np.asarray(epsilon, dtype=float)
    total = 0.0
    for m in range(n):
        offsets = candidates - theta[m]
        gram = offsets @ offsets.T
        total += float((gram**2).sum())
    return float(np.sqrt(total))


def perturbation_drift(epsilon: np.ndarray, sigma: float) -> float:
    """Drift term: (sigma^2 / N) * ||sum_i eps_i||^2, never negative."""
    epsilon = np.asarray(epsilon, dtype=float)
    n = epsilon.shape[0]
    summed = epsilon.sum(axis=0)
    return float(sigma**2 / n * np.dot(summed, summed))


def variance_bound_report(
    pop: AgentPopulation,
    perturbations: PerturbationSet,
    shaped: np.ndarray,
    graph: Graph,
    sigma: float,
    max_agents: int = DEFAULT_SPREAD_CAP,
) -> BoundReport:
    """Compare realized update variance against its topology bound.

    The left side always uses the degree-normalized unit-learning-rate
    update, independent of what the optimizer was configured with, so the
    checked statement matches the bound's derivation.
    """
    shaped = np.asarray(shaped, dtype=float)
    smin, smax = float(shaped.min()), float(shaped.max())
    if abs(smin + smax) > 1e-12 * max(1.0, abs(smax)):
        raise PremiseError(
            f"shaped rewards must satisfy min = -max, got min={smin}, max={smax}"
        )
    if not topology.is_connected(graph):
        raise metrics.MetricError("bound requires a connected graph")

    hp = ESHyperparams(
        alpha=1.0,
        sigma=sigma,
        broadcast_prob=0.0,
        weight_decay=0.0,
        degree_normalize=True,
    )
    updates = compute_update(pop, perturbations, shaped, graph, hp)
    lhs = update_variance(updates)

    reach = metrics.reachability(graph)
    homog = metrics.homogeneity(graph)
    spread = offset_spread(pop.theta, perturbations.epsilon, sigma, max_agents)
    drift = perturbation_drift(perturbations.epsilon, sigma)
    n = pop.size
    rhs = smax**2 / (n * sigma**4) * (reach * spread - homog * drift)
    holds = lhs <= rhs + 1e-9 * max(1.0, abs(rhs))
    return BoundReport(
        lhs_variance=lhs,
        rhs_bound=rhs,
        spread_term=spread,
        drift_term=drift,
        reachability=reach,
        homogeneity=homog,
        holds=holds,
    )


# ---------------------------------------------------------------------------
# Random-instance sweep
# ---------------------------------------------------------------------------

SWEEP_FAMILIES = (
    GraphFamily.COMPLETE,
    GraphFamily.ERDOS_RENYI,
    GraphFamily.SMALL_WORLD,
    GraphFamily.SCALE_FREE,
)


@dataclass
class SweepRecord:
    instance: int
    family: GraphFamily
    n: int
    d: int
    report: BoundReport


def bound_sweep(
    num_instances: int,
    seed: int,
    n_range: tuple[int, int] = (6, 40),
    d_range: tuple[int, int] = (1, 8),
    density_range: tuple[float, float] = (0.3, 0.9),
    families: tuple[GraphFamily, ...] = SWEEP_FAMILIES,
) -> list[SweepRecord]:
    """Check the bound on random instances: random even N, dimension,
    family and density, normal parameters, mirrored perturbations, and
    rank-shaped random rewards."""
    records = []
    for instance in range(num_instances):
        rng = derive_rng(seed, instance)
        n = 2 * int(rng.integers(n_range[0] // 2, n_range[1] // 2 + 1))
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        family = families[int(rng.integers(len(families)))]
        density = float(rng.uniform(*density_range))
        params = topology.params_for_density(family, n, density)
        graph = topology.sample_connected(
            family, n, params, derive_seed(seed, instance, 1)
        )
        theta_scale = float(rng.uniform(0.1, 2.0))
        pop = AgentPopulation(rng.normal(0.0, theta_scale, size=(n, d)))
        sigma = float(rng.uniform(0.05, 1.0))
        eps = perturb(pop, sigma, derive_seed(seed, instance, 2))
        shaped = shape_fitness(rng.normal(size=n))
        report = variance_bound_report(pop, eps, shaped, graph, sigma)
        records.append(SweepRecord(instance, family, n, d, report))
    return records


def write_sweep_csv(records: list[SweepRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "instance", "family", "n", "d", "lhs", "rhs",
                "f", "g", "reachability", "homogeneity", "holds",
            ]
        )
        for rec in records:
            r = rec.report
            writer.writerow(
                [
                    rec.instance,
                    rec.family.value,
                    rec.n,
                    rec.d,
                    repr(r.lhs_variance),
                    repr(r.rhs_bound),
                    repr(r.spread_term),
                    repr(r.drift_term),
                    repr(r.reachability),
                    repr(r.homogeneity),
                    int(r.holds),
                ]
            )
