"""Reachability and homogeneity of communication topologies.

For a connected simple graph with adjacency A and degrees |A_l|:

    reachability = sqrt(sum_{i,j} (A^2)_{ij}) / (min_l |A_l|)^2
    homogeneity  = (min_l |A_l| / max_l |A_l|)^2

The numerator of reachability is the square root of the total number of
length-2 walks in the graph (equivalently sqrt(sum of squared degrees)).
Both metrics are computed on the simple graph: the optimizer's implicit
self-loops are not counted here.

Closed-form Erdos-Renyi approximations of both metrics are provided for
comparison against generated graphs.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

from . import topology
from .seeding import derive_seed
from .topology import Graph, GraphFamily


class MetricError(ValueError):
    """Metric is undefined for this graph (e.g. disconnected)."""


class ApproximationDomainError(ValueError):
    """Approximation evaluated outside its valid (too sparse) regime."""


def reachability(g: Graph, ratio_squared: bool = False) -> float:
    """Length-2 walk mass over squared minimum degree.

    With ratio_squared=True returns (walk_norm / min_degree)^2 instead of
    walk_norm / min_degree^2; the default form is the one the update
    diversity bound uses and the one tests pin.
    """
    if not topology.is_connected(g):
        raise MetricError("reachability is undefined for a disconnected graph")
    a = g.edges.astype(float)
    walk_norm = math.sqrt(float((a @ a).sum()))
    min_degree = int(g.degrees.min())
    if ratio_squared:
        return (walk_norm / min_degree) ** 2
    return walk_norm / min_degree**2


def homogeneity(g: Graph) -> float:
    """Squared min/max degree ratio; 1.0 exactly for regular graphs."""
    if not topology.is_connected(g):
        raise MetricError("homogeneity is undefined for a disconnected graph")
    degrees = g.degrees
    return (int(degrees.min()) / int(degrees.max())) ** 2


@dataclass
class TopologyMetrics:
    reachability: float
    homogeneity: float
    n: int
    density: float


def topology_metrics(g: Graph) -> TopologyMetrics:
    density = g.edge_count / (g.n * (g.n - 1) / 2)
    return TopologyMetrics(reachability(g), homogeneity(g), g.n, density)


# ---------------------------------------------------------------------------
# Erdos-Renyi closed-form approximations
# ---------------------------------------------------------------------------

def _degree_spread(n: int, p: float) -> tuple[float, float]:
    """Mean degree and two-sigma binomial half-width."""
    mean = p * (n - 1)
    return mean, 2.0 * math.sqrt(p * (n - 1) * (1 - p))


def approx_reachability_er(n: int, p: float) -> float:
    """sqrt(p^2 n^3) / (p(n-1) - 2 sqrt(p(n-1)(1-p)))^2.

    The numerator approximates the length-2 walk mass, the denominator the
    squared minimum degree (mean minus two standard deviations of the
    binomial degree distribution).
    """
    if n < 2:
        raise ApproximationDomainError(f"need n >= 2, got {n}")
    if not 0.0 < p <= 1.0:
        raise ApproximationDomainError(f"need 0 < p <= 1, got {p}")
    mean, spread = _degree_spread(n, p)
    denom = mean - spread
    if denom <= 0:
        raise ApproximationDomainError(
            f"degree estimate {denom:.3f} is not positive; graph too sparse"
        )
    return math.sqrt(p**2 * n**3) / denom**2


def approx_reachability_er_large_n(n: int, p: float) -> float:
    """Coarser large-n shorthand 1 / (p sqrt(n))."""
    return 1.0 / (p * math.sqrt(n))


def approx_reachability_er_coarse(n: int, p: float) -> float:
    """Alternative shorthand (p n)^(-1/2); differs from the large-n form
    by a factor sqrt(p)."""
    return 1.0 / math.sqrt(p * n)


def approx_homogeneity_er(n: int, p: float, shorthand: bool = False) -> float:
    """Squared ratio of (mean -/+ two-sigma) degree estimates.

    With shorthand=True returns the high-density expansion
    1 - 8 sqrt((1-p)/(n p)). The ratio numerator is clamped at zero (with a
    warning) when the two-sigma estimate goes negative.
    """
    if n < 2:
        raise ApproximationDomainError(f"need n >= 2, got {n}")
    if not 0.0 < p <= 1.0:
        raise ApproximationDomainError(f"need 0 < p <= 1, got {p}")
    if shorthand:
        return 1.0 - 8.0 * math.sqrt((1 - p) / (n * p))
    mean, spread = _degree_spread(n, p)
    low = mean - spread
    if low < 0:
        warnings.warn(
            f"homogeneity ratio numerator clamped to 0 at n={n}, p={p}",
            stacklevel=2,
        )
        low = 0.0
    return (low / (mean + spread)) ** 2


# ---------------------------------------------------------------------------
# Family scatter (metric clouds at matched density)
# ---------------------------------------------------------------------------

SCATTER_FAMILIES = (
    GraphFamily.COMPLETE,
    GraphFamily.ERDOS_RENYI,
    GraphFamily.SMALL_WORLD,
    GraphFamily.SCALE_FREE,
)


@dataclass
class ScatterPoint:
    family: GraphFamily
    seed: int
    n: int
    density: float
    reachability: float
    homogeneity: float


def family_scatter(
    n: int,
    density: float,
    samples_per_family: int,
    seed: int,
    families: tuple[GraphFamily, ...] = SCATTER_FAMILIES,
    max_attempts: int = 100,
) -> list[ScatterPoint]:
    """Metric pairs for connected samples of each family at matched density."""
    if samples_per_family < 1:
        raise ValueError(
            f"samples_per_family must be at least 1, got {samples_per_family}"
        )
    points = []
    for fam_idx, family in enumerate(families):
        params = topology.params_for_density(family, n, density)
        for sample in range(samples_per_family):
            sample_seed = derive_seed(seed, fam_idx, sample)
            g = topology.sample_connected(
                family, n, params, sample_seed, max_attempts
            )
            points.append(
                ScatterPoint(
                    family=family,
                    seed=sample_seed,
                    n=n,
                    density=density,
                    reachability=reachability(g),
                    homogeneity=homogeneity(g),
                )
            )
    return points


def write_scatter_csv(points: list[ScatterPoint], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["family", "seed", "n", "density", "reachability", "homogeneity"]
        )
        for pt in points:
            writer.writerow(
                [
                    pt.family.value,
                    pt.seed,
                    pt.n,
                    repr(pt.density),
                    repr(pt.reachability),
                    repr(pt.homogeneity),
                ]
            )
