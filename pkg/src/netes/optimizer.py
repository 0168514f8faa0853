"""Networked evolution strategies optimizer.

Each of N agents holds its own parameter vector. One iteration perturbs
every agent with mirrored Gaussian noise, evaluates the perturbed
candidates, and then either broadcasts the best candidate to everyone
(with probability broadcast_prob) or moves every agent by a reward-weighted
average of its graph neighbours' candidate offsets:

    u_i = alpha / (N sigma^2) * sum_j a_ij * s_j * (theta_j + sigma eps_j - theta_i)

where s_j are the rank-shaped rewards and a_ij is the adjacency with a
forced self-entry a_ii = 1 (an agent always knows its own candidate). With
degree_normalize on, 1/N becomes 1/deg_i where deg_i counts the self-entry.
On a complete graph with identical rows this reduces to the classic single
population ES estimator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .seeding import BROADCAST, PERTURB, derive_rng
from .topology import Graph

BatchObjective = Callable[[np.ndarray], np.ndarray]


class PairingError(ValueError):
    """Mirrored sampling needs an even number of agents."""


@dataclass
class ESHyperparams:
    alpha: float = 0.01
    sigma: float = 0.02
    broadcast_prob: float = 0.8
    weight_decay: float = 0.005
    degree_normalize: bool = False

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 <= self.broadcast_prob <= 1.0:
            raise ValueError(
                f"broadcast_prob must be in [0, 1], got {self.broadcast_prob}"
            )
        if self.weight_decay < 0:
            raise ValueError(
                f"weight_decay must be non-negative, got {self.weight_decay}"
            )


@dataclass
class AgentPopulation:
    theta: np.ndarray  # (N, d), row i holds agent i's parameters
    iteration: int = 0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.ndim != 2 or self.theta.shape[0] < 2:
            raise ValueError(
                f"theta must be (N>=2, d), got shape {self.theta.shape}"
            )
        if not np.isfinite(self.theta).all():
            raise ValueError("theta contains non-finite entries")

    @property
    def size(self) -> int:
        return self.theta.shape[0]

    @property
    def dim(self) -> int:
        return self.theta.shape[1]


@dataclass
class PerturbationSet:
    epsilon: np.ndarray  # (N, d), row 2k+1 = -row 2k exactly

    @property
    def mirrored_pairs(self) -> list[tuple[int, int]]:
        return [(2 * k, 2 * k + 1) for k in range(self.epsilon.shape[0] // 2)]


@dataclass
class RewardVector:
    """Raw episode returns paired with their rank-shaped transform."""

    raw: np.ndarray
    shaped: np.ndarray

    @classmethod
    def from_raw(cls, raw: np.ndarray) -> "RewardVector":
        raw = np.asarray(raw, dtype=float)
        return cls(raw=raw, shaped=shape_fitness(raw))


@dataclass
class StepResult:
    """Everything one iteration produced, for recording and diagnostics."""

    raw_rewards: np.ndarray
    best_agent: int
    best_reward: float
    broadcast: bool
    source_agent: int | None
    perturbations: PerturbationSet
    shaped: np.ndarray | None = None  # None on broadcast iterations
    updates: np.ndarray | None = None


def perturb(
    pop: AgentPopulation, sigma: float, master_seed: int
) -> PerturbationSet:
    """Mirrored standard-normal perturbations for the population's iteration.

    Row 2k is drawn from the worker stream keyed by
    (master_seed, PERTURB, iteration, 2k); row 2k+1 is its exact negation.
    Candidate parameters are theta_i + sigma * eps_i.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    n, d = pop.theta.shape
    if n % 2 != 0:
        raise PairingError(f"population size must be even for mirroring, got {n}")
    epsilon = np.empty((n, d), dtype=float)
    for k in range(n // 2):
        rng = derive_rng(master_seed, PERTURB, pop.iteration, 2 * k)
        base = rng.standard_normal(d)
        epsilon[2 * k] = base
        epsilon[2 * k + 1] = -base
    return PerturbationSet(epsilon)


def shape_fitness(raw: np.ndarray) -> np.ndarray:
    """Centered uniform ranks in [-0.5, 0.5].

    shaped_i = rank(raw_i) / (N-1) - 0.5 with rank 0 for the worst return;
    ties are broken by agent index (lower index gets the lower rank). The
    result always sums to zero and satisfies min = -max.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or raw.size < 2:
        raise ValueError(f"need at least 2 rewards, got shape {raw.shape}")
    order = np.argsort(raw, kind="stable")
    ranks = np.empty(raw.size, dtype=float)
    ranks[order] = np.arange(raw.size)
    return ranks / (raw.size - 1) - 0.5


def _influence_matrix(graph: Graph) -> np.ndarray:
    """Adjacency as float with the forced self-entry on the diagonal."""
    return graph.edges.astype(float) + np.eye(graph.n)


def compute_update(
    pop: AgentPopulation,
    perturbations: PerturbationSet,
    shaped: np.ndarray,
    graph: Graph,
    hp: ESHyperparams,
) -> np.ndarray:
    """Per-agent update vectors u_i; does not mutate the population."""
    n, d = pop.theta.shape
    if graph.n != n:
        raise ValueError(f"graph has {graph.n} nodes but population has {n}")
    if perturbations.epsilon.shape != (n, d):
        raise ValueError(
            f"perturbations shape {perturbations.epsilon.shape} != {(n, d)}"
        )
    shaped = np.asarray(shaped, dtype=float)
    if shaped.shape != (n,):
        raise ValueError(f"shaped rewards shape {shaped.shape} != ({n},)")
    if not np.isfinite(shaped).all():
        raise ValueError("shaped rewards contain non-finite entries")

    influence = _influence_matrix(graph)
    candidates = pop.theta + hp.sigma * perturbations.epsilon
    pulled = influence @ (shaped[:, None] * candidates)
    weight_sums = influence @ shaped
    raw_update = pulled - weight_sums[:, None] * pop.theta
    if hp.degree_normalize:
        scale = hp.alpha / (hp.sigma**2 * influence.sum(axis=1))
        return scale[:, None] * raw_update
    return (hp.alpha / (n * hp.sigma**2)) * raw_update


def apply_broadcast(
    pop: AgentPopulation,
    candidates: np.ndarray,
    raw_rewards: np.ndarray,
    broadcast_prob: float,
    rng: np.random.Generator,
) -> tuple[AgentPopulation, bool, int | None]:
    """With probability broadcast_prob, copy the best candidate to everyone.

    The best agent is the argmax of raw reward (ties go to the lowest
    index) and the copied parameters are its perturbed candidate, i.e. the
    weights that actually produced the winning return.
    """
    if float(rng.uniform()) >= broadcast_prob:
        return pop, False, None
    source = int(np.argmax(raw_rewards))
    theta = np.tile(candidates[source], (pop.size, 1))
    return AgentPopulation(theta, pop.iteration), True, source


def step(
    pop: AgentPopulation,
    graph: Graph,
    hp: ESHyperparams,
    evaluate_batch: BatchObjective,
    master_seed: int,
) -> tuple[AgentPopulation, StepResult]:
    """One full iteration: perturb, evaluate, broadcast-or-update.

    On the update branch the new parameters are
    (theta_i + u_i) * (1 - weight_decay); a broadcast skips both the
    networked update and the decay. The broadcast coin comes from its own
    stream, so trajectories with broadcast_prob=0 consume identical
    perturbation draws to trajectories that could have broadcast.
    """
    eps = perturb(pop, hp.sigma, master_seed)
    candidates = pop.theta + hp.sigma * eps.epsilon
    raw = np.asarray(evaluate_batch(candidates), dtype=float)
    if raw.shape != (pop.size,):
        raise ValueError(f"objective returned shape {raw.shape}, expected ({pop.size},)")
    if not np.isfinite(raw).all():
        raise ValueError("objective returned non-finite rewards")

    best_agent = int(np.argmax(raw))
    broadcast_rng = derive_rng(master_seed, BROADCAST, pop.iteration)
    new_pop, fired, source = apply_broadcast(
        pop, candidates, raw, hp.broadcast_prob, broadcast_rng
    )
    if fired:
        result = StepResult(
            raw_rewards=raw,
            best_agent=best_agent,
            best_reward=float(raw[best_agent]),
            broadcast=True,
            source_agent=source,
            perturbations=eps,
        )
        return AgentPopulation(new_pop.theta, pop.iteration + 1), result

    rewards = RewardVector.from_raw(raw)
    updates = compute_update(pop, eps, rewards.shaped, graph, hp)
    theta = (pop.theta + updates) * (1.0 - hp.weight_decay)
    result = StepResult(
        raw_rewards=raw,
        best_agent=best_agent,
        best_reward=float(raw[best_agent]),
        broadcast=False,
        source_agent=None,
        perturbations=eps,
        shaped=rewards.shaped,
        updates=updates,
    )
    return AgentPopulation(theta, pop.iteration + 1), result
