"""Reward functions: synthetic landscapes, a small MLP policy, and a toy
episodic point-mass control task.

All rewards follow the maximization convention: synthetic objectives
return -f(theta) for the standard test function f, so the global maximum
is 0 at the documented optimum. Every objective is pure and deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class ObjectiveKind(str, Enum):
    SPHERE = "sphere"
    RASTRIGIN = "rastrigin"
    ACKLEY = "ackley"
    ROSENBROCK = "rosenbrock"
    POINT_MASS = "point_mass"


class NumericError(ValueError):
    """Non-finite parameters or rewards."""


# ---------------------------------------------------------------------------
# Synthetic landscapes (theta is (N, d); returns (N,) rewards)
# ---------------------------------------------------------------------------

def _sphere(x: np.ndarray) -> np.ndarray:
    return -np.sum(x**2, axis=1)


def _rastrigin(x: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    return -(10.0 * d + np.sum(x**2 - 10.0 * np.cos(2 * np.pi * x), axis=1))


def _ackley(x: np.ndarray) -> np.ndarray:
    a, b, c = 20.0, 0.2, 2 * np.pi
    d = x.shape[1]
    s1 = np.sum(x**2, axis=1)
    s2 = np.sum(np.cos(c * x), axis=1)
    return -(-a * np.exp(-b * np.sqrt(s1 / d)) - np.exp(s2 / d) + a + np.e)


def _rosenbrock(x: np.ndarray) -> np.ndarray:
    return -np.sum(
        100.0 * (x[:, 1:] - x[:, :-1] ** 2) ** 2 + (1 - x[:, :-1]) ** 2, axis=1
    )


_SYNTHETIC = {
    ObjectiveKind.SPHERE: _sphere,
    ObjectiveKind.RASTRIGIN: _rastrigin,
    ObjectiveKind.ACKLEY: _ackley,
    ObjectiveKind.ROSENBROCK: _rosenbrock,
}

# Global maximizers of the synthetic rewards (rosenbrock peaks at all-ones).
SYNTHETIC_OPTIMA = {
    ObjectiveKind.SPHERE: 0.0,
    ObjectiveKind.RASTRIGIN: 0.0,
    ObjectiveKind.ACKLEY: 0.0,
    ObjectiveKind.ROSENBROCK: 1.0,
}


# ---------------------------------------------------------------------------
# MLP policy
# ---------------------------------------------------------------------------

@dataclass
class MlpPolicy:
    """Fully-connected tanh network with parameters in one flat vector."""

    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or any(s < 1 for s in self.layer_sizes):
            raise ValueError(f"bad layer sizes {self.layer_sizes}")

    @property
    def num_params(self) -> int:
        return sum(
            (i + 1) * o for i, o in zip(self.layer_sizes, self.layer_sizes[1:])
        )

    def unpack(self, flat: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.num_params,):
            raise ValueError(
                f"expected {self.num_params} parameters, got shape {flat.shape}"
            )
        layers = []
        pos = 0
        for fan_in, fan_out in zip(self.layer_sizes, self.layer_sizes[1:]):
            w = flat[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
            pos += fan_in * fan_out
            b = flat[pos : pos + fan_out]
            pos += fan_out
            layers.append((w, b))
        return layers


def mlp_forward(
    policy: MlpPolicy, flat_params: np.ndarray, obs: np.ndarray
) -> np.ndarray:
    """Affine->tanh hidden layers, affine output, deterministic."""
    obs = np.asarray(obs, dtype=float)
    if obs.shape != (policy.layer_sizes[0],):
        raise ValueError(
            f"observation shape {obs.shape} != ({policy.layer_sizes[0]},)"
        )
    layers = policy.unpack(flat_params)
    h = obs
    for w, b in layers[:-1]:
        h = np.tanh(h @ w + b)
    w, b = layers[-1]
    return h @ w + b


# ---------------------------------------------------------------------------
# Point-mass episodic task
# ---------------------------------------------------------------------------

@dataclass
class PointMassTask:
    """2-D point mass pushed toward a goal by clipped forces.

    State is (position, velocity) in R^4; the policy sees
    (goal - position, velocity). Dynamics per step:
    x <- x + v*dt, then v <- v + a*dt - friction*v, with the per-step
    reward -(distance of the new position to the goal).
    """

    goal: np.ndarray
    dt: float = 0.05
    friction: float = 0.1
    action_clip: float = 1.0
    episode_length: int = 100

    def __post_init__(self):
        self.goal = np.asarray(self.goal, dtype=float).reshape(2)

    @classmethod
    def from_seed(cls, task_seed: int, episode_length: int = 100) -> "PointMassTask":
        rng = np.random.default_rng(np.random.SeedSequence(int(task_seed)))
        return cls(goal=rng.uniform(-1.0, 1.0, size=2), episode_length=episode_length)


def rollout_batch(
    task: PointMassTask, policy: MlpPolicy, flat_params: np.ndarray
) -> np.ndarray:
    """Episode returns for a batch of policies, stepped in lockstep."""
    flat_params = np.asarray(flat_params, dtype=float)
    if flat_params.ndim != 2 or flat_params.shape[1] != policy.num_params:
        raise ValueError(
            f"expected (N, {policy.num_params}) parameters, got {flat_params.shape}"
        )
    n = flat_params.shape[0]
    layers = []
    pos_in_flat = 0
    for fan_in, fan_out in zip(policy.layer_sizes, policy.layer_sizes[1:]):
        w = flat_params[:, pos_in_flat : pos_in_flat + fan_in * fan_out]
        w = w.reshape(n, fan_in, fan_out)
        pos_in_flat += fan_in * fan_out
        b = flat_params[:, pos_in_flat : pos_in_flat + fan_out]
        pos_in_flat += fan_out
        layers.append((w, b))
    pos = np.zeros((n, 2))
    vel = np.zeros((n, 2))
    total = np.zeros(n)
    for _ in range(task.episode_length):
        h = np.concatenate([task.goal - pos, vel], axis=1)
        for w, b in layers[:-1]:
            h = np.tanh(np.einsum("ni,nio->no", h, w) + b)
        w, b = layers[-1]
        action = np.clip(
            np.einsum("ni,nio->no", h, w) + b,
            -task.action_clip,
            task.action_clip,
        )
        pos = pos + vel * task.dt
        vel = vel + action * task.dt - task.friction * vel
        total -= np.linalg.norm(pos - task.goal, axis=1)
    return total


def rollout(
    task: PointMassTask, policy: MlpPolicy, flat_params: np.ndarray
) -> float:
    """Deterministic episode return of one policy on the task."""
    flat_params = np.asarray(flat_params, dtype=float)
    return float(rollout_batch(task, policy, flat_params[None, :])[0])


# ---------------------------------------------------------------------------
# Objective container
# ---------------------------------------------------------------------------

@dataclass
class Objective:
    kind: ObjectiveKind
    dim: int
    episode_length: int = 100
    task_seed: int = 0
    hidden_sizes: tuple[int, ...] = (16, 16)
    _task: PointMassTask | None = field(default=None, repr=False)
    _policy: MlpPolicy | None = field(default=None, repr=False)

    def __post_init__(self):
        self.kind = ObjectiveKind(self.kind)
        if self.kind is ObjectiveKind.POINT_MASS:
            self._policy = MlpPolicy((4, *self.hidden_sizes, 2))
            self._task = PointMassTask.from_seed(
                self.task_seed, self.episode_length
            )
            expected = self._policy.num_params
            if self.dim != expected:
                raise ValueError(
                    f"point-mass policy needs dim={expected}, got {self.dim}"
                )
        elif self.dim < 1:
            raise ValueError(f"dim must be at least 1, got {self.dim}")

    def evaluate_batch(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim != 2 or thetas.shape[1] != self.dim:
            raise ValueError(f"expected (N, {self.dim}) parameters, got {thetas.shape}")
        if not np.isfinite(thetas).all():
            raise NumericError("parameters contain non-finite entries")
        if self.kind is ObjectiveKind.POINT_MASS:
            return rollout_batch(self._task, self._policy, thetas)
        return _SYNTHETIC[self.kind](thetas)


def make_point_mass(
    hidden_sizes: tuple[int, ...] = (16, 16),
    episode_length: int = 100,
    task_seed: int = 0,
) -> Objective:
    dim = MlpPolicy((4, *hidden_sizes, 2)).num_params
    return Objective(
        ObjectiveKind.POINT_MASS,
        dim,
        episode_length=episode_length,
        task_seed=task_seed,
        hidden_sizes=tuple(hidden_sizes),
    )


def evaluate(obj: Objective, theta: np.ndarray) -> float:
    """Reward of a single parameter vector."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (obj.dim,):
        raise ValueError(f"expected ({obj.dim},) parameters, got {theta.shape}")
    return float(obj.evaluate_batch(theta[None, :])[0])
