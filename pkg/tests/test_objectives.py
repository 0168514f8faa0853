import numpy as np
import pytest

from netes.objectives import (
    MlpPolicy,
    NumericError,
    Objective,
    ObjectiveKind,
    PointMassTask,
    evaluate,
    make_point_mass,
    mlp_forward,
    rollout,
    rollout_batch,
)


def test_synthetic_optima_are_zero():
    for kind, opt in (
        (ObjectiveKind.SPHERE, 0.0),
        (ObjectiveKind.RASTRIGIN, 0.0),
        (ObjectiveKind.ACKLEY, 0.0),
        (ObjectiveKind.ROSENBROCK, 1.0),
    ):
        obj = Objective(kind, 6)
        assert evaluate(obj, np.full(6, opt)) == pytest.approx(0.0, abs=1e-12)


def test_rastrigin_at_unit_lattice_point():
    obj = Objective(ObjectiveKind.RASTRIGIN, 2)
    assert evaluate(obj, np.array([1.0, 1.0])) == pytest.approx(-2.0, abs=1e-9)


def test_evaluate_is_pure():
    obj = Objective(ObjectiveKind.ACKLEY, 4)
    theta = np.random.default_rng(0).normal(size=4)
    assert evaluate(obj, theta) == evaluate(obj, theta)


def test_evaluate_rejects_nonfinite_parameters():
    obj = Objective(ObjectiveKind.SPHERE, 3)
    with pytest.raises(NumericError):
        evaluate(obj, np.array([1.0, np.nan, 0.0]))


def test_evaluate_rejects_bad_shape():
    obj = Objective(ObjectiveKind.SPHERE, 3)
    with pytest.raises(ValueError):
        evaluate(obj, np.zeros(4))


def test_batch_matches_single_evaluation():
    obj = Objective(ObjectiveKind.ROSENBROCK, 5)
    thetas = np.random.default_rng(2).normal(size=(7, 5))
    batch = obj.evaluate_batch(thetas)
    singles = [evaluate(obj, row) for row in thetas]
    assert np.allclose(batch, singles, atol=1e-12)


# ---------------------------------------------------------------------------
# MLP policy
# ---------------------------------------------------------------------------

def test_mlp_param_count():
    assert MlpPolicy((4, 16, 16, 2)).num_params == 80 + 272 + 34


def test_mlp_zero_weights_give_zero_action():
    policy = MlpPolicy((4, 8, 2))
    out = mlp_forward(policy, np.zeros(policy.num_params), np.ones(4))
    assert np.array_equal(out, np.zeros(2))


def test_mlp_identity_single_layer():
    policy = MlpPolicy((3, 3))
    flat = np.concatenate([np.eye(3).ravel(), np.zeros(3)])
    obs = np.array([0.3, -1.2, 2.0])
    assert np.allclose(mlp_forward(policy, flat, obs), obs)


def test_mlp_hidden_activations_are_tanh_bounded():
    policy = MlpPolicy((2, 5, 1))
    rng = np.random.default_rng(4)
    flat = rng.normal(scale=50.0, size=policy.num_params)
    # final layer reads the hidden activations with unit weights
    flat[-6:-1] = 1.0
    flat[-1] = 0.0
    out = mlp_forward(policy, flat, np.array([3.0, -7.0]))
    assert abs(float(out[0])) <= 5.0


def test_mlp_rejects_bad_observation_shape():
    policy = MlpPolicy((3, 2))
    with pytest.raises(ValueError):
        mlp_forward(policy, np.zeros(policy.num_params), np.zeros(4))


def test_mlp_rejects_bad_param_length():
    policy = MlpPolicy((3, 2))
    with pytest.raises(ValueError):
        mlp_forward(policy, np.zeros(3), np.zeros(3))


# ---------------------------------------------------------------------------
# Point-mass task
# ---------------------------------------------------------------------------

def test_zero_policy_at_goal_scores_zero():
    task = PointMassTask(goal=np.zeros(2), episode_length=50)
    policy = MlpPolicy((4, 8, 2))
    assert rollout(task, policy, np.zeros(policy.num_params)) == 0.0


def test_zero_policy_at_unit_distance():
    task = PointMassTask(goal=np.array([1.0, 0.0]), episode_length=30)
    policy = MlpPolicy((4, 8, 2))
    assert rollout(task, policy, np.zeros(policy.num_params)) == pytest.approx(
        -30.0, abs=1e-12
    )


def test_rollout_determinism():
    obj = make_point_mass(hidden_sizes=(8,), episode_length=40, task_seed=3)
    theta = np.random.default_rng(1).normal(0, 0.2, obj.dim)
    assert evaluate(obj, theta) == evaluate(obj, theta)


def test_rollout_batch_matches_scalar_dynamics_oracle():
    # independent scalar reimplementation of the episode dynamics
    def oracle(task, policy, flat):
        layers = policy.unpack(flat)
        pos = np.zeros(2)
        vel = np.zeros(2)
        total = 0.0
        for _ in range(task.episode_length):
            h = np.concatenate([task.goal - pos, vel])
            for w, b in layers[:-1]:
                h = np.tanh(h @ w + b)
            w, b = layers[-1]
            action = np.clip(h @ w + b, -task.action_clip, task.action_clip)
            pos = pos + vel * task.dt
            vel = vel + action * task.dt - task.friction * vel
            total -= float(np.linalg.norm(pos - task.goal))
        return total

    task = PointMassTask.from_seed(7, episode_length=60)
    policy = MlpPolicy((4, 8, 2))
    rng = np.random.default_rng(5)
    thetas = rng.normal(0, 0.3, (6, policy.num_params))
    batch = rollout_batch(task, policy, thetas)
    expected = [oracle(task, policy, row) for row in thetas]
    assert np.allclose(batch, expected, atol=1e-9)


def test_point_mass_objective_dimension():
    obj = make_point_mass()
    assert obj.dim == MlpPolicy((4, 16, 16, 2)).num_params == 386


def test_point_mass_objective_evaluates_rollout():
    obj = make_point_mass(hidden_sizes=(8,), episode_length=25, task_seed=1)
    theta = np.random.default_rng(2).normal(0, 0.1, obj.dim)
    task = PointMassTask.from_seed(1, episode_length=25)
    assert evaluate(obj, theta) == rollout(task, MlpPolicy((4, 8, 2)), theta)


def test_zero_policy_return_is_goal_distance_times_length():
    obj = make_point_mass(hidden_sizes=(8,), episode_length=50, task_seed=9)
    task = PointMassTask.from_seed(9, episode_length=50)
    expected = -50.0 * float(np.linalg.norm(task.goal))
    assert evaluate(obj, np.zeros(obj.dim)) == pytest.approx(expected, rel=1e-12)


def test_goal_is_seed_deterministic():
    a = PointMassTask.from_seed(11)
    b = PointMassTask.from_seed(11)
    c = PointMassTask.from_seed(12)
    assert np.array_equal(a.goal, b.goal)
    assert not np.array_equal(a.goal, c.goal)


def test_objective_rejects_wrong_point_mass_dim():
    with pytest.raises(ValueError):
        Objective(ObjectiveKind.POINT_MASS, 10)
