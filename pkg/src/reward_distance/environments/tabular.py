"""Random tabular MDPs, small fixture MDPs and vectorized tabular rollouts."""

from __future__ import annotations

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from reward_distance.core import CoverageDistribution, TabularMdp
from reward_distance.distances import Trajectory
from reward_distance.errors import ValidationError


def random_mdp(n_states: int, n_actions: int, discount: float, seed) -> Tuple[TabularMdp, np.ndarray]:
    """Dirichlet(1) transition rows and initial distribution, rewards i.i.d. U[-1, 1]."""
    if n_states < 2 or n_actions < 1:
        raise ValidationError("random_mdp needs n_states >= 2 and n_actions >= 1")
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    transition /= transition.sum(axis=2, keepdims=True)
    initial = rng.dirichlet(np.ones(n_states))
    initial /= initial.sum()
    reward = rng.uniform(-1.0, 1.0, size=(n_states, n_actions, n_states))
    return TabularMdp(transition, initial, discount), reward


def random_coverage(n_states: int, n_actions: int, rng: np.random.Generator) -> CoverageDistribution:
    """Dirichlet(1) joint over all transitions, with its own marginals."""
    joint = rng.dirichlet(np.ones(n_states * n_actions * n_states)).reshape(n_states, n_actions, n_states)
    return CoverageDistribution.from_joint(joint / joint.sum())


def npec_counterexample() -> Tuple[TabularMdp, Dict[str, np.ndarray], CoverageDistribution]:
    """Two self-looping states, one action, no discounting.

    Rewards ``a`` (R(s) = 2s) and ``b`` (R = 1) under coverage uniform over the
    two self-loops: a pair on which NPEC is asymmetric at p = 1.
    """
    transition = np.array([[[1.0, 0.0]], [[0.0, 1.0]]])
    mdp = TabularMdp(transition, np.array([0.5, 0.5]), 1.0)
    a = np.zeros((2, 1, 2))
    a[1, 0, 1] = 2.0
    b = np.zeros((2, 1, 2))
    b[0, 0, 0] = b[1, 0, 1] = 1.0
    return mdp, {"a": a, "b": b}, CoverageDistribution.uniform_state_actions(mdp)


# Two-start toy: start in X or Y, pick a middle state with the action, then terminate.
TOY_X, TOY_Y, TOY_M0, TOY_M1, TOY_TERMINAL = range(5)
TOY_HORIZON = 2


def two_start_mdp(discount: float = 0.9) -> TabularMdp:
    transition = np.zeros((5, 2, 5))
    for start in (TOY_X, TOY_Y):
        transition[start, 0, TOY_M0] = 1.0
        transition[start, 1, TOY_M1] = 1.0
    transition[[TOY_M0, TOY_M1, TOY_TERMINAL], :, TOY_TERMINAL] = 1.0
    initial = np.zeros(5)
    initial[[TOY_X, TOY_Y]] = 0.5
    return TabularMdp(transition, initial, discount)


def two_start_episodes() -> Sequence[Trajectory]:
    """The eight equally likely episodes of `two_start_mdp` under a uniform policy."""
    episodes = []
    for start in (TOY_X, TOY_Y):
        for a0, middle in ((0, TOY_M0), (1, TOY_M1)):
            for a1 in (0, 1):
                episodes.append(Trajectory(np.array([start, middle, TOY_TERMINAL]), np.array([a0, a1])))
    return episodes


def _sample_rows(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = (cum < u[:, None]).sum(axis=1)
    return np.minimum(idx, cum.shape[1] - 1)


def tabular_rollouts(
    mdp: TabularMdp,
    n_episodes: int,
    horizon: int,
    rng: np.random.Generator,
    policy: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Rollouts from the initial distribution; uniform random actions by default.

    Returns:
        states (E, horizon + 1) and actions (E, horizon) as integer arrays.
    """
    if horizon < 1:
        raise ValidationError("horizon must be at least 1")
    n_s, n_a = mdp.n_states, mdp.n_actions
    cum_trans = np.cumsum(mdp.transition, axis=2)
    cum_policy = None if policy is None else np.cumsum(np.asarray(policy, dtype=float), axis=1)
    states = np.empty((n_episodes, horizon + 1), dtype=np.intp)
    actions = np.empty((n_episodes, horizon), dtype=np.intp)
    states[:, 0] = _sample_rows(np.broadcast_to(np.cumsum(mdp.initial_dist), (n_episodes, n_s)), rng.random(n_episodes))
    for t in range(horizon):
        s = states[:, t]
        if cum_policy is None:
            a = rng.integers(0, n_a, size=n_episodes)
        else:
            a = _sample_rows(cum_policy[s], rng.random(n_episodes))
        actions[:, t] = a
        states[:, t + 1] = _sample_rows(cum_trans[s, a], rng.random(n_episodes))
    return states, actions


def rollout_trajectories(states: np.ndarray, actions: np.ndarray) -> Sequence[Trajectory]:
    return [Trajectory(s, a) for s, a in zip(states, actions)]


def rollout_returns(
    rewards: Sequence[np.ndarray], states: np.ndarray, actions: np.ndarray, discount: float
) -> np.ndarray:
    """Discounted returns (len(rewards), E) of rollout arrays under each reward table."""
    powers = discount ** np.arange(actions.shape[1])
    out = []
    for table in rewards:
        per_step = table[states[:, :-1], actions, states[:, 1:]]
        out.append(per_step @ powers)
    return np.array(out)


def empirical_coverage(states: np.ndarray, actions: np.ndarray, n_states: int, n_actions: int) -> CoverageDistribution:
    """Empirical transition distribution of rollouts; marginals taken from the joint."""
    counts = np.zeros((n_states, n_actions, n_states))
    np.add.at(counts, (states[:, :-1].ravel(), actions.ravel(), states[:, 1:].ravel()), 1.0)
    return CoverageDistribution.from_joint(counts / counts.sum())


# Horizon used when there is no discounting to truncate episodes.
UNDISCOUNTED_HORIZON = 100


def effective_horizon(discount: float, tol: float = 1e-12) -> int:
    """Smallest T with gamma^T <= tol, so truncated returns miss at most tol * max|R| / (1 - gamma)."""
    if discount >= 1:
        return UNDISCOUNTED_HORIZON
    if discount <= 0:
        return 1
    return max(1, int(np.ceil(np.log(tol) / np.log(discount))))


def tabular_episode_returns(
    mdp: TabularMdp,
    rewards: Sequence[np.ndarray],
    n_episodes: int,
    horizon: int,
    rng: np.random.Generator,
    chunk: int = 4096,
) -> np.ndarray:
    """Returns (len(rewards), E) of uniformly random episodes, simulated in chunks to bound memory."""
    out = []
    for start in range(0, n_episodes, chunk):
        states, actions = tabular_rollouts(mdp, min(chunk, n_episodes - start), horizon, rng)
        out.append(rollout_returns(rewards, states, actions, mdp.discount))
    return np.concatenate(out, axis=1)


def rollout_coverage(
    mdp: TabularMdp, n_episodes: int, horizon: int, rng: np.random.Generator, chunk: int = 4096
) -> CoverageDistribution:
    """Empirical coverage of uniformly random rollouts, accumulated in chunks."""
    counts = np.zeros(mdp.reward_shape)
    for start in range(0, n_episodes, chunk):
        states, actions = tabular_rollouts(mdp, min(chunk, n_episodes - start), horizon, rng)
        np.add.at(counts, (states[:, :-1].ravel(), actions.ravel(), states[:, 1:].ravel()), 1.0)
    return CoverageDistribution.from_joint(counts / counts.sum())
