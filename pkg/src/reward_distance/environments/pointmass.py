"""One-dimensional point mass that accelerates left or right towards the origin.

States are rows ``(position, velocity)``; actions are accelerations in
``[-max_accel, max_accel]``. One step applies

    x <- clip(x + v dt),  v <- clip(v + a dt)

using the velocity from before the step. Reward families:

* sparse: 1 when the next position is within ``goal_half_width`` of the origin.
* dense: sparse shaped by the potential ``-dense_scale * |x|``.
* magnitude: minus the distance of the next position from the origin.

Each is available with or without the control penalty ``-ctrl_coef * a**2``.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Dict, List, Optional

import numpy as np

from reward_distance.core import evaluate_reward
from reward_distance.distances import Trajectory
from reward_distance.errors import ValidationError

REWARD_NAMES = (
    "sparse_no_ctrl",
    "sparse_ctrl",
    "dense_no_ctrl",
    "dense_ctrl",
    "magnitude_no_ctrl",
    "magnitude_ctrl",
)


@dataclasses.dataclass(frozen=True)
class PointMassConfig:
    dt: float = 0.05
    max_position: float = 1.0
    max_velocity: float = 1.0
    max_accel: float = 1.0
    goal_half_width: float = 0.05
    ctrl_coef: float = 1.0
    dense_scale: float = 10.0
    discount: float = 0.99
    horizon: int = 100
    # None draws initial positions uniformly over the track; velocity starts at 0.
    initial_position: Optional[float] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError("horizon must be at least 1")
        if self.dt <= 0:
            raise ValidationError("dt must be positive")


def _position(states) -> np.ndarray:
    return np.asarray(states, dtype=float).reshape(-1, 2)[:, 0]


def _accel(actions) -> np.ndarray:
    return np.asarray(actions, dtype=float).reshape(-1)


def dense_potential(config: PointMassConfig) -> Callable[[np.ndarray], np.ndarray]:
    return lambda states: -config.dense_scale * np.abs(_position(states))


class PointMassReward:
    """Batch evaluator for one member of the reward family."""

    def __init__(self, kind: str, control_penalty: bool, config: PointMassConfig = PointMassConfig()):
        if kind not in ("sparse", "dense", "magnitude"):
            raise ValidationError(f"unknown point mass reward kind {kind!r}")
        self.kind = kind
        self.control_penalty = control_penalty
        self.config = config
        self.name = f"{kind}_{'ctrl' if control_penalty else 'no_ctrl'}"

    def __call__(self, states, actions, next_states) -> np.ndarray:
        cfg = self.config
        x_next = _position(next_states)
        if self.kind == "magnitude":
            reward = -np.abs(x_next)
        else:
            reward = (np.abs(x_next) <= cfg.goal_half_width).astype(float)
            if self.kind == "dense":
                phi = dense_potential(cfg)
                reward = reward + cfg.discount * phi(next_states) - phi(states)
        if self.control_penalty:
            reward = reward - cfg.ctrl_coef * np.square(_accel(actions))
        return reward

    def state_features(self, states) -> np.ndarray:
        return np.asarray(states, dtype=float).reshape(-1, 2)


def reward_function(name: str, config: PointMassConfig = PointMassConfig()) -> PointMassReward:
    if name not in REWARD_NAMES:
        raise ValidationError(f"unknown point mass reward {name!r}; choose from {REWARD_NAMES}")
    kind, _, ctrl = name.partition("_")
    return PointMassReward(kind, ctrl == "ctrl", config)


def all_rewards(config: PointMassConfig = PointMassConfig()) -> Dict[str, PointMassReward]:
    return {name: reward_function(name, config) for name in REWARD_NAMES}


def step(config: PointMassConfig, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    x, v = states[:, 0], states[:, 1]
    a = np.clip(_accel(actions), -config.max_accel, config.max_accel)
    x_new = np.clip(x + v * config.dt, -config.max_position, config.max_position)
    v_new = np.clip(v + a * config.dt, -config.max_velocity, config.max_velocity)
    return np.column_stack([x_new, v_new])


def uniform_policy(config: PointMassConfig):
    def policy(states, rng):
        return rng.uniform(-config.max_accel, config.max_accel, size=(len(states), 1))

    return policy


def initial_states(config: PointMassConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    if config.initial_position is None:
        x = rng.uniform(-config.max_position, config.max_position, size=n)
    else:
        x = np.full(n, float(config.initial_position))
    return np.column_stack([x, np.zeros(n)])


def rollout_arrays(config: PointMassConfig, n_episodes: int, rng: np.random.Generator, policy=None):
    """Vectorized rollouts. Returns states (E, T+1, 2) and actions (E, T, 1)."""
    policy = policy or uniform_policy(config)
    horizon = config.horizon
    states = np.empty((n_episodes, horizon + 1, 2))
    actions = np.empty((n_episodes, horizon, 1))
    states[:, 0] = initial_states(config, n_episodes, rng)
    for t in range(horizon):
        act = np.asarray(policy(states[:, t], rng), dtype=float).reshape(n_episodes, 1)
        actions[:, t] = act
        states[:, t + 1] = step(config, states[:, t], act)
    return states, actions


def pointmass_rollout(
    config: PointMassConfig, n_episodes: int, seed: int, policy=None, horizon: Optional[int] = None
) -> List[Trajectory]:
    """Episodes of `policy` (uniformly random accelerations by default); deterministic given seed."""
    if horizon is not None:
        config = dataclasses.replace(config, horizon=horizon)
    rng = np.random.default_rng(seed)
    states, actions = rollout_arrays(config, n_episodes, rng, policy)
    return [Trajectory(states[i], actions[i]) for i in range(n_episodes)]


class RolloutSampler:
    """Coverage distribution of transitions visited by uniformly random rollouts.

    D_S and D_A are the state and action marginals of that distribution; each
    marginal draw comes from fresh, independent rollouts.
    """

    def __init__(self, config: PointMassConfig = PointMassConfig(), policy=None):
        self.config = config
        self.policy = policy

    def _transitions(self, n, rng):
        n_episodes = -(-n // self.config.horizon)
        states, actions = rollout_arrays(self.config, n_episodes, rng, self.policy)
        s = states[:, :-1].reshape(-1, 2)
        a = actions.reshape(-1, 1)
        s2 = states[:, 1:].reshape(-1, 2)
        pick = rng.permutation(len(s))[:n]
        return s[pick], a[pick], s2[pick]

    def sample_transitions(self, n, rng):
        return self._transitions(n, rng)

    def sample_states(self, n, rng):
        return self._transitions(n, rng)[0]

    def sample_actions(self, n, rng):
        return self._transitions(n, rng)[1]


def episode_returns(
    config: PointMassConfig, rewards, n_episodes: int, rng: np.random.Generator, policy=None, chunk: int = 4096
) -> np.ndarray:
    """Discounted returns (len(rewards), E) of rollouts, simulated in chunks."""
    powers = config.discount ** np.arange(config.horizon)
    out = []
    for start in range(0, n_episodes, chunk):
        n = min(chunk, n_episodes - start)
        states, actions = rollout_arrays(config, n, rng, policy)
        s = states[:, :-1].reshape(-1, 2)
        a = actions.reshape(-1, 1)
        s2 = states[:, 1:].reshape(-1, 2)
        out.append([evaluate_reward(r, s, a, s2).reshape(n, -1) @ powers for r in rewards])
    return np.concatenate(out, axis=1)
