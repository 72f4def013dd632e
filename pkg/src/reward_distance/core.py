"""Core representations: MDPs without reward, reward tables and evaluators,
coverage distributions and the reward equivalence transforms.

Tabular rewards are dense ``(n_states, n_actions, n_states)`` arrays indexed
``(s, a, s')``. Black-box rewards are batch evaluators mapping arrays of
states, actions and next states to an array of rewards.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Optional, Protocol, Tuple, runtime_checkable

import numpy as np

from reward_distance.errors import (
    DimensionError,
    NonFiniteRewardError,
    ValidationError,
)

PROB_ATOL = 1e-12


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def check_distribution(dist: np.ndarray, name: str = "distribution", atol: float = PROB_ATOL):
    """Raises `ValidationError` unless `dist` is nonnegative and sums to one."""
    dist = np.asarray(dist, dtype=float)
    if not np.all(np.isfinite(dist)):
        raise ValidationError(f"{name} contains non-finite entries")
    if np.any(dist < 0):
        raise ValidationError(f"{name} has negative mass")
    total = dist.sum()
    if abs(total - 1.0) > atol:
        raise ValidationError(f"{name} sums to {total!r}, expected 1")


@dataclasses.dataclass(frozen=True)
class TabularMdp:
    """A finite MDP with the reward left out.

    Attributes:
        transition: Array of shape (S, A, S); transition[s, a, s'] = T(s' | s, a).
        initial_dist: Distribution over initial states, shape (S,).
        discount: Discount factor in [0, 1].
    """

    transition: np.ndarray
    initial_dist: np.ndarray
    discount: float

    def __post_init__(self):
        transition = _readonly(self.transition)
        initial_dist = _readonly(self.initial_dist)
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise DimensionError(f"transition must have shape (S, A, S), got {transition.shape}")
        if initial_dist.shape != (transition.shape[0],):
            raise DimensionError(
                f"initial_dist shape {initial_dist.shape} does not match {transition.shape[0]} states"
            )
        if transition.shape[0] < 1 or transition.shape[1] < 1:
            raise DimensionError("need at least one state and one action")
        if np.any(transition < 0) or not np.all(np.isfinite(transition)):
            raise ValidationError("transition probabilities must be finite and nonnegative")
        row_err = np.max(np.abs(transition.sum(axis=2) - 1.0))
        if row_err > PROB_ATOL:
            raise ValidationError(f"transition rows do not sum to 1 (max error {row_err:.3g})")
        check_distribution(initial_dist, "initial_dist")
        if not 0.0 <= self.discount <= 1.0:
            raise ValidationError(f"discount {self.discount} outside [0, 1]")
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "initial_dist", initial_dist)
        object.__setattr__(self, "discount", float(self.discount))

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def reward_shape(self) -> Tuple[int, int, int]:
        return (self.n_states, self.n_actions, self.n_states)


def check_reward_table(values, mdp: Optional[TabularMdp] = None, name: str = "reward") -> np.ndarray:
    """Validates and returns a reward table as a float array.

    Args:
        values: Array-like indexed (s, a, s').
        mdp: If given, the table shape must match `mdp.reward_shape`.
        name: Used in error messages.

    Raises:
        DimensionError: wrong rank or shape.
        ValidationError: non-finite entries.
    """
    table = np.asarray(values, dtype=float)
    if table.ndim != 3 or table.shape[0] != table.shape[2]:
        raise DimensionError(f"{name} must have shape (S, A, S), got {table.shape}")
    if mdp is not None and table.shape != mdp.reward_shape:
        raise DimensionError(f"{name} shape {table.shape} does not match MDP {mdp.reward_shape}")
    if not np.all(np.isfinite(table)):
        raise ValidationError(f"{name} contains non-finite entries")
    return table


@runtime_checkable
class RewardFunction(Protocol):
    """Batch reward evaluator.

    Must be pure: the same batch always yields the same rewards.
    """

    def __call__(self, states: np.ndarray, actions: np.ndarray, next_states: np.ndarray) -> np.ndarray:
        ...


def evaluate_reward(
    reward: Callable, states: np.ndarray, actions: np.ndarray, next_states: np.ndarray
) -> np.ndarray:
    """Evaluates `reward` on a batch, checking the output length and finiteness."""
    out = np.asarray(reward(states, actions, next_states), dtype=float).reshape(-1)
    n = len(states)
    if out.shape[0] != n:
        raise DimensionError(f"reward returned {out.shape[0]} values for a batch of {n}")
    bad = np.flatnonzero(~np.isfinite(out))
    if bad.size:
        idx = int(bad[0])
        raise NonFiniteRewardError(f"reward is non-finite ({out[idx]}) at batch index {idx}", idx)
    return out


class TabularReward:
    """Wraps a reward table as a black-box `RewardFunction` over integer state indices."""

    def __init__(self, table: np.ndarray, name: str = "reward"):
        self.table = check_reward_table(table, name=name)
        self.name = name

    @property
    def n_states(self) -> int:
        return self.table.shape[0]

    def __call__(self, states, actions, next_states) -> np.ndarray:
        s = np.asarray(states, dtype=np.intp).reshape(-1)
        a = np.asarray(actions, dtype=np.intp).reshape(-1)
        s2 = np.asarray(next_states, dtype=np.intp).reshape(-1)
        return self.table[s, a, s2]

    def state_features(self, states) -> np.ndarray:
        """One-hot encoding of integer states, used by learned potentials."""
        s = np.asarray(states, dtype=np.intp).reshape(-1)
        return np.eye(self.n_states)[s]


@dataclasses.dataclass(frozen=True)
class CoverageDistribution:
    """Tabular coverage distribution over transitions and its marginals.

    Attributes:
        joint: D(s, a, s'), shape (S, A, S), summing to one.
        state_dist: D_S over states, used by canonicalization.
        action_dist: D_A over actions, used by canonicalization.
    """

    joint: np.ndarray
    state_dist: np.ndarray
    action_dist: np.ndarray

    def __post_init__(self):
        joint = _readonly(self.joint)
        state_dist = _readonly(self.state_dist)
        action_dist = _readonly(self.action_dist)
        if joint.ndim != 3 or joint.shape[0] != joint.shape[2]:
            raise DimensionError(f"joint must have shape (S, A, S), got {joint.shape}")
        if state_dist.shape != (joint.shape[0],) or action_dist.shape != (joint.shape[1],):
            raise DimensionError("marginal shapes do not match joint")
        check_distribution(joint, "coverage joint")
        check_distribution(state_dist, "state distribution")
        check_distribution(action_dist, "action distribution")
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "state_dist", state_dist)
        object.__setattr__(self, "action_dist", action_dist)

    @property
    def n_states(self) -> int:
        return self.joint.shape[0]

    @property
    def n_actions(self) -> int:
        return self.joint.shape[1]

    @classmethod
    def from_joint(cls, joint, state_dist=None, action_dist=None) -> "CoverageDistribution":
        """Builds a coverage distribution, marginalizing D_S and D_A from the joint if absent.

        D_S defaults to the marginal of the source state s; D_A to the marginal of a.
        """
        joint = np.asarray(joint, dtype=float)
        if state_dist is None:
            state_dist = joint.sum(axis=(1, 2))
        if action_dist is None:
            action_dist = joint.sum(axis=(0, 2))
        return cls(joint, state_dist, action_dist)

    @classmethod
    def uniform_state_actions(cls, mdp: TabularMdp) -> "CoverageDistribution":
        """Uniform over (s, a) with s' drawn from the MDP dynamics; uniform D_S and D_A."""
        n_s, n_a = mdp.n_states, mdp.n_actions
        joint = mdp.transition / (n_s * n_a)
        return cls(joint, np.full(n_s, 1.0 / n_s), np.full(n_a, 1.0 / n_a))

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "CoverageDistribution":
        """Uniform over all of S x A x S."""
        joint = np.full((n_states, n_actions, n_states), 1.0 / (n_states * n_actions * n_states))
        return cls(joint, np.full(n_states, 1.0 / n_states), np.full(n_actions, 1.0 / n_actions))

    @classmethod
    def product(cls, state_dist, action_dist) -> "CoverageDistribution":
        """D = D_S x D_A x D_S: the distribution under which canonical rewards are centered."""
        state_dist = np.asarray(state_dist, dtype=float)
        action_dist = np.asarray(action_dist, dtype=float)
        joint = np.einsum("i,j,k->ijk", state_dist, action_dist, state_dist)
        return cls(joint, state_dist, action_dist)


class TransitionSampler(Protocol):
    """Seeded sampler for continuous (or black-box) coverage distributions.

    `sample_transitions` draws from D; `sample_states` and `sample_actions` draw
    independently from the marginals D_S and D_A.
    """

    def sample_transitions(self, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        ...

    def sample_states(self, n: int, rng: np.random.Generator) -> np.ndarray:
        ...

    def sample_actions(self, n: int, rng: np.random.Generator) -> np.ndarray:
        ...


class TabularSampler:
    """Draws integer-indexed transitions from a `CoverageDistribution`."""

    def __init__(self, coverage: CoverageDistribution):
        self.coverage = coverage
        self._flat = coverage.joint.reshape(-1)

    def sample_transitions(self, n, rng):
        idx = rng.choice(self._flat.size, size=n, p=self._flat)
        return np.unravel_index(idx, self.coverage.joint.shape)

    def sample_states(self, n, rng):
        return rng.choice(self.coverage.n_states, size=n, p=self.coverage.state_dist)

    def sample_actions(self, n, rng):
        return rng.choice(self.coverage.n_actions, size=n, p=self.coverage.action_dist)


@dataclasses.dataclass(frozen=True)
class EquivalenceTransform:
    """Positive rescaling plus potential shaping.

    For continuous state spaces the potential may be a callable of a state batch;
    keeping it bounded is the caller's responsibility.
    """

    scale: float
    potential: np.ndarray | Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"scale must be strictly positive, got {self.scale}")
        if not callable(self.potential):
            potential = _readonly(self.potential)
            if potential.ndim != 1 or not np.all(np.isfinite(potential)):
                raise ValidationError("potential must be a finite vector over states")
            object.__setattr__(self, "potential", potential)


def shaping_only(potential, discount: float, n_actions: int = 1) -> np.ndarray:
    """Potential shaping reward gamma * phi(s') - phi(s) as an (S, A, S) table."""
    potential = np.asarray(potential, dtype=float)
    if potential.ndim != 1:
        raise DimensionError("potential must be one-dimensional")
    if not np.all(np.isfinite(potential)):
        raise ValidationError("potential contains non-finite entries")
    shaping = discount * potential[np.newaxis, :] - potential[:, np.newaxis]
    return np.repeat(shaping[:, np.newaxis, :], n_actions, axis=1)


def apply_equivalence(reward: np.ndarray, tf: EquivalenceTransform, discount: float) -> np.ndarray:
    """Returns scale * R(s, a, s') + discount * phi(s') - phi(s)."""
    reward = check_reward_table(reward)
    if callable(tf.potential):
        raise ValidationError("tabular rewards need a tabular potential")
    if tf.potential.shape != (reward.shape[0],):
        raise DimensionError(
            f"potential has shape {tf.potential.shape}, reward has {reward.shape[0]} states"
        )
    if tf.scale == 1.0 and not np.any(tf.potential):
        return reward.copy()
    new_pot = discount * tf.potential[np.newaxis, np.newaxis, :]
    old_pot = tf.potential[:, np.newaxis, np.newaxis]
    return tf.scale * reward + new_pot - old_pot


def shaping_basis(n_states: int, n_actions: int, discount: float) -> np.ndarray:
    """Matrix M with M @ phi == shaping_only(phi, discount, n_actions).reshape(-1)."""
    basis = np.zeros((n_states, n_actions, n_states, n_states))
    s = np.arange(n_states)
    basis[:, :, s, s] += discount
    basis[s, :, :, s] -= 1.0
    return basis.reshape(-1, n_states)


def check_equivalent(
    a: np.ndarray, b: np.ndarray, discount: float, tol: float = 1e-8, min_scale: float = 1e-12
) -> Tuple[bool, Optional[EquivalenceTransform]]:
    """Tests whether b == scale * a + shaping for some scale > 0 and potential.

    Fits (scale, phi) by linear least squares with scale >= `min_scale`, then
    accepts if the max-norm residual is at most `tol`.

    Returns:
        (is_equivalent, transform); the transform is None when not equivalent.
    """
    a = check_reward_table(a, name="a")
    b = check_reward_table(b, name="b")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    n_s, n_a, _ = a.shape
    basis = shaping_basis(n_s, n_a, discount)
    design = np.column_stack([a.reshape(-1), basis])
    target = b.reshape(-1)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    scale = coef[0]
    if scale < min_scale:
        scale = min_scale
        potential, *_ = np.linalg.lstsq(basis, target - scale * a.reshape(-1), rcond=None)
    else:
        potential = coef[1:]
    residual = target - scale * a.reshape(-1) - basis @ potential
    if np.max(np.abs(residual)) > tol:
        return False, None
    return True, EquivalenceTransform(float(scale), potential)
