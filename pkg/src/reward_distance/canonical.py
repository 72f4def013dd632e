"""Canonically shaped rewards, computed exactly for tables and by sampling for black boxes.

The canonical reward of R under state and action distributions D_S, D_A is

    C(R)(s, a, s') = R(s, a, s') + E[gamma R(s', A, S') - R(s, A, S') - gamma R(S, A, S')]

with S, S' ~ D_S and A ~ D_A independent. Potential shaping cancels exactly.
"""

from __future__ import annotations

from typing import Callable, Tuple, Union

import numpy as np

from reward_distance.core import (
    CoverageDistribution,
    check_distribution,
    check_reward_table,
    evaluate_reward,
)
from reward_distance.errors import DimensionError, NonFiniteRewardError, ValidationError

# Upper bound on the number of reward evaluations per vectorized call.
EVAL_CHUNK = 1 << 20

Marginals = Union[CoverageDistribution, Tuple[np.ndarray, np.ndarray]]


def _marginals(dist: Marginals) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(dist, CoverageDistribution):
        return dist.state_dist, dist.action_dist
    state_dist, action_dist = (np.asarray(d, dtype=float) for d in dist)
    check_distribution(state_dist, "state distribution")
    check_distribution(action_dist, "action distribution")
    return state_dist, action_dist


def mean_next_reward(reward: np.ndarray, state_dist: np.ndarray, action_dist: np.ndarray) -> np.ndarray:
    """f(s) = E[R(s, A, S')] for A ~ D_A, S' ~ D_S."""
    # Contractions go through BLAS / numpy pairwise summation.
    return np.einsum("ijk,j,k->i", reward, action_dist, state_dist)


def canonicalize_exact(reward: np.ndarray, dist: Marginals, discount: float) -> np.ndarray:
    """Canonically shaped version of a reward table.

    Args:
        reward: Table indexed (s, a, s').
        dist: A `CoverageDistribution` (only its marginals are used), or a
            pair (state_dist, action_dist).
        discount: Discount factor.

    Returns:
        Table of the same shape. Its mean under D_S x D_A x D_S is zero.

    Raises:
        ValidationError: marginals are not valid distributions.
        DimensionError: marginal sizes do not match the table.
    """
    reward = check_reward_table(reward)
    state_dist, action_dist = _marginals(dist)
    if state_dist.shape != (reward.shape[0],) or action_dist.shape != (reward.shape[1],):
        raise DimensionError("marginal distributions do not match reward shape")
    f = mean_next_reward(reward, state_dist, action_dist)
    centre = discount * float(state_dist @ f)
    return reward + discount * f[np.newaxis, np.newaxis, :] - f[:, np.newaxis, np.newaxis] - centre


def canonical_mean(canonical: np.ndarray, dist: Marginals) -> float:
    """Mean of a table under D_S x D_A x D_S."""
    state_dist, action_dist = _marginals(dist)
    return float(np.einsum("ijk,i,j,k->", canonical, state_dist, action_dist, state_dist))


def _mean_over_batch(
    reward: Callable, states: np.ndarray, mean_states: np.ndarray, mean_actions: np.ndarray
) -> np.ndarray:
    """m(z) = (1/N_M) sum_j R(z, u_j, x_j) for every row z of `states`."""
    n_m = len(mean_states)
    out = np.empty(len(states))
    per_chunk = max(1, EVAL_CHUNK // n_m)
    for start in range(0, len(states), per_chunk):
        block = states[start : start + per_chunk]
        k = len(block)
        rep_states = np.repeat(block, n_m, axis=0)
        rep_actions = np.tile(mean_actions, (k,) + (1,) * (mean_actions.ndim - 1))
        rep_next = np.tile(mean_states, (k,) + (1,) * (mean_states.ndim - 1))
        try:
            values = evaluate_reward(reward, rep_states, rep_actions, rep_next)
        except NonFiniteRewardError as e:
            row, j = divmod(e.index, n_m)
            raise NonFiniteRewardError(
                f"reward is non-finite on mean-batch sample {j} (paired with state row {start + row})",
                j,
            ) from e
        out[start : start + k] = values.reshape(k, n_m).mean(axis=1)
    return out


def canonicalize_sampled(
    reward: Callable,
    transitions: Tuple[np.ndarray, np.ndarray, np.ndarray],
    mean_batch: Tuple[np.ndarray, np.ndarray],
    discount: float,
) -> np.ndarray:
    """Monte-Carlo canonical reward on a batch of transitions.

    For each (s, a, s') in `transitions` returns

        R(s, a, s') + gamma/N_M sum_j R(s', u_j, x_j) - 1/N_M sum_j R(s, u_j, x_j)

    where (x_j, u_j) are the rows of `mean_batch`. The constant centring term is
    dropped, so the result equals the canonical reward up to one additive scalar.

    Reward evaluations are O(N_V * N_M) in the worst case; states occurring more
    than once in the batch are evaluated once.

    Args:
        reward: Batch evaluator R(states, actions, next_states).
        transitions: Arrays (states, actions, next_states) of length N_V.
        mean_batch: Arrays (states, actions) of length N_M drawn from D_S x D_A.
        discount: Discount factor.

    Raises:
        NonFiniteRewardError: the evaluator returned NaN or infinity; the
            exception carries the offending batch index.
    """
    states, actions, next_states = (np.asarray(x) for x in transitions)
    mean_states, mean_actions = (np.asarray(x) for x in mean_batch)
    if len(mean_states) < 1 or len(mean_states) != len(mean_actions):
        raise ValidationError("mean batch must be nonempty with matching state/action lengths")
    if not len(states) == len(actions) == len(next_states):
        raise DimensionError("transition arrays have different lengths")

    direct = evaluate_reward(reward, states, actions, next_states)
    both = np.concatenate([states, next_states], axis=0)
    unique, inverse = np.unique(both, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    means = _mean_over_batch(reward, unique, mean_states, mean_actions)
    n = len(states)
    return direct + discount * means[inverse[n:]] - means[inverse[:n]]


def sample_mean_batch(sampler, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Draws N_M independent (state, action) pairs from D_S x D_A."""
    return sampler.sample_states(n, rng), sampler.sample_actions(n, rng)


def canonical_perturbation_norm(
    dist: Marginals, x: int, u: int, x_next: int, scale: float, discount: float
) -> float:
    """Sup-norm change of the canonical shaping term caused by perturbing one transition.

    Perturbing R by `scale` at (x, u, x') changes C(R) - R by exactly
    |scale| (1 + gamma D_S(x)) D_A(u) D_S(x') in sup norm.

    Raises:
        ValidationError: fewer than two states.
    """
    state_dist, action_dist = _marginals(dist)
    if len(state_dist) < 2:
        raise ValidationError("closed form requires at least two states")
    return abs(scale) * (1.0 + discount * state_dist[x]) * action_dist[u] * state_dist[x_next]
