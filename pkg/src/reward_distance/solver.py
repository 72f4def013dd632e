"""Tabular planning: value iteration, exact policy returns and the regret-bound check."""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from reward_distance import distances
from reward_distance.core import CoverageDistribution, TabularMdp, check_reward_table
from reward_distance.errors import ConvergenceError, ValidationError

TIE_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class ValueSolution:
    """Optimal values and the greedy action sets.

    Attributes:
        values: V*(s).
        q_values: Q*(s, a).
        greedy: Boolean mask (S, A); True for every action within the tie
            tolerance of the best action.
        iterations: Value-iteration sweeps used (policy-iteration polish excluded).
        residual: Bellman residual ||T(V) - V||_inf of the returned values.
    """

    values: np.ndarray
    q_values: np.ndarray
    greedy: np.ndarray
    iterations: int
    residual: float

    def policy(self) -> np.ndarray:
        """Deterministic policy (S, A) taking the first greedy action in each state."""
        first = np.argmax(self.greedy, axis=1)
        return np.eye(self.greedy.shape[1])[first]


def expected_reward(mdp: TabularMdp, reward: np.ndarray) -> np.ndarray:
    """r(s, a) = E_{s' ~ T(s, a)} R(s, a, s')."""
    return np.einsum("ijk,ijk->ij", mdp.transition, reward)


def _q_from_values(mdp, r_sa, values):
    return r_sa + mdp.discount * mdp.transition @ values


def policy_values(mdp: TabularMdp, reward: np.ndarray, policy: np.ndarray) -> np.ndarray:
    """V^pi by solving (I - gamma P_pi) V = r_pi."""
    reward = check_reward_table(reward, mdp)
    policy = np.asarray(policy, dtype=float)
    if policy.shape != (mdp.n_states, mdp.n_actions):
        raise ValidationError(f"policy shape {policy.shape} does not match MDP")
    if np.any(policy < 0) or np.max(np.abs(policy.sum(axis=1) - 1)) > 1e-9:
        raise ValidationError("policy rows must be probability distributions")
    r_pi = np.sum(policy * expected_reward(mdp, reward), axis=1)
    p_pi = np.einsum("ij,ijk->ik", policy, mdp.transition)
    system = np.eye(mdp.n_states) - mdp.discount * p_pi
    try:
        return np.linalg.solve(system, r_pi)
    except np.linalg.LinAlgError as e:
        raise ValidationError("policy evaluation system is singular (discount must be < 1)") from e


def policy_return(mdp: TabularMdp, reward: np.ndarray, policy: np.ndarray) -> float:
    """Exact expected discounted return of `policy` from the initial distribution."""
    return float(mdp.initial_dist @ policy_values(mdp, reward, policy))


def value_iteration(
    mdp: TabularMdp,
    reward: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    tie_tol: float = TIE_TOL,
) -> ValueSolution:
    """Computes optimal values and greedy action sets.

    Value iteration runs until the Bellman residual is at most `tol`, then the
    greedy policy is polished by policy iteration so the values are exact up to
    round-off; the tie tolerance can then be much tighter than the residual
    divided by (1 - discount).

    Raises:
        ValidationError: discount is not below 1.
        ConvergenceError: `max_iter` sweeps did not reach `tol`.
    """
    if not mdp.discount < 1:
        raise ValidationError("value iteration requires discount < 1")
    reward = check_reward_table(reward, mdp)
    r_sa = expected_reward(mdp, reward)
    values = np.zeros(mdp.n_states)
    for it in range(1, max_iter + 1):
        new_values = _q_from_values(mdp, r_sa, values).max(axis=1)
        delta = np.max(np.abs(new_values - values))
        values = new_values
        if delta <= tol:
            break
    else:
        raise ConvergenceError(f"value iteration did not converge in {max_iter} iterations")

    actions = np.arange(mdp.n_actions)
    policy_idx = _q_from_values(mdp, r_sa, values).argmax(axis=1)
    for _ in range(100):
        policy = (policy_idx[:, None] == actions[None, :]).astype(float)
        exact = policy_values(mdp, reward, policy)
        q = _q_from_values(mdp, r_sa, exact)
        improved = np.where(
            q.max(axis=1) > q[np.arange(mdp.n_states), policy_idx] + tie_tol,
            q.argmax(axis=1),
            policy_idx,
        )
        if np.array_equal(improved, policy_idx):
            values = exact
            break
        policy_idx = improved

    q = _q_from_values(mdp, r_sa, values)
    best = q.max(axis=1)
    greedy = q >= best[:, None] - tie_tol
    residual = float(np.max(np.abs(best - values)))
    return ValueSolution(values, q, greedy, it, residual)


def same_greedy_sets(a: ValueSolution, b: ValueSolution) -> bool:
    return bool(np.array_equal(a.greedy, b.greedy))


def weighted_l2_norm(reward: np.ndarray, dist: CoverageDistribution) -> float:
    return float(np.sqrt(np.sum(dist.joint * np.square(reward))))


@dataclasses.dataclass(frozen=True)
class RegretReport:
    """Both sides of the discrete regret bound for one instance."""

    lhs: float
    rhs: float
    epic: float
    k: float
    reward_norm: float
    holds: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def regret_bound_check(
    mdp: TabularMdp,
    a: np.ndarray,
    b: np.ndarray,
    dist: Optional[CoverageDistribution] = None,
    atol: float = 1e-9,
) -> RegretReport:
    """Checks G_A(pi_A*) - G_A(pi_B*) <= 16 K ||R_A||_2 / (1 - gamma) * EPIC(R_A, R_B).

    The coverage distribution must be uniform over S x A x S, for which the
    coverage constant K = |S|^2 |A| is valid. EPIC and ||R_A||_2 are computed
    under that distribution; the policies are deterministic greedy policies of
    the optimal action sets.
    """
    n_s, n_a = mdp.n_states, mdp.n_actions
    if dist is None:
        dist = CoverageDistribution.uniform(n_s, n_a)
    uniform = CoverageDistribution.uniform(n_s, n_a)
    if not (
        np.allclose(dist.joint, uniform.joint, rtol=0, atol=1e-15)
        and np.allclose(dist.state_dist, uniform.state_dist, rtol=0, atol=1e-15)
        and np.allclose(dist.action_dist, uniform.action_dist, rtol=0, atol=1e-15)
    ):
        raise ValidationError("regret bound check requires the uniform coverage distribution")
    k = float(n_s * n_s * n_a)

    pi_a = value_iteration(mdp, a).policy()
    pi_b = value_iteration(mdp, b).policy()
    lhs = policy_return(mdp, a, pi_a) - policy_return(mdp, a, pi_b)
    norm = weighted_l2_norm(a, dist)
    try:
        epic = distances.epic_exact(a, b, dist, mdp.discount)
    except distances.DegenerateError:
        # A constant canonical reward makes EPIC undefined; the bound is then vacuous
        # unless the regret itself is zero.
        epic = float("nan")
    rhs = 16.0 * k * norm / (1.0 - mdp.discount) * epic
    holds = lhs <= atol if np.isnan(rhs) else lhs <= rhs + atol
    return RegretReport(
        lhs=float(lhs), rhs=float(rhs), epic=float(epic), k=k, reward_norm=norm, holds=bool(holds)
    )
