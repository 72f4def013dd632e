"""Property suites and experiments, each returning a JSON-ready report.

Every report has a ``passed`` flag. The CLI exposes them through the ``suite``
and ``regret-suite`` subcommands.
"""

from __future__ import annotations

from typing import Callable, Dict, List

import numpy as np

from reward_distance.canonical import canonical_mean, canonical_perturbation_norm, canonicalize_exact
from reward_distance.core import (
    CoverageDistribution,
    EquivalenceTransform,
    TabularReward,
    TabularSampler,
    apply_equivalence,
)
from reward_distance.distances import (
    ddsr_distance,
    epic_exact,
    epic_sampled,
    erc_distance,
    pearson_distance,
)
from reward_distance.environments import gridworld, pointmass
from reward_distance.environments.tabular import (
    TOY_M0,
    TOY_M1,
    TOY_X,
    TOY_Y,
    npec_counterexample,
    random_coverage,
    random_mdp,
    two_start_episodes,
    two_start_mdp,
)
from reward_distance.mlp import TinyMlp
from reward_distance.npec import NpecConfig, npec_approx_gradient, npec_normalized
from reward_distance.solver import regret_bound_check, same_greedy_sets, value_iteration

MAX_STATES = 10
MAX_ACTIONS = 5


def _random_instance(rng: np.random.Generator, max_states=MAX_STATES, max_actions=MAX_ACTIONS):
    n_s = int(rng.integers(2, max_states + 1))
    n_a = int(rng.integers(1, max_actions + 1))
    dist = random_coverage(n_s, n_a, rng)
    discount = float(rng.uniform(0.0, 1.0))
    return n_s, n_a, dist, discount


def _random_reward(rng, n_s, n_a):
    return rng.uniform(-1.0, 1.0, size=(n_s, n_a, n_s))


def _random_transform(rng, n_s) -> EquivalenceTransform:
    scale = 10.0 * (1.0 - rng.random())  # (0, 10]
    return EquivalenceTransform(scale, rng.normal(0.0, 5.0, size=n_s))


def equivalence_invariance(n: int = 200, seed: int = 0, tol: float = 1e-9) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        n_s, n_a, dist, discount = _random_instance(rng)
        r = _random_reward(rng, n_s, n_a)
        shaped = apply_equivalence(r, _random_transform(rng, n_s), discount)
        worst = max(worst, epic_exact(r, shaped, dist, discount))
    return {"name": "equivalence", "instances": n, "max_epic": worst, "tol": tol, "passed": bool(worst < tol)}


def gridworld_figure(tol: float = 1e-10, threshold: float = 0.1) -> dict:
    """Equivalent and distinct gridworld pairs, plus the deterministic/slippery policy claims."""
    rewards = gridworld.all_rewards(3)
    det = gridworld.gridworld_mdp(3)
    slip = gridworld.gridworld_mdp(3, slippery=True)
    cov = CoverageDistribution.uniform_state_actions(det)
    equivalent = epic_exact(rewards["sparse_goal"], rewards["dense_goal"], cov, det.discount)
    distinct = epic_exact(rewards["dirt_path"], rewards["cliff_walk"], cov, det.discount)
    same_det = same_greedy_sets(
        value_iteration(det, rewards["dirt_path"]), value_iteration(det, rewards["cliff_walk"])
    )
    same_slip = same_greedy_sets(
        value_iteration(slip, rewards["dirt_path"]), value_iteration(slip, rewards["cliff_walk"])
    )
    passed = equivalent < tol and distinct > threshold and same_det and not same_slip
    return {
        "name": "gridworld",
        "epic_sparse_dense": equivalent,
        "epic_dirt_cliff": distinct,
        "same_policies_deterministic": same_det,
        "same_policies_slippery": same_slip,
        "passed": bool(passed),
    }


def pseudometric_axioms(n: int = 200, seed: int = 0, self_tol: float = 1e-12, tri_tol: float = 1e-9) -> dict:
    rng = np.random.default_rng(seed)
    report = {}
    for label in ("epic", "pearson"):
        asym = self_max = tri_max = 0.0
        for _ in range(n):
            if label == "epic":
                n_s, n_a, dist, discount = _random_instance(rng)
                a, b, c = (_random_reward(rng, n_s, n_a) for _ in range(3))

                def d(x, y, dist=dist, discount=discount):
                    return epic_exact(x, y, dist, discount)

            else:
                size = int(rng.integers(2, 200))
                w = rng.dirichlet(np.ones(size))
                a, b, c = (rng.normal(size=size) for _ in range(3))

                def d(x, y, w=w):
                    return pearson_distance(x, y, w)

            ab, ba = d(a, b), d(b, a)
            asym = max(asym, abs(ab - ba))
            self_max = max(self_max, d(a, a), d(b, b))
            tri_max = max(tri_max, d(a, c) - ab - d(b, c))
        report[label] = {"max_asymmetry": asym, "max_self": self_max, "max_triangle_violation": tri_max}
    passed = all(
        r["max_asymmetry"] == 0.0 and r["max_self"] <= self_tol and r["max_triangle_violation"] <= tri_tol
        for r in report.values()
    )
    return {"name": "pseudometric", "instances": n, **report, "passed": passed}


def ddsr_equivalence(n: int = 50, seed: int = 0, tol: float = 1e-10) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        n_s, n_a, dist, discount = _random_instance(rng)
        a, b = _random_reward(rng, n_s, n_a), _random_reward(rng, n_s, n_a)
        worst = max(worst, abs(ddsr_distance(a, b, dist, discount, p=2) - epic_exact(a, b, dist, discount)))
    return {"name": "ddsr", "instances": n, "max_abs_difference": worst, "passed": bool(worst <= tol)}


def mean_zero(n: int = 100, seed: int = 0, tol: float = 1e-10) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        n_s, n_a, dist, discount = _random_instance(rng)
        r = _random_reward(rng, n_s, n_a)
        worst = max(worst, abs(canonical_mean(canonicalize_exact(r, dist, discount), dist)))
    return {"name": "mean-zero", "instances": n, "max_abs_mean": worst, "passed": bool(worst <= tol)}


def smoothness(n: int = 20, seed: int = 0, tol: float = 1e-10) -> dict:
    """Closed-form vs brute-force change of the shaping term C(R) - R under a one-entry perturbation."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        n_s, n_a, dist, discount = _random_instance(rng)
        r = _random_reward(rng, n_s, n_a)
        x, u, x2 = int(rng.integers(n_s)), int(rng.integers(n_a)), int(rng.integers(n_s))
        scale = float(rng.normal(0.0, 3.0))
        bumped = r.copy()
        bumped[x, u, x2] += scale
        change = (canonicalize_exact(bumped, dist, discount) - bumped) - (canonicalize_exact(r, dist, discount) - r)
        brute = float(np.max(np.abs(change)))
        closed = canonical_perturbation_norm(dist, x, u, x2, scale, discount)
        worst = max(worst, abs(brute - closed))
    return {"name": "smoothness", "instances": n, "max_abs_difference": worst, "passed": bool(worst <= tol)}


def regret_suite(
    n: int = 100, max_states: int = 8, max_actions: int = 4, discount: float = 0.9, seed: int = 0,
    equivalent: bool = False,
) -> dict:
    """Random MDPs under uniform coverage; ``equivalent`` makes R_B a transform of R_A."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        n_s = int(rng.integers(2, max_states + 1))
        n_a = int(rng.integers(1, max_actions + 1))
        mdp, a = random_mdp(n_s, n_a, discount, rng)
        if equivalent:
            b = apply_equivalence(a, _random_transform(rng, n_s), discount)
        else:
            noise = float(rng.choice([0.01, 0.1, 1.0, 10.0]))
            b = a + noise * _random_reward(rng, n_s, n_a)
        report = regret_bound_check(mdp, a, b)
        rows.append({"instance": i, "n_states": n_s, "n_actions": n_a, **report.to_dict()})
    n_hold = sum(r["holds"] for r in rows)
    return {"name": "regret", "instances": rows, "n_hold": n_hold, "n": n, "passed": n_hold == n}


SAMPLED_PAIRS = (("sparse_goal", "dirt_path"), ("dirt_path", "cliff_walk"), ("sparse_penalty", "cliff_walk"))


def sampled_convergence(
    sizes=(512, 2048, 8192, 16384), n_seeds: int = 30, seed: int = 0, tol: float = 0.01, side: int = 5
) -> dict:
    """Sampled EPIC on black-box gridworld rewards against the exact value."""
    mdp = gridworld.gridworld_mdp(side)
    cov = CoverageDistribution.uniform_state_actions(mdp)
    sampler = TabularSampler(cov)
    rewards = gridworld.all_rewards(side, mdp.discount)
    maes: List[float] = []
    final_errors = {}
    for n in sizes:
        errors = []
        for a_name, b_name in SAMPLED_PAIRS:
            exact = epic_exact(rewards[a_name], rewards[b_name], cov, mdp.discount)
            est = epic_sampled(
                TabularReward(rewards[a_name]), TabularReward(rewards[b_name]), sampler, mdp.discount,
                n_v=n, n_m=n, n_seeds=n_seeds, seed=seed,
            )
            errors.extend(abs(v - exact) for v in est.seed_values)
            final_errors[f"{a_name}/{b_name}"] = abs(est.value - exact)
        maes.append(float(np.mean(errors)))
    monotone = all(later <= earlier for earlier, later in zip(maes, maes[1:]))
    worst = max(final_errors.values())
    return {
        "name": "sampled-convergence",
        "sizes": list(sizes),
        "mae": maes,
        "final_abs_error": final_errors,
        "passed": bool(monotone and worst < tol),
    }


def pointmass_equivalent(
    n_samples: int = 4096, n_seeds: int = 30, npec_config: NpecConfig = NpecConfig(), seed: int = 0,
    epic_tol: float = 1e-3, ratio: float = 100.0,
) -> dict:
    config = pointmass.PointMassConfig()
    sampler = pointmass.RolloutSampler(config)
    dense = pointmass.reward_function("dense_no_ctrl", config)
    sparse = pointmass.reward_function("sparse_no_ctrl", config)
    epic = epic_sampled(dense, sparse, sampler, config.discount, n_v=n_samples, n_m=n_samples, n_seeds=n_seeds, seed=seed)
    npec = npec_approx_gradient(dense, sparse, sampler, config.discount, npec_config)
    passed = epic.value < epic_tol and npec.value >= ratio * epic.value
    return {"name": "pointmass", "epic": epic.to_dict(), "npec": npec.to_dict(), "passed": bool(passed)}


def npec_asymmetry(tol: float = 1e-9) -> dict:
    mdp, rewards, cov = npec_counterexample()
    ab = npec_normalized(rewards["a"], rewards["b"], cov, mdp.discount, p=1)
    ba = npec_normalized(rewards["b"], rewards["a"], cov, mdp.discount, p=1)
    passed = abs(ab - 0.5) <= tol and abs(ba - 1.0) <= tol
    return {"name": "npec-asymmetry", "npec_a_b": ab, "npec_b_a": ba, "passed": passed}


ERC_MAGNITUDES = (1e2, 1e4, 1e6)


def erc_toy_rewards(magnitude: float, sign: float, discount: float = 0.9):
    """Base rewards on the first and second action, shaped by Phi(X) = c, Phi(Y) = -c.

    R_A is shaped with Phi and R_B with ``sign * Phi``.
    """
    mdp = two_start_mdp(discount)
    first = np.zeros(mdp.reward_shape)
    first[[TOY_X, TOY_Y], 0, :] = 1.0
    second = np.zeros(mdp.reward_shape)
    second[[TOY_M0, TOY_M1], 0, :] = 1.0
    phi = np.zeros(mdp.n_states)
    phi[TOY_X], phi[TOY_Y] = magnitude, -magnitude
    a = apply_equivalence(first, EquivalenceTransform(1.0, phi), discount)
    b = apply_equivalence(second, EquivalenceTransform(1.0, sign * phi), discount)
    return mdp, a, b


def erc_pathology(magnitudes=ERC_MAGNITUDES, discount: float = 0.9) -> dict:
    """ERC under growing shaping on the two-start toy, over its eight equally likely episodes."""
    episodes = two_start_episodes()
    out = {}
    for label, sign in (("equal_sign", 1.0), ("opposite_sign", -1.0)):
        values = []
        for c in magnitudes:
            mdp, a, b = erc_toy_rewards(c, sign, discount)
            values.append(erc_distance(TabularReward(a), TabularReward(b), episodes, discount).value)
        out[label] = values
    eq, op = out["equal_sign"], out["opposite_sign"]
    passed = (
        all(y < x for x, y in zip(eq, eq[1:]))
        and all(y > x for x, y in zip(op, op[1:]))
        and eq[-1] < 1e-3
        and op[-1] > 1 - 1e-3
    )
    return {"name": "erc-pathology", "magnitudes": list(magnitudes), **out, "passed": bool(passed)}


def relative_gradient_error(mlp: TinyMlp, x: np.ndarray, weights: np.ndarray, h: float = 1e-6) -> float:
    """Relative error of backprop vs central differences for f = sum(weights * mlp(x))."""
    out, cache = mlp.forward(x)
    analytic = np.concatenate([g.ravel() for g in mlp.backward(cache, weights)])
    theta = mlp.get_flat()
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        bumped = theta.copy()
        bumped[i] += h
        mlp.set_flat(bumped)
        up = np.dot(weights, mlp(x))
        bumped[i] -= 2 * h
        mlp.set_flat(bumped)
        down = np.dot(weights, mlp(x))
        numeric[i] = (up - down) / (2 * h)
    mlp.set_flat(theta)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def gradient_check(n: int = 100, seed: int = 0, tol: float = 1e-5) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        n_in = int(rng.integers(1, 6))
        mlp = TinyMlp(n_in, rng=rng, zero_output=False)
        x = rng.normal(size=(int(rng.integers(1, 9)), n_in))
        worst = max(worst, relative_gradient_error(mlp, x, rng.normal(size=len(x))))
    return {"name": "gradcheck", "instances": n, "max_relative_error": worst, "passed": bool(worst < tol)}


SUITES: Dict[str, Callable[..., dict]] = {
    "equivalence": equivalence_invariance,
    "gridworld": gridworld_figure,
    "pseudometric": pseudometric_axioms,
    "ddsr": ddsr_equivalence,
    "mean-zero": mean_zero,
    "smoothness": smoothness,
    "regret": regret_suite,
    "sampled-convergence": sampled_convergence,
    "pointmass": pointmass_equivalent,
    "npec-asymmetry": npec_asymmetry,
    "erc-pathology": erc_pathology,
    "gradcheck": gradient_check,
}
