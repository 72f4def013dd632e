import numpy as np
import pytest

from conftest import make_instance
from reward_distance.core import (
    CoverageDistribution,
    EquivalenceTransform,
    TabularReward,
    TabularSampler,
    apply_equivalence,
    check_equivalent,
    shaping_only,
)
from reward_distance.environments import gridworld
from reward_distance.environments.tabular import npec_counterexample
from reward_distance.errors import ValidationError
from reward_distance.npec import (
    WARM_START_EPS,
    NpecConfig,
    affine_fit_nonneg,
    fit_npec_model,
    npec_approx_gradient,
    npec_normalized,
    npec_unnormalized_exact,
    npec_warm_start,
)


def objective(model, a, b, dist, p=2):
    return np.sum(dist.joint * np.abs(model.table(a) - b) ** p) ** (1 / p)


def b3_grid_oracle(a, b, dist, p=1, grid=np.linspace(0, 4, 40001)):
    """On self-loop-only support with gamma = 1 shaping and offset vanish, leaving a 1-D search over lam."""
    w = dist.joint.ravel()
    av, bv = a.ravel(), b.ravel()
    values = [np.dot(w, np.abs(lam * av - bv) ** p) ** (1 / p) for lam in grid]
    return min(values)


def test_counterexample_against_grid_oracle():
    mdp, r, dist = npec_counterexample()
    for x, y in (("a", "b"), ("b", "a")):
        exact, _ = npec_unnormalized_exact(r[x], r[y], dist, 1.0, p=1)
        assert exact == pytest.approx(b3_grid_oracle(r[x], r[y], dist), abs=1e-9)
    num, model = npec_unnormalized_exact(r["a"], r["b"], dist, 1.0, p=1)
    assert num == pytest.approx(0.5, abs=1e-12)
    assert model.scale == pytest.approx(0.5, abs=1e-9)
    assert npec_normalized(r["a"], r["b"], dist, 1.0, p=1) == pytest.approx(0.5, abs=1e-12)
    assert npec_normalized(r["b"], r["a"], dist, 1.0, p=1) == pytest.approx(1.0, abs=1e-12)


def test_self_distance_zero(rng):
    a, dist, gamma = make_instance(rng)
    value, model = npec_unnormalized_exact(a, a, dist, gamma)
    assert value < 1e-10
    assert model.scale == pytest.approx(1.0, abs=1e-8)


def test_transformed_target_distance_zero(rng):
    for _ in range(10):
        a, dist, gamma = make_instance(rng)
        b = apply_equivalence(a, EquivalenceTransform(float(rng.uniform(0.1, 10)), rng.normal(size=a.shape[0])), gamma)
        assert npec_unnormalized_exact(a, b, dist, gamma)[0] < 1e-10


def test_scalable_in_target(rng):
    a, dist, gamma = make_instance(rng)
    b = rng.uniform(-1, 1, size=a.shape)
    base = npec_unnormalized_exact(a, b, dist, gamma)[0]
    assert npec_unnormalized_exact(a, 3.5 * b, dist, gamma)[0] == pytest.approx(3.5 * base, abs=1e-9)


def test_bounded_by_zero_class(rng):
    for _ in range(20):
        a, dist, gamma = make_instance(rng)
        b = rng.uniform(-1, 1, size=a.shape)
        assert npec_unnormalized_exact(a, b, dist, gamma)[0] <= npec_unnormalized_exact(0 * a, b, dist, gamma)[0] + 1e-9
        assert 0 <= npec_normalized(a, b, dist, gamma) <= 1 + 1e-9


def test_normalized_invariant_under_transforms(rng):
    for _ in range(10):
        a, dist, gamma = make_instance(rng)
        b = rng.uniform(-1, 1, size=a.shape)
        n_s = a.shape[0]
        a2 = apply_equivalence(a, EquivalenceTransform(float(rng.uniform(0.1, 10)), rng.normal(size=n_s)), gamma)
        b2 = apply_equivalence(b, EquivalenceTransform(float(rng.uniform(0.1, 10)), rng.normal(size=n_s)), gamma)
        assert npec_normalized(a2, b2, dist, gamma) == pytest.approx(npec_normalized(a, b, dist, gamma), abs=1e-9)


def test_zero_denominator_branch(rng):
    a, dist, gamma = make_instance(rng)
    b = shaping_only(rng.normal(size=a.shape[0]), gamma, a.shape[1])
    assert npec_normalized(a, b, dist, gamma) == 0.0


def test_exact_solution_is_locally_optimal(rng):
    for _ in range(50):
        a, dist, gamma = make_instance(rng, discount=float(rng.uniform(0, 0.99)))
        b = rng.uniform(-1, 1, size=a.shape)
        value, model = npec_unnormalized_exact(a, b, dist, gamma)
        assert objective(model, a, b, dist) == pytest.approx(value, abs=1e-12)
        for _ in range(5):
            direction = rng.normal(size=a.shape[0] + 2)
            direction *= 1e-3 / np.linalg.norm(direction)
            lam = max(model.scale + direction[0], 0.0)
            moved = type(model)(np.log(lam) if lam > 0 else -np.inf, model.offset + direction[1], model.potential + direction[2:], gamma)
            assert objective(moved, a, b, dist) >= value - 1e-12


def test_negative_fit_hits_boundary(rng):
    a, dist, gamma = make_instance(rng)
    value, model = npec_unnormalized_exact(a, -a, dist, gamma)
    assert model.scale == 0.0 and model.log_scale == -np.inf
    assert value == pytest.approx(npec_unnormalized_exact(0 * a, -a, dist, gamma)[0], abs=1e-12)


def test_model_is_equivalent_to_a(rng):
    a, dist, gamma = make_instance(rng)
    b = rng.uniform(-1, 1, size=a.shape)
    _, model = npec_unnormalized_exact(a, b, dist, gamma)
    if model.scale > 0:
        ok, tf = check_equivalent(a, model.table(a), gamma)
        assert ok and tf.scale == pytest.approx(model.scale)


def test_exact_rejects_other_p(rng):
    a, dist, gamma = make_instance(rng)
    with pytest.raises(ValidationError):
        npec_unnormalized_exact(a, a, dist, gamma, p=3)


def test_warm_start_affine():
    a = np.linspace(-1, 1, 50)
    nu, c = npec_warm_start(a, 3 * a + 2)
    assert np.exp(nu) == pytest.approx(3.0, abs=1e-8) and c == pytest.approx(2.0, abs=1e-8)


def test_warm_start_boundary():
    a = np.linspace(-1, 1, 50)
    assert affine_fit_nonneg(a, -a)[0] == 0.0
    nu, c = npec_warm_start(a, -a + 0.5)
    assert nu == pytest.approx(np.log(WARM_START_EPS))
    assert c == pytest.approx(0.5)


def coordinate_projection_oracle(a, b):
    """NNLS oracle for one bounded coordinate: project the unconstrained slope, refit the offset."""
    slope = np.cov(a, b, bias=True)[0, 1] / np.var(a)
    slope = max(slope, 0.0)
    return slope, np.mean(b) - slope * np.mean(a)


def grid_polish_oracle(a, b):
    lams = np.linspace(0, 5, 2001)
    losses = [np.mean((lam * a + (np.mean(b) - lam * np.mean(a)) - b) ** 2) for lam in lams]
    best = lams[int(np.argmin(losses))]
    lo, hi = max(best - 0.01, 0.0), best + 0.01
    for _ in range(200):  # ternary search on the convex 1-D profile
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        f = lambda lam: np.mean((lam * a + (np.mean(b) - lam * np.mean(a)) - b) ** 2)
        lo, hi = (m1, hi) if f(m1) > f(m2) else (lo, m2)
    lam = (lo + hi) / 2
    return lam, np.mean(b) - lam * np.mean(a)


def test_warm_start_against_oracles(rng):
    for _ in range(20):
        a = rng.normal(size=200)
        b = float(rng.normal()) * a + rng.normal(size=200) + float(rng.normal())
        lam, c = affine_fit_nonneg(a, b)
        lam_o, c_o = coordinate_projection_oracle(a, b)
        assert lam == pytest.approx(lam_o, abs=1e-9) and c == pytest.approx(c_o, abs=1e-9)
        lam_g, c_g = grid_polish_oracle(a, b)
        assert lam == pytest.approx(lam_g, abs=1e-6) and c == pytest.approx(c_g, abs=1e-6)


def test_config_steps():
    assert NpecConfig().steps == 244
    with pytest.raises(ValidationError):
        NpecConfig(batch_size=0)


SMALL = NpecConfig(batch_size=512, total_samples=512 * 150, warm_start_size=2048, eval_size=4096, n_seeds=2)


def test_approx_self_distance_small():
    mdp = gridworld.gridworld_mdp(3)
    dist = CoverageDistribution.uniform_state_actions(mdp)
    r = TabularReward(gridworld.reward_table(3, "dirt_path"))
    est = npec_approx_gradient(r, r, TabularSampler(dist), mdp.discount, SMALL)
    assert est.value < 1e-3


def test_approx_model_stays_in_class(rng):
    mdp = gridworld.gridworld_mdp(3)
    dist = CoverageDistribution.uniform_state_actions(mdp)
    a_table = gridworld.reward_table(3, "dirt_path")
    a, b = TabularReward(a_table), TabularReward(gridworld.reward_table(3, "cliff_walk"))
    upper, model = fit_npec_model(a, b, TabularSampler(dist), mdp.discount, SMALL, rng)
    phi = model.potential(np.eye(9))
    table = model.scale * a_table + model.offset + mdp.discount * phi[None, None, :] - phi[:, None, None]
    ok, _ = check_equivalent(a_table, table, mdp.discount, tol=1e-8)
    assert ok
    exact = npec_unnormalized_exact(a_table, b.table, dist, mdp.discount)[0]
    assert upper >= exact - 0.02  # upper bound, up to evaluation noise


def test_approx_matches_exact_on_gridworld():
    """Default hyperparameters on a 5x5 gridworld pair; tolerance 0.05."""
    mdp = gridworld.gridworld_mdp(5)
    dist = CoverageDistribution.uniform_state_actions(mdp)
    rewards = gridworld.all_rewards(5, mdp.discount)
    exact = npec_normalized(rewards["dirt_path"], rewards["cliff_walk"], dist, mdp.discount)
    est = npec_approx_gradient(
        TabularReward(rewards["dirt_path"]), TabularReward(rewards["cliff_walk"]), TabularSampler(dist), mdp.discount
    )
    assert abs(est.value - exact) < 0.05
    assert est.n_seeds == 3
