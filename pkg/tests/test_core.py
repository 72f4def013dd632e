import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reward_distance.core import (
    CoverageDistribution,
    EquivalenceTransform,
    TabularMdp,
    TabularReward,
    TabularSampler,
    apply_equivalence,
    check_equivalent,
    check_reward_table,
    evaluate_reward,
    shaping_basis,
    shaping_only,
)
from reward_distance.errors import DimensionError, NonFiniteRewardError, ValidationError
from reward_distance.mdp_io import load_mdp, mdp_from_dict, save_mdp


def two_state_mdp(discount=0.9):
    transition = np.array([[[0.5, 0.5], [1.0, 0.0]], [[0.0, 1.0], [0.3, 0.7]]])
    return TabularMdp(transition, np.array([1.0, 0.0]), discount)


def test_mdp_validates_rows_and_discount():
    mdp = two_state_mdp()
    assert mdp.n_states == 2 and mdp.n_actions == 2
    bad = mdp.transition.copy()
    bad[0, 0] = [0.6, 0.6]
    with pytest.raises(ValidationError):
        TabularMdp(bad, mdp.initial_dist, 0.9)
    with pytest.raises(ValidationError):
        TabularMdp(mdp.transition, mdp.initial_dist, 1.5)
    with pytest.raises(DimensionError):
        TabularMdp(mdp.transition[:, :, :1], mdp.initial_dist, 0.9)


def test_mdp_arrays_are_read_only():
    mdp = two_state_mdp()
    with pytest.raises(ValueError):
        mdp.transition[0, 0, 0] = 0.0


def test_reward_table_checks():
    mdp = two_state_mdp()
    with pytest.raises(DimensionError):
        check_reward_table(np.zeros((3, 2, 3)), mdp)
    with pytest.raises(ValidationError):
        check_reward_table(np.full((2, 2, 2), np.nan))


def test_evaluate_reward_reports_bad_index():
    def reward(s, a, s2):
        out = np.zeros(len(s))
        out[3] = np.inf
        return out

    idx = np.arange(5)
    with pytest.raises(NonFiniteRewardError) as info:
        evaluate_reward(reward, idx, idx, idx)
    assert info.value.index == 3
    with pytest.raises(DimensionError):
        evaluate_reward(lambda s, a, s2: np.zeros(2), idx, idx, idx)


def test_tabular_reward_wrapper(rng):
    table = rng.normal(size=(3, 2, 3))
    r = TabularReward(table)
    s, a, s2 = np.array([0, 2]), np.array([1, 0]), np.array([2, 2])
    np.testing.assert_array_equal(r(s, a, s2), table[s, a, s2])
    np.testing.assert_array_equal(r.state_features([1]), [[0.0, 1.0, 0.0]])


def test_coverage_constructors():
    mdp = two_state_mdp()
    cov = CoverageDistribution.uniform_state_actions(mdp)
    np.testing.assert_allclose(cov.joint.sum(axis=2), 0.25)
    np.testing.assert_allclose(cov.state_dist, [0.5, 0.5])
    uni = CoverageDistribution.uniform(2, 3)
    np.testing.assert_allclose(uni.joint, 1 / 12)
    prod = CoverageDistribution.product([0.2, 0.8], [1.0])
    assert prod.joint[0, 0, 1] == pytest.approx(0.16)
    joint = np.zeros((2, 1, 2))
    joint[0, 0, 1] = 1.0
    cov = CoverageDistribution.from_joint(joint)
    np.testing.assert_array_equal(cov.state_dist, [1.0, 0.0])


def test_tabular_sampler_frequencies():
    joint = np.array([[[0.1, 0.2]], [[0.3, 0.4]]])
    sampler = TabularSampler(CoverageDistribution.from_joint(joint))
    s, a, s2 = sampler.sample_transitions(200_000, np.random.default_rng(0))
    counts = np.zeros_like(joint)
    np.add.at(counts, (s, a, s2), 1)
    np.testing.assert_allclose(counts / counts.sum(), joint, atol=5e-3)


def test_apply_equivalence_matches_loops(rng):
    n_s, n_a, gamma = 4, 3, 0.8
    r = rng.normal(size=(n_s, n_a, n_s))
    phi = rng.normal(size=n_s)
    out = apply_equivalence(r, EquivalenceTransform(2.5, phi), gamma)
    for s in range(n_s):
        for a in range(n_a):
            for s2 in range(n_s):
                assert out[s, a, s2] == pytest.approx(2.5 * r[s, a, s2] + gamma * phi[s2] - phi[s])


def test_identity_transform_returns_copy(rng):
    r = rng.normal(size=(2, 1, 2))
    out = apply_equivalence(r, EquivalenceTransform(1.0, np.zeros(2)), 0.9)
    assert out is not r
    np.testing.assert_array_equal(out, r)


def test_transform_rejects_nonpositive_scale():
    with pytest.raises(ValidationError):
        EquivalenceTransform(0.0, np.zeros(2))


def test_shaping_basis_matches_shaping_only(rng):
    phi = rng.normal(size=5)
    basis = shaping_basis(5, 2, 0.7)
    np.testing.assert_allclose(basis @ phi, shaping_only(phi, 0.7, 2).reshape(-1))


def test_check_equivalent_recovers_transform(rng):
    r = rng.normal(size=(4, 2, 4))
    phi = rng.normal(size=4)
    b = apply_equivalence(r, EquivalenceTransform(3.0, phi), 0.9)
    ok, tf = check_equivalent(r, b, 0.9)
    assert ok
    assert tf.scale == pytest.approx(3.0)
    np.testing.assert_allclose(apply_equivalence(r, tf, 0.9), b, atol=1e-9)
    ok, tf = check_equivalent(r, -r, 0.9)
    assert not ok and tf is None


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0, 0.99), st.integers(0, 2**31 - 1)
)
def test_equivalence_composes(s1, s2, gamma, seed):
    rng = np.random.default_rng(seed)
    r = rng.normal(size=(3, 2, 3))
    p1, p2 = rng.normal(size=3), rng.normal(size=3)
    twice = apply_equivalence(apply_equivalence(r, EquivalenceTransform(s1, p1), gamma), EquivalenceTransform(s2, p2), gamma)
    once = apply_equivalence(r, EquivalenceTransform(s1 * s2, s2 * p1 + p2), gamma)
    np.testing.assert_allclose(twice, once, atol=1e-9)


def test_mdp_json_round_trip(tmp_path):
    mdp = two_state_mdp()
    rewards = {"r": np.arange(8, dtype=float).reshape(2, 2, 2)}
    cov = CoverageDistribution.uniform_state_actions(mdp)
    path = tmp_path / "mdp.json"
    save_mdp(path, mdp, rewards, cov)
    mdp2, rewards2, cov2 = load_mdp(path)
    np.testing.assert_array_equal(mdp2.transition, mdp.transition)
    np.testing.assert_array_equal(rewards2["r"], rewards["r"])
    np.testing.assert_array_equal(cov2.joint, cov.joint)


def test_mdp_json_errors(tmp_path):
    with pytest.raises(ValidationError):
        mdp_from_dict({"n_states": 2})
    doc = json.loads(json.dumps({
        "n_states": 3, "n_actions": 1, "discount": 0.9,
        "transition": [[[1.0, 0.0]], [[0.0, 1.0]]], "initial_dist": [1.0, 0.0],
    }))
    with pytest.raises(DimensionError):
        mdp_from_dict(doc)
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValidationError):
        load_mdp(path)
