import numpy as np
import pytest

from reward_distance.errors import ValidationError
from reward_distance.mlp import Adam, TinyMlp
from reward_distance.suites import relative_gradient_error


def test_default_architecture():
    mlp = TinyMlp(3)
    assert mlp.sizes == (3, 32, 32, 1)
    assert [p.shape for p in mlp.params] == [(3, 32), (32,), (32, 32), (32,), (32, 1), (1,)]


def test_zero_output_initialization(rng):
    mlp = TinyMlp(4, rng=rng)
    np.testing.assert_array_equal(mlp(rng.normal(size=(10, 4))), np.zeros(10))


def test_xavier_bounds():
    mlp = TinyMlp(50, rng=np.random.default_rng(0), zero_output=False)
    limit = np.sqrt(6 / (50 + 32))
    assert np.abs(mlp.params[0]).max() <= limit
    assert np.abs(mlp.params[0]).max() > 0.9 * limit


def test_forward_is_deterministic(rng):
    mlp = TinyMlp(2, rng=rng, zero_output=False)
    x = rng.normal(size=(5, 2))
    np.testing.assert_array_equal(mlp(x), mlp(x))


def test_forward_matches_manual(rng):
    mlp = TinyMlp(2, hidden=(3,), rng=rng, zero_output=False)
    x = rng.normal(size=(4, 2))
    w1, b1, w2, b2 = mlp.params
    np.testing.assert_allclose(mlp(x), (np.tanh(x @ w1 + b1) @ w2 + b2)[:, 0])


def test_gradient_check(rng):
    for _ in range(10):
        mlp = TinyMlp(3, rng=rng, zero_output=False)
        x = rng.normal(size=(6, 3))
        assert relative_gradient_error(mlp, x, rng.normal(size=6)) < 1e-5


def test_flat_round_trip(rng):
    mlp = TinyMlp(2, rng=rng, zero_output=False)
    flat = mlp.get_flat()
    mlp.set_flat(flat * 2)
    np.testing.assert_array_equal(mlp.get_flat(), flat * 2)


def test_input_shape_checked():
    with pytest.raises(ValidationError):
        TinyMlp(3)(np.zeros((2, 4)))


def test_adam_first_step_is_lr_sized():
    p = [np.array([1.0, -2.0])]
    Adam(p, lr=0.1).step(p, [np.array([5.0, -0.01])])
    np.testing.assert_allclose(p[0], [0.9, -1.9], atol=1e-6)


def test_adam_minimizes_quadratic():
    p = [np.array([3.0, -4.0])]
    opt = Adam(p, lr=0.05)
    for _ in range(2000):
        opt.step(p, [2 * p[0]])
    np.testing.assert_allclose(p[0], 0.0, atol=1e-3)


def test_fits_small_regression():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, size=(256, 1))
    y = np.abs(x[:, 0])
    mlp = TinyMlp(1, rng=rng)
    opt = Adam(mlp.params, lr=1e-2)
    for _ in range(1500):
        out, cache = mlp.forward(x)
        opt.step(mlp.params, mlp.backward(cache, 2 * (out - y) / len(y)))
    assert np.mean((mlp(x) - y) ** 2) < 1e-3
