"""Nearest Point in Equivalence Class (NPEC).

D^U(R_A, R_B) is the smallest D-weighted L^p distance from any reward
equivalent to R_A, that is ``lam * R_A + c + gamma * Phi(s') - Phi(s)`` with
``lam > 0``, to R_B. NPEC divides it by D^U(0, R_B), the distance of R_B from
the class of pure shaping, and is 0 when that denominator vanishes.

Two solvers are provided. `npec_unnormalized_exact` solves the tabular problem
globally (weighted least squares for p = 2, a linear program for p = 1).
`npec_approx_gradient` fits the scale, offset and a neural potential by Adam
on sampled transitions, which only gives an upper bound.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from reward_distance.core import CoverageDistribution, check_reward_table, evaluate_reward
from reward_distance.distances import DEGENERATE_RTOL, DistanceEstimate, _seed_sequences, estimate_from_seeds
from reward_distance.errors import ConvergenceError, DimensionError, ValidationError
from reward_distance.mlp import DEFAULT_HIDDEN, Adam, TinyMlp
from reward_distance.stats import BootstrapConfig

# Scale used when the best affine fit has lam = 0 and log(lam) is undefined.
WARM_START_EPS = 1e-6
EXACT_P = (1.0, 2.0)


@dataclasses.dataclass
class NpecModel:
    """Parameters of a reward ``exp(log_scale) * R_A + offset + gamma * Phi(s') - Phi(s)``.

    Attributes:
        log_scale: nu. The exact solver reports -inf when the infimum sits at lam = 0.
        offset: c.
        potential: A state-indexed table or a `TinyMlp` over state features.
        discount: gamma.
    """

    log_scale: float
    offset: float
    potential: Union[np.ndarray, TinyMlp]
    discount: float

    @property
    def scale(self) -> float:
        return float(np.exp(self.log_scale))

    def potential_values(self, features: np.ndarray) -> np.ndarray:
        if isinstance(self.potential, TinyMlp):
            return self.potential(features)
        return np.asarray(self.potential)[np.asarray(features, dtype=np.intp)]

    def modeled(self, a_values, s_features, s2_features) -> np.ndarray:
        """Modeled reward on a batch, given R_A's values and the potential inputs."""
        phi_s = self.potential_values(s_features)
        phi_s2 = self.potential_values(s2_features)
        return self.scale * np.asarray(a_values) + self.offset + self.discount * phi_s2 - phi_s

    def table(self, a: np.ndarray) -> np.ndarray:
        """Modeled reward table for a tabular R_A and a table potential."""
        phi = np.asarray(self.potential, dtype=float)
        return self.scale * a + self.offset + self.discount * phi[None, None, :] - phi[:, None, None]


def _lp_norm(residual: np.ndarray, w: np.ndarray, p: float) -> float:
    return float(np.dot(w, np.abs(residual) ** p) ** (1.0 / p))


def _check_p(p: float) -> float:
    p = float(p)
    if p not in EXACT_P:
        raise ValidationError(f"the exact NPEC solver supports p in {EXACT_P}, got {p}")
    return p


def _design(a: np.ndarray, dist: CoverageDistribution, discount: float):
    """Columns (lam, [c], Phi[1:]) evaluated on the support of D.

    Phi[0] is pinned to 0: a constant potential only adds (gamma - 1) * const,
    which the offset already covers. When gamma = 1 the offset is not part of
    the equivalence class, so it is left out.
    """
    n_s, _, _ = a.shape
    support = np.flatnonzero(dist.joint.reshape(-1) > 0)
    w = dist.joint.reshape(-1)[support]
    s, _, s2 = np.unravel_index(support, a.shape)
    cols = [a.reshape(-1)[support]]
    has_offset = discount < 1
    if has_offset:
        cols.append(np.ones(support.size))
    rows = np.arange(support.size)
    shaping = np.zeros((support.size, n_s))
    np.add.at(shaping, (rows, s2), discount)
    np.add.at(shaping, (rows, s), -1.0)
    x = np.column_stack(cols + [shaping[:, 1:]])
    return x, w, support, has_offset


def _solve_l2(x, target, w):
    sw = np.sqrt(w)
    theta = np.linalg.lstsq(x * sw[:, None], target * sw, rcond=None)[0]
    if theta[0] < 0:
        # Single bound: the constrained optimum of a convex quadratic lies on lam = 0.
        rest = np.linalg.lstsq(x[:, 1:] * sw[:, None], target * sw, rcond=None)[0]
        theta = np.concatenate([[0.0], rest])
    return theta


def _solve_l1(x, target, w):
    m, k = x.shape
    cost = np.concatenate([np.zeros(k), w])
    eye = np.eye(m)
    a_ub = np.block([[x, -eye], [-x, -eye]])
    b_ub = np.concatenate([target, -target])
    bounds = [(0, None)] + [(None, None)] * (k - 1) + [(0, None)] * m
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise ConvergenceError(f"NPEC linear program failed: {res.message}")
    return res.x[:k]


def npec_unnormalized_exact(
    a: np.ndarray, b: np.ndarray, dist: CoverageDistribution, discount: float, p: float = 2
) -> Tuple[float, NpecModel]:
    """Exact D^U(R_A, R_B) on a tabular MDP.

    The open constraint lam > 0 is relaxed to lam >= 0, which leaves the infimum
    unchanged by continuity. For p = 2 this is weighted least squares with one
    bound, handled by an active-set step; for p = 1 it is a linear program.

    Args:
        a: Reward table (S, A, S) whose equivalence class is searched.
        b: Target reward table.
        dist: Coverage distribution D.
        discount: gamma.
        p: 1 or 2.

    Returns:
        The distance and the minimizing model.
    """
    p = _check_p(p)
    a = check_reward_table(a, name="a")
    b = check_reward_table(b, name="b")
    if a.shape != b.shape or a.shape != dist.joint.shape:
        raise DimensionError(f"shape mismatch: a {a.shape}, b {b.shape}, D {dist.joint.shape}")
    x, w, support, has_offset = _design(a, dist, discount)
    target = b.reshape(-1)[support]
    theta = _solve_l2(x, target, w) if p == 2 else _solve_l1(x, target, w)
    lam = max(float(theta[0]), 0.0)
    theta[0] = lam
    value = _lp_norm(x @ theta - target, w, p)
    offset = float(theta[1]) if has_offset else 0.0
    potential = np.concatenate([[0.0], theta[2 if has_offset else 1 :]])
    log_scale = float(np.log(lam)) if lam > 0 else -np.inf
    return value, NpecModel(log_scale, offset, potential, discount)


def _quotient(numerator: float, denominator: float, scale: float) -> float:
    if not denominator > DEGENERATE_RTOL * scale:
        return 0.0
    return numerator / denominator


def npec_normalized(
    a: np.ndarray, b: np.ndarray, dist: CoverageDistribution, discount: float, p: float = 2
) -> float:
    """NPEC(R_A, R_B) = D^U(R_A, R_B) / D^U(0, R_B), or 0 when R_B is pure shaping."""
    b = check_reward_table(b, name="b")
    numerator, _ = npec_unnormalized_exact(a, b, dist, discount, p)
    denominator, _ = npec_unnormalized_exact(np.zeros_like(b), b, dist, discount, p)
    return _quotient(numerator, denominator, float(np.max(np.abs(b))))


def affine_fit_nonneg(a_values, b_values, weights=None) -> Tuple[float, float]:
    """argmin over lam >= 0 and c of E_w[(lam * a + c - b)^2]."""
    a_values = np.asarray(a_values, dtype=float).reshape(-1)
    b_values = np.asarray(b_values, dtype=float).reshape(-1)
    if a_values.size == 0 or a_values.size != b_values.size:
        raise ValidationError("affine fit needs two nonempty batches of equal length")
    w = np.full(a_values.size, 1.0 / a_values.size) if weights is None else np.asarray(weights, dtype=float)
    x = np.column_stack([a_values, np.ones_like(a_values)])
    lam, c = _solve_l2(x, b_values, w)
    return float(lam), float(c)


def npec_warm_start(a_values, b_values) -> Tuple[float, float]:
    """Initial (nu, c) for gradient descent from the nonnegative affine fit of R_A to R_B.

    Args:
        a_values: R_A evaluated on a sample batch.
        b_values: R_B on the same batch.

    Returns:
        (log lam*, c*), with log(1e-6) standing in for log 0.
    """
    lam, c = affine_fit_nonneg(a_values, b_values)
    return float(np.log(lam if lam > 0 else WARM_START_EPS)), c


@dataclasses.dataclass(frozen=True)
class NpecConfig:
    """Hyperparameters of the gradient-descent approximation.

    ``total_samples // batch_size`` Adam steps are taken (244 by default).
    """

    batch_size: int = 4096
    total_samples: int = 1_000_000
    learning_rate: float = 1e-2
    warm_start_size: int = 16386
    eval_size: int = 32768
    hidden: Tuple[int, ...] = DEFAULT_HIDDEN
    p: float = 2.0
    n_seeds: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.total_samples < self.batch_size:
            raise ValidationError("need batch_size >= 1 and total_samples >= batch_size")
        if self.warm_start_size < 2 or self.eval_size < 1:
            raise ValidationError("warm_start_size must be >= 2 and eval_size >= 1")
        if self.p < 1:
            raise ValidationError("p must be at least 1")

    @property
    def steps(self) -> int:
        return self.total_samples // self.batch_size


def _feature_fn(*rewards) -> Callable:
    for r in rewards:
        if r is not None and hasattr(r, "state_features"):
            return r.state_features
    return lambda states: np.asarray(states, dtype=float).reshape(len(states), -1)


def _evaluate(reward, batch) -> np.ndarray:
    if reward is None:
        return np.zeros(len(batch[0]))
    return evaluate_reward(reward, *batch)


def fit_npec_model(
    a: Optional[Callable],
    b: Callable,
    sampler,
    discount: float,
    config: NpecConfig,
    rng: np.random.Generator,
) -> Tuple[float, NpecModel]:
    """Trains one model of R_A's class towards R_B and returns its held-out L^p distance.

    ``a=None`` stands for the zero reward (the NPEC denominator). Raises
    ConvergenceError if the loss becomes non-finite.
    """
    features = _feature_fn(a, b)
    p = config.p
    warm = sampler.sample_transitions(config.warm_start_size, rng)
    nu0, c0 = npec_warm_start(_evaluate(a, warm), _evaluate(b, warm))
    n_features = features(warm[0][:1]).shape[1]
    mlp = TinyMlp(n_features, config.hidden, rng)
    nu, c = np.array([nu0]), np.array([c0])
    params = [nu, c] + mlp.params
    opt = Adam(params, lr=config.learning_rate)
    for _ in range(config.steps):
        s, act, s2 = sampler.sample_transitions(config.batch_size, rng)
        va, vb = _evaluate(a, (s, act, s2)), _evaluate(b, (s, act, s2))
        phi_s, cache_s = mlp.forward(features(s))
        phi_s2, cache_s2 = mlp.forward(features(s2))
        scale = np.exp(nu[0])
        resid = scale * va + c[0] + discount * phi_s2 - phi_s - vb
        if not np.all(np.isfinite(resid)):
            raise ConvergenceError("NPEC loss became non-finite")
        g = p * np.abs(resid) ** (p - 1) * np.sign(resid) / resid.size
        g_nu = np.array([0.0 if a is None else np.dot(g, va) * scale])
        g_c = np.array([g.sum()])
        g_s2 = mlp.backward(cache_s2, discount * g)
        g_s = mlp.backward(cache_s, -g)
        opt.step(params, [g_nu, g_c] + [x + y for x, y in zip(g_s2, g_s)])
    model = NpecModel(float(nu[0]), float(c[0]), mlp, discount)
    s, act, s2 = sampler.sample_transitions(config.eval_size, rng)
    va, vb = _evaluate(a, (s, act, s2)), _evaluate(b, (s, act, s2))
    resid = model.modeled(va, features(s), features(s2)) - vb
    if not np.all(np.isfinite(resid)):
        raise ConvergenceError("NPEC model produced non-finite rewards")
    return float(np.mean(np.abs(resid) ** p) ** (1.0 / p)), model


def npec_approx_gradient(
    a: Callable,
    b: Callable,
    sampler,
    discount: float,
    config: Optional[NpecConfig] = None,
    bootstrap: Optional[BootstrapConfig] = None,
) -> DistanceEstimate:
    """Approximate NPEC from samples of D.

    Each seed fits the numerator D^U(R_A, R_B) and the denominator D^U(0, R_B)
    separately and records their quotient. Both are upper bounds on the true
    values, so the quotient can err in either direction. A seed whose training
    diverges is recorded as failed.
    """
    config = config or NpecConfig()
    values, numerators, denominators, errors = [], [], [], []
    for ss in _seed_sequences(config.seed, config.n_seeds):
        rng = np.random.default_rng(ss)
        try:
            num, _ = fit_npec_model(a, b, sampler, discount, config, rng)
            den, _ = fit_npec_model(None, b, sampler, discount, config, rng)
        except ConvergenceError as e:
            values.append(float("nan"))
            errors.append(str(e))
            continue
        probe = sampler.sample_transitions(config.eval_size, rng)
        scale = float(np.max(np.abs(_evaluate(b, probe))))
        numerators.append(num)
        denominators.append(den)
        values.append(_quotient(num, den, scale))
    metadata = dict(
        p=config.p,
        steps=config.steps,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        warm_start_size=config.warm_start_size,
        seed=config.seed,
        discount=discount,
        numerators=numerators,
        denominators=denominators,
    )
    if errors:
        metadata["errors"] = errors
    return estimate_from_seeds(values, "npec", bootstrap, **metadata)
