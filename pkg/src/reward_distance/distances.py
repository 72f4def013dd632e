"""Distances between reward functions: EPIC, DDSR, direct L^p and ERC."""

from __future__ import annotations

import dataclasses
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from reward_distance.canonical import canonicalize_exact, canonicalize_sampled, sample_mean_batch
from reward_distance.core import CoverageDistribution, check_reward_table, evaluate_reward
from reward_distance.errors import (
    DegenerateError,
    DimensionError,
    InsufficientDataError,
    ValidationError,
)
from reward_distance.stats import BootstrapConfig, bootstrap_ci

__all__ = [
    "DegenerateError",
    "DistanceEstimate",
    "Trajectory",
    "ddsr_distance",
    "direct_distance_lp",
    "discounted_returns",
    "epic_exact",
    "epic_sampled",
    "erc_distance",
    "erc_from_returns",
    "pearson_distance",
]

# A vector is treated as constant when its spread is below this fraction of its magnitude.
DEGENERATE_RTOL = 1e-12

Weights = Union[CoverageDistribution, np.ndarray, None]


@dataclasses.dataclass(frozen=True)
class DistanceEstimate:
    """A distance estimate with a bootstrap confidence interval.

    Attributes:
        value: Point estimate (mean over seeds, or the full-sample value for ERC).
        ci_lower: Lower confidence bound; never above `value`.
        ci_upper: Upper confidence bound; never below `value`.
        n_seeds: Number of successful seeds (1 for single-sample estimators).
        method: "epic", "npec", "erc", ...
        metadata: Sampling parameters and diagnostics.
        seed_values: Per-seed values, when the estimator runs several seeds.
    """

    value: float
    ci_lower: float
    ci_upper: float
    n_seeds: int
    method: str
    metadata: Dict = dataclasses.field(default_factory=dict)
    seed_values: tuple = ()

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "ci_lower": self.ci_lower,
            "ci_upper": self.ci_upper,
            "n_seeds": self.n_seeds,
            "method": self.method,
            "metadata": dict(self.metadata),
            "seed_values": list(self.seed_values),
        }


def estimate_from_seeds(
    values: Sequence[float], method: str, bootstrap: Optional[BootstrapConfig] = None, **metadata
) -> DistanceEstimate:
    """Aggregates per-seed values: mean point estimate, percentile bootstrap CI over seeds.

    Seeds that failed should be passed as NaN; at least two must succeed.
    """
    values = np.asarray(values, dtype=float)
    ok = values[np.isfinite(values)]
    if ok.size < 2:
        raise InsufficientDataError(f"{method}: need at least 2 successful seeds, got {ok.size}")
    value = float(ok.mean())
    lower, upper = bootstrap_ci(ok, config=bootstrap)
    metadata["failed_seeds"] = int(values.size - ok.size)
    return DistanceEstimate(
        value=value,
        ci_lower=min(lower, value),
        ci_upper=max(upper, value),
        n_seeds=int(ok.size),
        method=method,
        metadata=metadata,
        seed_values=tuple(float(v) for v in values),
    )


def _weights(weights: Weights, size: int) -> np.ndarray:
    if weights is None:
        return np.full(size, 1.0 / size)
    if isinstance(weights, CoverageDistribution):
        weights = weights.joint
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != size:
        raise DimensionError(f"weights have {w.size} entries, data has {size}")
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
        raise ValidationError("weights must be a probability vector")
    return w


def _standardize(x: np.ndarray, w: np.ndarray, p: float, name: str, scale: Optional[float]) -> np.ndarray:
    """Centres x under w and divides by its weighted L^p norm."""
    centred = x - np.dot(w, x)
    norm = np.dot(w, np.abs(centred) ** p) ** (1.0 / p)
    magnitude = np.max(np.abs(x)) if scale is None else scale
    if not norm > DEGENERATE_RTOL * magnitude:
        raise DegenerateError(f"{name} is constant under the weighting distribution", argument=name)
    return centred / norm


def _standardized_distance(x, y, w, p, scales=(None, None), names=("x", "y")) -> float:
    zx = _standardize(x, w, p, names[0], scales[0])
    zy = _standardize(y, w, p, names[1], scales[1])
    dist = 0.5 * np.dot(w, np.abs(zx - zy) ** p) ** (1.0 / p)
    return float(min(dist, 1.0))


def pearson_distance(x, y, weights: Weights = None) -> float:
    """Pearson distance sqrt((1 - rho) / 2), optionally under a probability weighting.

    Computed as half the weighted L2 distance between the standardized inputs,
    which equals sqrt((1 - rho) / 2) but keeps full precision near rho = 1.

    Raises:
        DegenerateError: one argument is constant under the weights;
            `.argument` is "x" or "y".
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise DimensionError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValidationError("need at least two values")
    w = _weights(weights, x.size)
    keep = w > 0
    return _standardized_distance(x[keep], y[keep], w[keep], 2.0)


def _support(dist: CoverageDistribution) -> np.ndarray:
    return dist.joint.reshape(-1) > 0


def _check_pair(a, b, dist: CoverageDistribution):
    a = check_reward_table(a, name="a")
    b = check_reward_table(b, name="b")
    if a.shape != b.shape or a.shape != dist.joint.shape:
        raise DimensionError(f"shapes differ: a {a.shape}, b {b.shape}, coverage {dist.joint.shape}")
    return a, b


def _canonical_standardized_distance(a, b, dist, discount, p) -> float:
    a, b = _check_pair(a, b, dist)
    ca = canonicalize_exact(a, dist, discount).reshape(-1)
    cb = canonicalize_exact(b, dist, discount).reshape(-1)
    keep = _support(dist)
    w = dist.joint.reshape(-1)[keep]
    scales = (np.max(np.abs(a)), np.max(np.abs(b)))
    return _standardized_distance(ca[keep], cb[keep], w, p, scales=scales, names=("a", "b"))


def epic_exact(a: np.ndarray, b: np.ndarray, dist: CoverageDistribution, discount: float) -> float:
    """EPIC distance between two reward tables, computed exactly.

    Both rewards are canonicalized with the marginals of `dist`, then compared
    by Pearson distance weighted by the joint of `dist`. Transitions outside
    the support of the joint do not contribute.

    Raises:
        DegenerateError: a canonical reward is constant on the support
            (e.g. the reward is zero or pure shaping).
    """
    return _canonical_standardized_distance(a, b, dist, discount, 2.0)


def ddsr_distance(
    a: np.ndarray, b: np.ndarray, dist: CoverageDistribution, discount: float, p: float = 2.0
) -> float:
    """Direct distance between standardized rewards.

    Each reward is canonicalized, centred under the joint of `dist` and scaled to
    unit L^p norm; the result is half the L^p distance between the two. The
    centring is a no-op when `dist` is the product D_S x D_A x D_S. With p = 2
    this coincides with `epic_exact`.
    """
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    return _canonical_standardized_distance(a, b, dist, discount, float(p))


def direct_distance_lp(a, b, dist: Weights = None, p: float = 2.0) -> float:
    """(E_D |a - b|^p)^(1/p); uniform weighting when `dist` is None."""
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    w = _weights(dist, a.size)
    delta = np.abs(a - b).reshape(-1)
    return float(np.dot(w, delta**p) ** (1.0 / p))


def _seed_sequences(seed: int, n: int) -> List[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


def epic_sampled(
    a: Callable,
    b: Callable,
    sampler,
    discount: float,
    n_v: int = 32768,
    n_m: int = 32768,
    n_seeds: int = 30,
    seed: int = 0,
    bootstrap: Optional[BootstrapConfig] = None,
) -> DistanceEstimate:
    """Sample-based EPIC over several independent seeds.

    Each seed draws N_V transitions from D and N_M (state, action) pairs from
    D_S x D_A, canonicalizes both rewards on the same batches and takes the
    unweighted Pearson distance. A seed whose canonical samples are constant is
    recorded as failed.

    Args:
        a, b: Batch reward evaluators.
        sampler: Object with `sample_transitions`, `sample_states`, `sample_actions`.
        discount: Discount factor.
        n_v, n_m: Batch sizes.
        n_seeds: Independent repetitions.
        seed: Root seed; per-repetition streams are spawned from it.
        bootstrap: CI configuration.

    Raises:
        InsufficientDataError: fewer than two seeds succeeded.
    """
    if n_v < 2 or n_m < 2:
        raise ValidationError("n_v and n_m must be at least 2")
    values = []
    errors = []
    for ss in _seed_sequences(seed, n_seeds):
        rng = np.random.default_rng(ss)
        transitions = sampler.sample_transitions(n_v, rng)
        mean_batch = sample_mean_batch(sampler, n_m, rng)
        ca = canonicalize_sampled(a, transitions, mean_batch, discount)
        cb = canonicalize_sampled(b, transitions, mean_batch, discount)
        try:
            values.append(pearson_distance(ca, cb))
        except DegenerateError as e:
            values.append(float("nan"))
            errors.append(str(e))
    metadata = dict(n_v=n_v, n_m=n_m, discount=discount, seed=seed)
    if errors:
        metadata["errors"] = errors
    return estimate_from_seeds(values, "epic", bootstrap, **metadata)


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """An episode: states s_0..s_T and actions a_0..a_{T-1}."""

    states: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states)
        actions = np.asarray(self.actions)
        if len(states) != len(actions) + 1:
            raise DimensionError(
                f"trajectory has {len(states)} states and {len(actions)} actions; need one more state"
            )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)

    def __len__(self) -> int:
        return len(self.actions)

    def discounted_return(self, reward: Callable, discount: float) -> float:
        """g(tau; R) = sum_t gamma^t R(s_t, a_t, s_{t+1})."""
        if len(self) == 0:
            return 0.0
        rewards = evaluate_reward(reward, self.states[:-1], self.actions, self.states[1:])
        return float(np.dot(discount ** np.arange(len(self)), rewards))


def discounted_returns(episodes: Sequence[Trajectory], reward: Callable, discount: float) -> np.ndarray:
    """Returns of every episode, evaluating the reward in one batch."""
    lengths = np.array([len(ep) for ep in episodes])
    if np.any(lengths == 0):
        raise ValidationError("episodes must contain at least one transition")
    states = np.concatenate([ep.states[:-1] for ep in episodes])
    actions = np.concatenate([ep.actions for ep in episodes])
    next_states = np.concatenate([ep.states[1:] for ep in episodes])
    rewards = evaluate_reward(reward, states, actions, next_states)
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    powers = np.concatenate([discount ** np.arange(n) for n in lengths])
    return np.add.reduceat(rewards * powers, starts)


def _pearson_or_nan(pairs: np.ndarray) -> float:
    try:
        return pearson_distance(pairs[:, 0], pairs[:, 1])
    except DegenerateError:
        return float("nan")


def erc_from_returns(
    returns_a, returns_b, bootstrap: Optional[BootstrapConfig] = None, **metadata
) -> DistanceEstimate:
    """ERC from precomputed episode returns, with an episode-level bootstrap CI.

    Raises:
        DegenerateError: the returns of one reward are constant; `.argument` is "a" or "b".
    """
    ga = np.asarray(returns_a, dtype=float)
    gb = np.asarray(returns_b, dtype=float)
    if ga.size < 2 or ga.shape != gb.shape:
        raise InsufficientDataError("ERC needs at least two episodes with returns for both rewards")
    try:
        value = pearson_distance(ga, gb)
    except DegenerateError as e:
        which = {"x": "a", "y": "b"}.get(e.argument, e.argument)
        raise DegenerateError(f"episode returns of reward {which} are constant", argument=which) from e
    lower, upper = bootstrap_ci(np.column_stack([ga, gb]), _pearson_or_nan, bootstrap)
    metadata["episodes"] = int(ga.size)
    return DistanceEstimate(
        value=value,
        ci_lower=min(lower, value),
        ci_upper=max(upper, value),
        n_seeds=1,
        method="erc",
        metadata=metadata,
    )


def erc_distance(
    a: Callable,
    b: Callable,
    episodes: Sequence[Trajectory],
    discount: float,
    bootstrap: Optional[BootstrapConfig] = None,
) -> DistanceEstimate:
    """Episode Return Correlation: Pearson distance between the episode returns of two rewards."""
    if len(episodes) < 2:
        raise InsufficientDataError("ERC needs at least two episodes")
    ga = discounted_returns(episodes, a, discount)
    gb = discounted_returns(episodes, b, discount)
    return erc_from_returns(ga, gb, bootstrap, discount=discount)
