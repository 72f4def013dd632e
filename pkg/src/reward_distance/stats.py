"""Percentile bootstrap confidence intervals."""

from __future__ import annotations

import dataclasses
from typing import Callable, Optional, Tuple

import numpy as np

from reward_distance.errors import InsufficientDataError, ValidationError

_CHUNK_ELEMENTS = 1 << 22


@dataclasses.dataclass(frozen=True)
class BootstrapConfig:
    n_resamples: int = 10_000
    level: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValidationError(f"confidence level must be in (0, 1), got {self.level}")
        if self.n_resamples < 1:
            raise ValidationError("n_resamples must be at least 1")


def bootstrap_ci(
    samples,
    statistic: Optional[Callable[[np.ndarray], float]] = None,
    config: Optional[BootstrapConfig] = None,
) -> Tuple[float, float]:
    """Percentile bootstrap interval for `statistic` of `samples`.

    Rows of `samples` (axis 0) are resampled with replacement. With no
    `statistic` the mean is used and resampling is fully vectorized. A custom
    statistic may return NaN for a degenerate resample; such resamples are
    discarded.

    Args:
        samples: Array with at least two rows.
        statistic: Function of a resampled array, or None for the mean.
        config: Resample count, confidence level and seed.

    Returns:
        (lower, upper) with lower <= upper.

    Raises:
        InsufficientDataError: fewer than two samples, or every resample was degenerate.
    """
    config = config or BootstrapConfig()
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    if n < 2:
        raise InsufficientDataError(f"bootstrap needs at least 2 samples, got {n}")
    alpha = 1.0 - config.level
    quantiles = [100 * alpha / 2, 100 * (1 - alpha / 2)]
    rng = np.random.default_rng(config.seed)
    if statistic is None and samples.ndim == 1 and np.all(samples == samples[0]):
        return float(samples[0]), float(samples[0])

    stats = np.empty(config.n_resamples)
    per_chunk = max(1, _CHUNK_ELEMENTS // n)
    for start in range(0, config.n_resamples, per_chunk):
        stop = min(start + per_chunk, config.n_resamples)
        idx = rng.integers(0, n, size=(stop - start, n))
        if statistic is None:
            stats[start:stop] = samples[idx].mean(axis=1)
        else:
            stats[start:stop] = [statistic(samples[row]) for row in idx]
    stats = stats[np.isfinite(stats)]
    if stats.size == 0:
        raise InsufficientDataError("every bootstrap resample was degenerate")
    lower, upper = np.percentile(stats, quantiles)
    return float(lower), float(upper)
