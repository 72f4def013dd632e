"""Distances between reward functions that ignore potential shaping and rescaling."""

from importlib import metadata

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from reward_distance.canonical import canonicalize_exact, canonicalize_sampled
from reward_distance.core import (
    CoverageDistribution,
    EquivalenceTransform,
    TabularMdp,
    TabularReward,
    TabularSampler,
    apply_equivalence,
    check_equivalent,
)
from reward_distance.distances import (
    DistanceEstimate,
    Trajectory,
    ddsr_distance,
    direct_distance_lp,
    epic_exact,
    epic_sampled,
    erc_distance,
    pearson_distance,
)
from reward_distance.errors import DegenerateError, RewardDistanceError, ValidationError
from reward_distance.npec import NpecConfig, npec_approx_gradient, npec_normalized, npec_unnormalized_exact
from reward_distance.solver import regret_bound_check, value_iteration
from reward_distance.stats import BootstrapConfig, bootstrap_ci

__all__ = [
    "BootstrapConfig",
    "CoverageDistribution",
    "DegenerateError",
    "DistanceEstimate",
    "EquivalenceTransform",
    "NpecConfig",
    "RewardDistanceError",
    "TabularMdp",
    "TabularReward",
    "TabularSampler",
    "Trajectory",
    "ValidationError",
    "__version__",
    "apply_equivalence",
    "bootstrap_ci",
    "canonicalize_exact",
    "canonicalize_sampled",
    "check_equivalent",
    "ddsr_distance",
    "direct_distance_lp",
    "epic_exact",
    "epic_sampled",
    "erc_distance",
    "npec_approx_gradient",
    "npec_normalized",
    "npec_unnormalized_exact",
    "pearson_distance",
    "regret_bound_check",
    "value_iteration",
]
