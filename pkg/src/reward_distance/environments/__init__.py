"""Built-in environments: gridworld, point mass and random tabular MDPs."""

from reward_distance.environments.gridworld import GridworldSpec, build_gridworld
from reward_distance.environments.pointmass import PointMassConfig, RolloutSampler, pointmass_rollout
from reward_distance.environments.tabular import random_mdp

__all__ = [
    "GridworldSpec",
    "PointMassConfig",
    "RolloutSampler",
    "build_gridworld",
    "pointmass_rollout",
    "random_mdp",
]
