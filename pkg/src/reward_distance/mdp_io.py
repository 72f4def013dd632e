"""JSON file format for tabular MDPs and their named rewards.

Layout::

    {
      "n_states": 2, "n_actions": 1, "discount": 0.9,
      "transition": [[[1.0, 0.0]], [[0.0, 1.0]]],
      "initial_dist": [0.5, 0.5],
      "rewards": {"name": [[[0.0, 1.0]], [[0.0, 1.0]]]},
      "coverage": {"joint": ..., "state_dist": ..., "action_dist": ...}
    }

``coverage`` is optional; its marginals default to those of the joint.
"""

from __future__ import annotations

import json
import os
from typing import Dict, Optional, Tuple

import numpy as np

from reward_distance.core import CoverageDistribution, TabularMdp, check_reward_table
from reward_distance.errors import DimensionError, ValidationError


def mdp_from_dict(doc: dict) -> Tuple[TabularMdp, Dict[str, np.ndarray], Optional[CoverageDistribution]]:
    """Parses and validates a decoded JSON document."""
    for key in ("n_states", "n_actions", "discount", "transition", "initial_dist"):
        if key not in doc:
            raise ValidationError(f"MDP document is missing field {key!r}")
    try:
        mdp = TabularMdp(
            transition=np.asarray(doc["transition"], dtype=float),
            initial_dist=np.asarray(doc["initial_dist"], dtype=float),
            discount=float(doc["discount"]),
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(f"malformed MDP arrays: {e}") from e
    if (mdp.n_states, mdp.n_actions) != (doc["n_states"], doc["n_actions"]):
        raise DimensionError(
            f"declared ({doc['n_states']}, {doc['n_actions']}) but transition has "
            f"({mdp.n_states}, {mdp.n_actions})"
        )
    rewards = {
        name: check_reward_table(values, mdp, name=name)
        for name, values in doc.get("rewards", {}).items()
    }
    coverage = None
    if "coverage" in doc:
        cov = doc["coverage"]
        coverage = CoverageDistribution.from_joint(
            cov["joint"], cov.get("state_dist"), cov.get("action_dist")
        )
        if coverage.joint.shape != mdp.reward_shape:
            raise DimensionError("coverage joint does not match MDP shape")
    return mdp, rewards, coverage


def load_mdp(path: str | os.PathLike):
    """Reads an MDP file. Returns (mdp, rewards, coverage-or-None)."""
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: not valid JSON ({e})") from e
    return mdp_from_dict(doc)


def mdp_to_dict(
    mdp: TabularMdp,
    rewards: Dict[str, np.ndarray],
    coverage: Optional[CoverageDistribution] = None,
) -> dict:
    doc = {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "discount": mdp.discount,
        "transition": mdp.transition.tolist(),
        "initial_dist": mdp.initial_dist.tolist(),
        "rewards": {name: np.asarray(r, dtype=float).tolist() for name, r in rewards.items()},
    }
    if coverage is not None:
        doc["coverage"] = {
            "joint": coverage.joint.tolist(),
            "state_dist": coverage.state_dist.tolist(),
            "action_dist": coverage.action_dist.tolist(),
        }
    return doc


def save_mdp(path, mdp, rewards, coverage=None) -> None:
    with open(path, "w") as f:
        json.dump(mdp_to_dict(mdp, rewards, coverage), f, indent=1)
