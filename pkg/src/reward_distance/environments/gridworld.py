"""Square gridworld with the hand-designed reward family used to illustrate EPIC.

Cells are indexed ``row * side + col`` with row 0 at the top. Actions are
left, right, up, down and stay; moves off the grid leave the agent in place.
Under slippery dynamics a move goes to one of the two perpendicular
directions with total probability ``p_slip``; staying never slips.

Rewards depend only on the cell being entered (or stayed in), R(s, a, s') = r(s'):

* ``sparse_goal``: +1 in the goal cell (middle row, right column).
* ``dense_goal``: ``sparse_goal`` rescaled by 2 and shaped by the negative
  Manhattan distance to the goal, so it is equivalent by construction.
* ``dirt_path``: ``sparse_goal`` plus -1 on every top-row and bottom-row
  cell; the middle row is a clear path.
* ``cliff_walk``: as ``dirt_path`` but the bottom row is a -4 cliff.
* ``sparse_penalty``: ``sparse_goal`` with a -0.1 cost on every move action
  (the only member depending on the action).
* ``zero``: all zero.

With deterministic moves the optimal policies of ``dirt_path`` and
``cliff_walk`` coincide: head for the middle row, then walk right. With the
default slip probability, ``cliff_walk`` instead keeps to the top row from the
top-left cells, paying -1 per step rather than risk slipping towards the cliff.
"""

from __future__ import annotations

import dataclasses
from typing import Dict, Tuple

import numpy as np

from reward_distance.core import EquivalenceTransform, TabularMdp, apply_equivalence
from reward_distance.errors import ValidationError

ACTIONS = ("left", "right", "up", "down", "stay")
_MOVES = {0: (0, -1), 1: (0, 1), 2: (-1, 0), 3: (1, 0), 4: (0, 0)}
_PERPENDICULAR = {0: (2, 3), 1: (2, 3), 2: (0, 1), 3: (0, 1)}

REWARD_NAMES = ("sparse_goal", "dense_goal", "dirt_path", "cliff_walk", "sparse_penalty", "zero")

DEFAULT_P_SLIP = 0.3
DENSE_SCALE = 2.0
CLIFF_PENALTY = -4.0
DIRT_PENALTY = -1.0
MOVE_COST = -0.1


@dataclasses.dataclass(frozen=True)
class GridworldSpec:
    side: int = 3
    reward: str = "sparse_goal"
    slippery: bool = False
    p_slip: float = DEFAULT_P_SLIP
    discount: float = 0.99

    def __post_init__(self):
        if self.side < 2:
            raise ValidationError("gridworld side must be at least 2")
        if self.reward not in REWARD_NAMES:
            raise ValidationError(f"unknown gridworld reward {self.reward!r}; choose from {REWARD_NAMES}")
        if not 0 <= self.p_slip <= 1:
            raise ValidationError("p_slip must be in [0, 1]")


def _step(side: int, cell: int, action: int) -> int:
    row, col = divmod(cell, side)
    dr, dc = _MOVES[action]
    r, c = row + dr, col + dc
    if 0 <= r < side and 0 <= c < side:
        return r * side + c
    return cell


def transition_tensor(side: int, p_slip: float = 0.0) -> np.ndarray:
    n = side * side
    transition = np.zeros((n, len(ACTIONS), n))
    for s in range(n):
        for a in range(len(ACTIONS)):
            if a == 4 or p_slip == 0:
                transition[s, a, _step(side, s, a)] += 1.0
                continue
            transition[s, a, _step(side, s, a)] += 1.0 - p_slip
            for perp in _PERPENDICULAR[a]:
                transition[s, a, _step(side, s, perp)] += p_slip / 2
    return transition


def goal_cell(side: int) -> int:
    return (side // 2) * side + side - 1


def goal_distance(side: int) -> np.ndarray:
    """Manhattan distance of every cell to the goal."""
    rows, cols = np.divmod(np.arange(side * side), side)
    g_row, g_col = divmod(goal_cell(side), side)
    return np.abs(rows - g_row) + np.abs(cols - g_col)


def _from_cell_values(cell_reward: np.ndarray) -> np.ndarray:
    n = cell_reward.size
    return np.broadcast_to(cell_reward[np.newaxis, np.newaxis, :], (n, len(ACTIONS), n)).copy()


def _penalties(side: int, bottom: float) -> np.ndarray:
    cells = np.zeros(side * side)
    cells[goal_cell(side)] = 1.0
    mid = side // 2
    rows = np.arange(side * side) // side
    cells[rows < mid] = DIRT_PENALTY
    cells[rows > mid] = bottom
    return cells


def reward_table(side: int, name: str, discount: float = 0.99) -> np.ndarray:
    """Reward table (S, A, S) of a named member of the family."""
    n = side * side
    sparse = np.zeros(n)
    sparse[goal_cell(side)] = 1.0
    if name == "sparse_goal":
        return _from_cell_values(sparse)
    if name == "dense_goal":
        tf = EquivalenceTransform(DENSE_SCALE, -goal_distance(side).astype(float))
        return apply_equivalence(_from_cell_values(sparse), tf, discount)
    if name == "dirt_path":
        return _from_cell_values(_penalties(side, DIRT_PENALTY))
    if name == "cliff_walk":
        return _from_cell_values(_penalties(side, CLIFF_PENALTY))
    if name == "sparse_penalty":
        table = _from_cell_values(sparse)
        table[:, :4, :] += MOVE_COST
        return table
    if name == "zero":
        return np.zeros((n, len(ACTIONS), n))
    raise ValidationError(f"unknown gridworld reward {name!r}; choose from {REWARD_NAMES}")


def gridworld_mdp(side: int = 3, slippery: bool = False, p_slip: float = DEFAULT_P_SLIP, discount: float = 0.99) -> TabularMdp:
    """Gridworld dynamics; episodes start in the left cell of the middle row."""
    initial = np.zeros(side * side)
    initial[(side // 2) * side] = 1.0
    return TabularMdp(transition_tensor(side, p_slip if slippery else 0.0), initial, discount)


def build_gridworld(spec: GridworldSpec) -> Tuple[TabularMdp, np.ndarray]:
    mdp = gridworld_mdp(spec.side, spec.slippery, spec.p_slip, spec.discount)
    return mdp, reward_table(spec.side, spec.reward, spec.discount)


def all_rewards(side: int = 3, discount: float = 0.99) -> Dict[str, np.ndarray]:
    return {name: reward_table(side, name, discount) for name in REWARD_NAMES}
