import numpy as np
import pytest

from reward_distance.environments.tabular import random_coverage

# (criterion number, short title, passed, detail) recorded by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_LINES):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} [{status}] {title}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_instance(rng, max_states=6, max_actions=3, discount=None):
    """Random (reward, coverage, discount) for a small tabular problem."""
    n_s = int(rng.integers(2, max_states + 1))
    n_a = int(rng.integers(1, max_actions + 1))
    dist = random_coverage(n_s, n_a, rng)
    gamma = float(rng.uniform(0, 1)) if discount is None else discount
    reward = rng.uniform(-1, 1, size=(n_s, n_a, n_s))
    return reward, dist, gamma
