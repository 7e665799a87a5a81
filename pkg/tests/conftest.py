from __future__ import annotations

import pytest

from reflectedwalk.step_dist import from_table, lazy_walk, skew_walk


@pytest.fixture(scope="session")
def lazy():
    return lazy_walk()


@pytest.fixture(scope="session")
def skew():
    return skew_walk()


@pytest.fixture(scope="session")
def wide():
    # centered asymmetric walk with down-jumps up to 3 (exercises C = 3)
    return from_table([(-3, 0.1), (-1, 0.2), (0, 0.3), (1, 0.3), (2, 0.1)])
