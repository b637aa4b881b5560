import random
from fractions import Fraction

import numpy as np
import pytest

from knnbanzhaf.model import Dataset, game_from_weights

A1_WEIGHTS = (3, -2, 1, -1)
A1_VALUES = (Fraction(7, 8), Fraction(-1, 8), Fraction(1, 8), Fraction(-1, 8))
A2_WEIGHTS = (1, -1, 1, -1)


@pytest.fixture
def a1_game():
    """Four points at distances 1..4, k=2, signed weights (+3, -2, +1, -1)."""
    return game_from_weights(A1_WEIGHTS, 2)


@pytest.fixture
def a2_game():
    """The same four points with unit weights, W = k + 1."""
    return game_from_weights(A2_WEIGHTS, 2, W=3)


@pytest.fixture
def a1_dataset():
    """1-D data whose inverse-distance weights discretize (2 bits) to (3, 2, 1, 1)."""
    train = Dataset(np.array([[1.0], [-1.5], [3.0], [-3.2]]), np.array([1, 0, 1, 0]), 2)
    test = Dataset(np.array([[0.0]]), np.array([1]), 2)
    return train, test


def random_weighted_game(rng: random.Random, n_range=(1, 12), k_range=(1, 5), max_mag=8):
    """Random game with non-increasing magnitudes and both labels present when n >= 2."""
    n = rng.randint(*n_range)
    k = rng.randint(*k_range)
    mags = sorted((rng.randint(1, max_mag) for _ in range(n)), reverse=True)
    signs = [rng.choice((1, -1)) for _ in range(n)]
    if n >= 2 and len(set(signs)) == 1:
        signs[rng.randrange(n)] *= -1
    return game_from_weights([m * s for m, s in zip(mags, signs)], k)


def random_unit_game(rng: random.Random, n_range=(1, 14), k_range=(1, 6)):
    n = rng.randint(*n_range)
    k = rng.randint(*k_range)
    return game_from_weights([rng.choice((1, -1)) for _ in range(n)], k, W=k + 1)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion and return the verdict."""

    def record(label: str, ok: bool, detail: str = "") -> bool:
        line = f"{label} {'PASS' if ok else 'FAIL'}" + (f": {detail}" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
