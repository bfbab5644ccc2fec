import numpy as np
import pytest

from rolin.data import LabeledDataset
from rolin.solver import SolverConfig

LITERAL = SolverConfig(weight_penalty=0.0)


def gaussian_classes(n, p, seed, shift=1.0, scale=None):
    """Two Gaussian classes with means +-shift*e_1 (or a random direction) and optional per-feature scales."""
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    rng.shuffle(y)
    direction = rng.normal(size=p)
    direction /= np.linalg.norm(direction)
    X = rng.normal(size=(n, p)) + shift * y[:, None] * direction
    if scale is not None:
        X = X * scale
    return LabeledDataset(X, y)


@pytest.fixture
def small_data():
    return gaussian_classes(20, 10, seed=0)


@pytest.fixture
def literal_cfg():
    return LITERAL


_CRITERIA = []


@pytest.fixture
def criterion():
    """Call with (number, passed, detail); prints one line and fails the test if not passed."""

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _CRITERIA.append((number, line))
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
