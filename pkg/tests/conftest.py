import numpy as np
import pytest

from phantomlab.densities import Pareto
from phantomlab.models import FiniteModel, pareto_metropolis


@pytest.fixture
def pareto1():
    return Pareto(1.0)


@pytest.fixture
def metropolis():
    return pareto_metropolis(alpha=1.0, sigma=1.0)


@pytest.fixture
def coin_chain():
    """Two states, fair coin transitions, values 0 and 1."""
    return FiniteModel([[0.5, 0.5], [0.5, 0.5]], [0.0, 1.0])


def random_stochastic(rng, m, zeros=0.3):
    P = rng.random((m, m))
    P[rng.random((m, m)) < zeros] = 0.0
    P[np.arange(m), (np.arange(m) + 1) % m] += 0.05  # keep it irreducible
    P[:, 0] += 0.01  # and aperiodic
    return P / P.sum(axis=1, keepdims=True)


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
