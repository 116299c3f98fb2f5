from __future__ import annotations

import numpy as np
import pytest

from suzukifix.corpus import halving_map
from suzukifix.dp import Coupling, DPProblem
from suzukifix.gauge import Gauge

BUILTIN_GAUGES = [Gauge.identity(), Gauge.linear(2.0), Gauge.log(), Gauge.root()]


@pytest.fixture
def halving():
    return halving_map()


@pytest.fixture
def two_state():
    """2 states, 2 decisions, G(x, y, v) = 0.5 v."""
    reward = [[1.0, 0.0], [0.0, 2.0]]
    return DPProblem(reward, Coupling("affine", 0.5, np.zeros((2, 2))), [[0, 1], [1, 0]])


def random_affine(rng: np.random.Generator, beta: float, max_states: int = 6, max_decisions: int = 4) -> DPProblem:
    ns = int(rng.integers(1, max_states + 1))
    nd = int(rng.integers(1, max_decisions + 1))
    reward = rng.uniform(-1, 1, size=(ns, nd))
    c = rng.uniform(-0.5, 0.5, size=(ns, nd))
    transition = rng.integers(0, ns, size=(ns, nd))
    return DPProblem(reward, Coupling("affine", beta, c), transition)


# Acceptance results, one line per criterion, echoed in the terminal summary.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
