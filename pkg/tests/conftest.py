import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nqac.ising import antiferromagnetic_complete, random_complete_instance  # noqa: E402


@pytest.fixture
def k4():
    return antiferromagnetic_complete(4)


@pytest.fixture
def k8():
    return random_complete_instance(8, 11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def as_dicts(problem):
    h = {i: v for i, v in problem.fields}
    J = {(i, j): v for i, j, v in problem.edges}
    return h, J


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
