import numpy as np
import pytest

from ltvcommute.commute import PairConstants, synthesize_pair
from ltvcommute.system import LTVSystem, default_grid

A_COEFFS = ("1", "3+sin(t)", "3.25+0.25*sin(t)^2+1.5*sin(t)+0.5*cos(t)")

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def grid():
    return default_grid(0.0)


@pytest.fixture
def sys_a():
    return LTVSystem(*A_COEFFS, t0=0.0)


@pytest.fixture
def sys_b(sys_a):
    return synthesize_pair(sys_a, PairConstants(1, -2, 0))


@pytest.fixture
def sys_c(sys_b):
    return synthesize_pair(sys_b, PairConstants(1, 3, 3))


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
