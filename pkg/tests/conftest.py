import numpy as np
import pytest

from varfrac.domain import Interval, build_grid_around
from varfrac.exponent import constant_exponent, sine_exponent
from varfrac.kernel import singular_kernel


@pytest.fixture(scope="session")
def grid1d():
    """Omega = (-1, 1) inside [-3, 3], 64 cells."""
    return build_grid_around(Interval(-1.0, 1.0), n=64)


@pytest.fixture(scope="session")
def small_grid():
    return build_grid_around(Interval(-1.0, 1.0), n=24)


@pytest.fixture(scope="session")
def sine_p(grid1d):
    return sine_exponent(0.3, grid1d)


@pytest.fixture(scope="session")
def sine_K(sine_p):
    return singular_kernel(sine_p)


@pytest.fixture(scope="session")
def p2(grid1d):
    return constant_exponent(2.0, 0.4, grid1d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if config._acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in config._acceptance_lines:
            terminalreporter.write_line(line)
