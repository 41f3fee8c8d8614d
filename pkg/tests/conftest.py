import numpy as np
import pytest

from semigroup_lab import kernels
from semigroup_lab.measure_core import GridSpec, Measure
from semigroup_lab.perturbation import PotentialPerturbation


@pytest.fixture(scope="session")
def grid():
    return GridSpec()


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec(20.0, 2049)


@pytest.fixture(scope="session")
def delta0(grid):
    return Measure.dirac(grid)


@pytest.fixture(scope="session")
def gauss1(grid):
    return kernels.gaussian_measure(grid, 1.0)


@pytest.fixture(scope="session")
def psi():
    return PotentialPerturbation.exp_decay()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
