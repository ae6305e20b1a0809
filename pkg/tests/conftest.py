import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spacemarch.edge import EdgeProblem
from spacemarch.kernels import SpaceGrid, TimeGrid

settings.register_profile(
    "repo", deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def gaussian_problem(I, N, T=2.0, L=2.0):
    space, time = SpaceGrid.uniform(L, I), TimeGrid(T, N)
    exact = lambda x, t: np.exp(-40.0 * (x - t + 1.0) ** 2)  # noqa: E731
    return EdgeProblem(space, time, 1.0, 1.0, exact(0.0, time.times), exact(space.nodes, 0.0)), exact


@pytest.fixture
def smooth():
    return gaussian_problem


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
