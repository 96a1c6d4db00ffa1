import logging

import pytest

from relbgk.analysis import epsilon_threshold, problem_constants
from relbgk.grid import build_momentum_grid, build_slab_grid
from relbgk.solver import SolveConfig, default_boundary, picard_solve


@pytest.fixture(autouse=True)
def _quiet_override_warning(caplog):
    caplog.set_level(logging.ERROR, logger="relbgk.solver")


@pytest.fixture(scope="session")
def boundary():
    return default_boundary()


@pytest.fixture(scope="session")
def slab():
    return build_slab_grid(65)


@pytest.fixture(scope="session")
def grid():
    return build_momentum_grid()


@pytest.fixture(scope="session")
def eps_result(boundary, slab, grid):
    return epsilon_threshold(boundary, slab, grid)


@pytest.fixture(scope="session")
def pc(boundary, slab, grid, eps_result):
    """Constants at half the admissible threshold."""
    from dataclasses import replace

    from relbgk.analysis import contraction_factor

    w = 0.5 * eps_result.eps
    c = problem_constants(boundary, w, slab, grid, with_eps=False)
    return replace(c, eps=eps_result.eps, kappa=contraction_factor(w, c))


@pytest.fixture(scope="session")
def default_solve(pc):
    return picard_solve(SolveConfig(), constants=pc)


@pytest.fixture(scope="session")
def override_solve():
    """A solve well past the admissible threshold where iteration does real work."""
    return picard_solve(SolveConfig(w=0.3, allow_beyond_eps=True))


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
