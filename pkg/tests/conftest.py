import numpy as np
import pytest

from grassflow import lie
from grassflow.calculus import Grid
from grassflow.presets import gaussian_block, soliton_block


@pytest.fixture(scope="session")
def grid():
    return Grid(20.0, 256)


@pytest.fixture(scope="session")
def p21():
    return lie.OrbitParams(2, 1)


@pytest.fixture(scope="session")
def p31():
    return lie.OrbitParams(3, 1)


@pytest.fixture(scope="session")
def sech(grid):
    return 1 / np.cosh(grid.x)


@pytest.fixture(scope="session")
def soliton(grid, p21):
    return lie.offblock(soliton_block(grid, p21), p21)


def gaussian_u(grid, p, seed):
    return lie.offblock(gaussian_block(grid, p, seed), p)


def bump_xi(grid, p, rng):
    xi = lie.random_skew(p.n, rng)
    c = rng.uniform(-4, 4)
    return xi[None] * np.exp(-((grid.x - c) ** 2))[:, None, None]



def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in list(sys.modules.items())
                if name.endswith("test_acceptance") and hasattr(m, "RESULTS")), None)
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(mod.RESULTS):
            terminalreporter.write_line(mod.RESULTS[k])
