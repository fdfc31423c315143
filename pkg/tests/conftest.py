import numpy as np
import pytest

from phonrec import TanhParams, make_grid, make_table


@pytest.fixture(scope="session")
def tiny_grid():
    """Small grid where loop-based oracles stay fast."""
    return make_grid(x_max=0.5, n_x=5, t_max=0.5, n_t=25, n_mu=6, n_omega=5)


@pytest.fixture(scope="session")
def tiny_table(tiny_grid):
    return make_table(tiny_grid)


@pytest.fixture(scope="session")
def coarse():
    """The desk-scale verification grid (strictly positive scheme weights)."""
    grid = make_grid(x_max=0.5, n_x=10, t_max=5.0, n_t=250, n_mu=20, n_omega=20)
    return grid, make_table(grid)


@pytest.fixture(scope="session")
def truth_params():
    return TanhParams(1.5, 1.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(2024)
