"""Pytest configuration and fixtures for fsac tests."""

import numpy as np
import pytest

from fsac.functional.grid import Grid
from fsac.models.likelihood import FsacSpec, reduced_form
from fsac.simulation.scenarios import ScenarioConfig
from fsac.spatial.weights import lattice_weights


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run study-scale Monte Carlo tests"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def grid() -> Grid:
    """101 equispaced points on [0, 1]."""
    return Grid.equispaced(101)


@pytest.fixture
def lattice_5x5():
    """Row-standardized rook weights, n = 25."""
    return lattice_weights(5, 5)


@pytest.fixture
def lattice_7x7():
    return lattice_weights(7, 7)


@pytest.fixture
def sac_spec(lattice_7x7, rng) -> FsacSpec:
    """Two score columns and a response drawn from the SAC reduced form at (0.4, 0.3)."""
    n = lattice_7x7.n
    Z = rng.standard_normal((n, 2))
    eps = rng.standard_normal(n)
    y = reduced_form(Z @ np.array([1.5, -0.8]), eps, 0.4, 0.3, lattice_7x7, lattice_7x7)
    return FsacSpec(y=y, Z=Z, W=lattice_7x7, M=lattice_7x7)


@pytest.fixture
def small_scenario() -> ScenarioConfig:
    """A 5x5 lattice scenario small enough for unit tests."""
    return ScenarioConfig(
        rho=0.4, lambda_=0.3, n_reps=3, seed=7, rows=5, cols=5, grid_size=51, k=2
    )
