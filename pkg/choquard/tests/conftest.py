"""Shared fixtures for all library tests."""

import numpy as np
import pytest

from choquard.models import Field, Grid, Params
from choquard.spectral_core import build_riesz_kernel


@pytest.fixture
def rng():
    """Fixture to provide a seeded random generator."""
    return np.random.default_rng(20240517)


@pytest.fixture
def unit_grid():
    """Fixture to provide a 6^3 grid with unit spacing."""
    return Grid(dim=3, n=6, length=6.0)


@pytest.fixture
def newton_params():
    """Fixture to provide N=3, alpha=2, p=q=2."""
    return Params(N=3, alpha=2.0, p=2.0, q=2.0)


@pytest.fixture
def unit_kernel(unit_grid):
    """Fixture to provide the Newtonian kernel on the unit grid."""
    return build_riesz_kernel(unit_grid, 2.0)


@pytest.fixture
def random_field(unit_grid, rng):
    """Fixture to provide a random field on the unit grid."""
    return Field(unit_grid, rng.standard_normal(unit_grid.shape))


@pytest.fixture
def make_spikes():
    """Fixture to build fields made of unit spikes at the given indices."""

    def _make(grid, *indices, amplitude=1.0):
        data = np.zeros(grid.shape)
        for index in indices:
            data[index] = amplitude
        return Field(grid, data)

    return _make
