"""Shared helpers for the test suite."""
import numpy as np
import pytest

from eqml.ringgrid import SampledImage, build_grid


def rand_sampled(grid, rng, low=0.05, high=1.0) -> SampledImage:
    """Random strictly-positive sample matrix on the given grid."""
    return SampledImage(grid, rng.uniform(low, high, (grid.n_rings, grid.n_angles)))


@pytest.fixture
def grid33():
    return build_grid(3, 3, 32, 32)


@pytest.fixture
def grid22():
    return build_grid(2, 2, 16, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
