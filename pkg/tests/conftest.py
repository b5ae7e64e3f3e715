import numpy as np
import pytest

from ineqlab import measure


@pytest.fixture(scope="session")
def mu1():
    """Two-sided exponential on the default production grid."""
    return measure.mu_alpha(1.0)


@pytest.fixture(scope="session")
def mu2():
    """Gaussian-type measure e^{-x^2} on the default grid."""
    return measure.mu_alpha(2.0)


@pytest.fixture(scope="session")
def mu2_coarse():
    return measure.mu_alpha(2.0, grid=(-8.0, 8.0, 1001))


@pytest.fixture(scope="session")
def mu15_coarse():
    return measure.mu_alpha(1.5, grid=(-13.0, 13.0, 2001))


@pytest.fixture(scope="session")
def mu1_coarse():
    return measure.mu_alpha(1.0, grid=(-40.0, 40.0, 2001))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
