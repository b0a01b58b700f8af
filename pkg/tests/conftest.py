import numpy as np
import pytest

from uwbmsdd.core import AcrMatrix


def random_acr(rng, L, sigma_n2=1.0, scale=1.0):
    """Generic-position random statistics (continuous, ties have measure zero)."""
    zu = np.triu(scale * rng.normal(size=(L + 1, L + 1)), k=1)
    return AcrMatrix(zu, sigma_n2)


def worked_instance():
    """The L=2 regression block: Z01=1.0, Z02=-0.5, Z12=2.0, sigma_n2=1."""
    return AcrMatrix.from_entries(2, {(0, 1): 1.0, (0, 2): -0.5, (1, 2): 2.0}, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
