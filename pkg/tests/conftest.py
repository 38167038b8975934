import numpy as np
import pytest

from airydiff import ZetaMap, build_coefficient_set, linear_potential, sine_potential


@pytest.fixture(scope="session")
def linear_map():
    pot = linear_potential()
    return pot, ZetaMap(pot)


@pytest.fixture(scope="session")
def linear_coeffs(linear_map):
    pot, zmap = linear_map
    return build_coefficient_set(pot, zmap, 2)


@pytest.fixture(scope="session")
def sine_map():
    pot = sine_potential()
    return pot, ZetaMap(pot)


@pytest.fixture
def rng():
    return np.random.default_rng(7)
