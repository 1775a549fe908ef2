import numpy as np
import pytest

from energyquant import make_target


@pytest.fixture(scope="session")
def uniform():
    return make_target("uniform_interval")


@pytest.fixture(scope="session")
def two_intervals():
    return make_target("two_intervals")


@pytest.fixture(scope="session")
def cantor():
    return make_target("cantor")


@pytest.fixture(scope="session")
def square():
    return make_target("uniform_cube", dim=2)


@pytest.fixture(scope="session")
def circle():
    return make_target("uniform_circle")


@pytest.fixture(scope="session")
def square_proxy():
    return make_target("empirical_proxy", source_kind="uniform_cube", dim=2,
                       m=2048, seed=101)


@pytest.fixture(scope="session")
def cantor_proxy():
    return make_target("empirical_proxy", source_kind="cantor", m=2048, seed=102)


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
