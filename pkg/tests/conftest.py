import numpy as np
import pytest

from oulab import eigenbasis_cosine, make_base_measure, make_spectrum


@pytest.fixture(scope="session")
def spectrum8():
    return make_spectrum("power", 8)


@pytest.fixture(scope="session")
def base200():
    return make_base_measure("uniform01", 200)


@pytest.fixture(scope="session")
def basis8(base200):
    return eigenbasis_cosine(base200, 8)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
