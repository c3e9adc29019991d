import numpy as np
import pytest

from saftlab.params import preset, random_params


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def ft1():
    return preset("ft", 1)


@pytest.fixture
def ft2():
    return preset("ft", 2)


@pytest.fixture
def rand1(rng):
    return random_params(1, rng)
