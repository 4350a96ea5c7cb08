import numpy as np
import pytest

import helpers


@pytest.fixture
def spec15():
    return helpers.spec_mean15_pm1()


@pytest.fixture
def spec_n3u4():
    return helpers.spec_n3_u4()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
