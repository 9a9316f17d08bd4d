import numpy as np
import pytest

from formsim.control import ControllerGains
from formsim.dynamics import QuadrotorParams


@pytest.fixture
def params():
    return QuadrotorParams()


@pytest.fixture
def gains():
    return ControllerGains()


@pytest.fixture
def rng():
    return np.random.default_rng(20201209)
