import numpy as np
import pytest
from hypothesis import settings

from spdeqv.model import Params

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

STUDY = Params(sigma2=0.1, theta2=0.5, theta1=-0.4, theta0=0.3)


@pytest.fixture
def study():
    return STUDY


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
