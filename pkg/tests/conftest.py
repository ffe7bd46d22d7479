import numpy as np
import pytest

from quasinv.linalg import Tolerance


@pytest.fixture
def tol():
    return Tolerance(1e-9, 1e-9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
