import numpy as np
import pytest

from aklt_hqmm.models.aklt import spin1_operators
from aklt_hqmm.models.hqmm import aklt_causal_model


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def spins():
    return spin1_operators()


@pytest.fixture
def model():
    return aklt_causal_model()
