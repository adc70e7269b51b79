import numpy as np
import pytest

from openqsl.operators import spectral_state
from openqsl.scenario import preset_two_level


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def preset():
    return preset_two_level()


@pytest.fixture(scope="session")
def qubit_model(preset):
    return preset.model()


@pytest.fixture(scope="session")
def rho0_state(preset):
    return spectral_state(preset.rho0)
