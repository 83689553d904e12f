import numpy as np
import pytest

from leafwater.spectral_io import WavelengthAxis
from leafwater.synthgen import GeneratorConfig, generate_samples

INDEX_BANDS = (420.0, 430.0, 550.0, 660.0, 670.0, 680.0, 710.0, 750.0, 791.0, 800.0, 847.0, 900.0, 970.0)


@pytest.fixture
def index_axis():
    return WavelengthAxis(np.array(INDEX_BANDS))


@pytest.fixture(scope="session")
def small_samples():
    return generate_samples(GeneratorConfig(n_samples=120, seed=7))


@pytest.fixture(scope="session")
def default_samples():
    return generate_samples(GeneratorConfig())
