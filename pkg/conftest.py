import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from spectral_dynamics import WavePacket, WellConfig


@pytest.fixture
def natural():
    return WellConfig.natural()


@pytest.fixture
def two_state():
    """a_1 = a_2 = 1/sqrt(2)"""
    return WavePacket(np.array([1.0, 1.0]) / np.sqrt(2.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_packet(rng):
    """Fabrica de paquetes aleatorios normalizados con coeficientes complejos."""
    def make(modes):
        coeffs = rng.normal(size=modes) + 1j * rng.normal(size=modes)
        return WavePacket(coeffs).normalized()
    return make
