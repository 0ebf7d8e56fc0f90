import numpy as np
import pytest


def random_density_matrix(rng: np.random.Generator) -> np.ndarray:
    """Ginibre-distributed random physical two-qubit state."""
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    rho = g @ g.conj().T
    return rho / np.real(np.trace(rho))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20120501)
