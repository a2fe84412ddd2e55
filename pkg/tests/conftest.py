import numpy as np
import pytest

from qfedring import datagen


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_dataset():
    """Small noisy circles split, shared across training tests."""
    features, labels = datagen.make_circles(200, noise=0.1, factor=0.5, seed=7)
    return datagen.scale_and_split(features, labels, 0.8, seed=8)


def random_state(rng, num_qubits):
    """Haar-ish random pure state, good enough for invariance tests."""
    from qfedring.statevec import StateVector

    raw = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(num_qubits, raw / np.linalg.norm(raw))
