import numpy as np
import pytest

from abspin.spin_algebra import SIGMA_X, SIGMA_Y, SIGMA_Z


def expm_hermitian_generator(h, t):
    """exp(i t h) for Hermitian h by eigendecomposition (independent of the Pauli identity)."""
    vals, vecs = np.linalg.eigh(h)
    return vecs @ np.diag(np.exp(1j * t * vals)) @ vecs.conj().T


def sigma_dot_ref(n):
    return n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
