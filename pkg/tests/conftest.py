"""Shared helpers: random Gaussian states with matched Fock/covariance forms."""

import numpy as np
import pytest

from cvchain.fock import FockSpace, passive_symplectic, squeeze_symplectic, squeezed_rotated_state


def random_hermitian(rng, n):
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (h + h.conj().T)


def random_symplectic(rng, n_modes, r_max=1.0):
    """Random symplectic matrix: passive * squeeze * passive."""
    o1 = passive_symplectic(random_hermitian(rng, n_modes))
    o2 = passive_symplectic(random_hermitian(rng, n_modes))
    rs = rng.uniform(-r_max, r_max, n_modes)
    return o1 @ squeeze_symplectic(rs) @ o2


def random_physical_cm(rng, n_modes, mixed=True, r_max=0.8):
    """Random physical covariance matrix, mixed (nu >= 1.05) unless pure."""
    s = random_symplectic(rng, n_modes, r_max)
    nu = rng.uniform(1.05, 1.8, n_modes) if mixed else np.ones(n_modes)
    return s @ np.diag(np.concatenate([nu, nu])) @ s.T


def random_pure_state_pair(rng, n_modes, cutoff, r_max=1.0):
    """(fock ket, covariance matrix) of one random squeezed+rotated pure state."""
    space = FockSpace(n_modes, cutoff)
    rs = rng.uniform(-r_max, r_max, n_modes)
    h = random_hermitian(rng, n_modes)
    psi = squeezed_rotated_state(space, rs, h)
    s = passive_symplectic(h) @ squeeze_symplectic(rs)
    return psi, s @ s.T, space


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
