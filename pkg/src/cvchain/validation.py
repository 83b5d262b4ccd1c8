"""Input validation helpers shared by the library and the estimator API."""

from __future__ import annotations

import numpy as np

from .gaussian import symplectic_form, symplectic_eigenvalues

__all__ = [
    "check_square",
    "check_symmetric",
    "check_quadratic_form",
    "check_covariance_matrix",
    "check_mode_pair",
    "check_site",
]


def check_square(m, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if arr.shape[0] % 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be 2N x 2N, got shape {arr.shape}")
    return arr


def check_symmetric(m, name: str = "matrix", tol: float = 1e-12) -> np.ndarray:
    arr = check_square(m, name)
    scale = max(1.0, float(np.abs(arr).max()))
    if np.abs(arr - arr.T).max() > tol * scale:
        raise ValueError(f"{name} is not symmetric within {tol} (relative)")
    return arr


def check_quadratic_form(m, name: str = "quadratic form") -> np.ndarray:
    return check_symmetric(m, name)


def check_covariance_matrix(
    gamma,
    n_modes: int | None = None,
    *,
    require_physical: bool = True,
    require_pure: bool = False,
    tol: float = 1e-9,
    name: str = "covariance matrix",
) -> np.ndarray:
    """Validate symmetry, dimension, physicality and (optionally) purity.

    Physicality means the Hermitian matrix ``gamma + i sigma`` has no
    eigenvalue below ``-tol``; purity means all symplectic eigenvalues equal 1
    within a loose tolerance.
    """
    g = check_symmetric(gamma, name)
    n = g.shape[0] // 2
    if n_modes is not None and n != n_modes:
        raise ValueError(f"{name} is for {n} modes, expected {n_modes}")
    if require_physical:
        w = np.linalg.eigvalsh(g + 1j * symplectic_form(n))
        if w.min() < -tol:
            raise ValueError(f"{name} is unphysical: min eig(gamma + i sigma) = {w.min():.3e}")
    if require_pure:
        nu = symplectic_eigenvalues(g)
        if np.abs(nu - 1.0).max() > 1e-6:
            raise ValueError(f"{name} is not pure: symplectic eigenvalues {nu}")
    return g


def check_mode_pair(n_modes: int, i: int, j: int) -> tuple[int, int]:
    """Validate a 1-based pair of distinct mode indices."""
    if i == j:
        raise ValueError("mode pair must consist of two distinct modes")
    for m in (i, j):
        if not (1 <= m <= n_modes):
            raise ValueError(f"mode index {m} out of range 1..{n_modes}")
    return int(i), int(j)


def check_site(n_sites: int, i: int) -> int:
    """Validate a 1-based site index."""
    if not (1 <= i <= n_sites):
        raise ValueError(f"site index {i} out of range 1..{n_sites}")
    return int(i)
