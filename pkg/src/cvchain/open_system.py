"""Leading-order non-Markovian dissipative dynamics in covariance-matrix form.

The bath has an exponentially decaying (Ornstein-Uhlenbeck) correlation
``alpha(t, s) = (xi/2) exp(-(xi + i Omega)|t - s|)`` and couples through a
quadrature-linear operator ``L = l_i R_i``.  The noise-free leading order of
the memory operator stays quadrature-linear, ``o_i(t) R_i``, and its complex
coefficient vector obeys

    d(o_i)/dt = alpha(0) l_i - xi_eff o_i - o_l [sigma M]_li
                - i sigma_kl (o_k o_l l*_i + o_i o_l l*_k),

with ``xi_eff = xi + i Omega`` and repeated indices summed.  The covariance
matrix then follows ``d(gamma) = A gamma + gamma A^T + D`` with

    A = sigma (M + Delta),      Delta_mn = i l_m o*_n - i l*_m o_n,
    D = 2 sigma Re(delta) sigma^T,   delta_mn = l*_m o_n + o*_m l_n.

In the memoryless limit ``o -> l/2``: Delta vanishes and D reduces to the
constant Lindblad diffusion ``2 sigma l l^T sigma^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import TimeGrid, symplectic_form

__all__ = [
    "BathParams",
    "o_rhs",
    "integrate_o",
    "dissipative_terms",
    "open_generator",
]

_DIVERGENCE_FACTOR = 1e3


@dataclass(frozen=True)
class BathParams:
    """Ornstein-Uhlenbeck bath: memory rate, central frequency shift, coupling."""

    xi: float
    omega_shift: float = 0.0
    coupling: float = 0.0
    mode: str = "non_markov"

    def __post_init__(self):
        if self.xi <= 0:
            raise ValueError(f"memory rate xi must be positive, got {self.xi}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be non-negative, got {self.coupling}")
        if self.mode not in ("markov", "non_markov"):
            raise ValueError(f"bath mode must be 'markov' or 'non_markov', got {self.mode!r}")

    @property
    def xi_eff(self) -> complex:
        return self.xi + 1j * self.omega_shift

    @property
    def alpha0(self) -> float:
        """Equal-time correlation alpha(0) = xi / 2."""
        return 0.5 * self.xi


def o_rhs(o: np.ndarray, m_form: np.ndarray, l_vec: np.ndarray, bath: BathParams) -> np.ndarray:
    """Right-hand side of the memory-coefficient ODE (term order as in the docstring)."""
    o = np.asarray(o, dtype=complex)
    l_vec = np.asarray(l_vec, dtype=complex)
    if o.shape != l_vec.shape:
        raise ValueError("o and l must have the same length 2N")
    sig = symplectic_form(o.size // 2)
    sm = sig @ np.asarray(m_form, dtype=float)
    lin = bath.alpha0 * l_vec - bath.xi_eff * o - sm.T @ o
    quad = (o @ sig @ o) * np.conj(l_vec) + (np.conj(l_vec) @ sig @ o) * o
    return lin - 1j * quad


def integrate_o(
    clamped_controls: np.ndarray,
    m_form0: np.ndarray,
    control_forms: np.ndarray,
    l_vec: np.ndarray,
    bath: BathParams,
    grid: TimeGrid,
) -> np.ndarray:
    """Memory coefficients o(t_k) on every grid node, starting from o(0) = 0.

    ``clamped_controls`` has shape (n_channels, n_steps): the same per-bin
    clamped values the covariance propagation sees.  ``control_forms`` stacks
    the per-channel quadratic forms.  Markov mode skips the integration and
    returns the constant ``l/2``.  Growth of |o| beyond 1000 |l| aborts: the
    leading-order ansatz has lost validity well before that.
    """
    l_vec = np.asarray(l_vec, dtype=complex)
    n2 = l_vec.size
    out = np.empty((grid.n_steps + 1, n2), dtype=complex)
    if bath.mode == "markov":
        out[:] = 0.5 * l_vec
        return out
    c = np.asarray(clamped_controls, dtype=float)
    if c.shape != (np.asarray(control_forms).shape[0], grid.n_steps):
        raise ValueError(
            f"controls shape {c.shape} does not match (n_channels, n_steps={grid.n_steps})"
        )
    mc = np.asarray(control_forms, dtype=float)
    sig = symplectic_form(n2 // 2)
    sm0_t = (sig @ np.asarray(m_form0, dtype=float)).T
    smc_t = np.transpose(sig[None] @ mc, (0, 2, 1))
    l_conj = np.conj(l_vec)
    sig_l = sig.T @ l_conj  # (l* . sigma o) = (sigma^T l*) . o
    alpha_l = bath.alpha0 * l_vec
    xi_eff = bath.xi_eff
    dt = grid.dt
    guard = _DIVERGENCE_FACTOR * max(np.linalg.norm(l_vec), 1e-300)

    o = np.zeros(n2, dtype=complex)
    out[0] = o
    for k in range(grid.n_steps):
        sm_t = sm0_t + np.tensordot(c[:, k], smc_t, axes=1)

        def rhs(x):
            quad = (x @ sig @ x) * l_conj + (sig_l @ x) * x
            return alpha_l - xi_eff * x - sm_t @ x - 1j * quad

        k1 = rhs(o)
        k2 = rhs(o + 0.5 * dt * k1)
        k3 = rhs(o + 0.5 * dt * k2)
        k4 = rhs(o + dt * k3)
        o = o + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(o)) or np.linalg.norm(o) > guard:
            raise RuntimeError(
                f"memory-coefficient integration diverged at step {k + 1} "
                f"(|o| = {np.linalg.norm(o):.3e}); refine the grid or check parameters"
            )
        out[k + 1] = o
    return out


def dissipative_terms(o: np.ndarray, l_vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(Delta, Re delta) for one snapshot of the memory coefficients."""
    o = np.asarray(o, dtype=complex)
    l_vec = np.asarray(l_vec, dtype=complex)
    delta_drift = 1j * np.outer(l_vec, np.conj(o)) - 1j * np.outer(np.conj(l_vec), o)
    delta_diff = np.outer(np.conj(l_vec), o) + np.outer(np.conj(o), l_vec)
    return delta_drift, delta_diff.real


def open_generator(
    m_form: np.ndarray, o: np.ndarray, l_vec: np.ndarray, *, imag_tol: float = 1e-10
) -> tuple[np.ndarray, np.ndarray]:
    """Drift and diffusion of the dissipative covariance flow at one instant.

    A = sigma M + sigma Delta and D = 2 sigma Re(delta) sigma^T; an imaginary
    residue in the drift correction above ``imag_tol`` (relative) raises, as
    it signals an inconsistent coupling/coefficient pair.
    """
    m = np.asarray(m_form, dtype=float)
    sig = symplectic_form(m.shape[0] // 2)
    delta_drift, delta_r = dissipative_terms(o, l_vec)
    drift_corr = sig @ delta_drift
    scale = max(1.0, np.abs(drift_corr).max())
    if np.abs(drift_corr.imag).max() > imag_tol * scale:
        raise ValueError(
            f"drift correction has imaginary residue {np.abs(drift_corr.imag).max():.2e}"
        )
    a = sig @ m + drift_corr.real
    d = 2.0 * sig @ delta_r @ sig.T
    return a, d


def dissipative_bins(
    o_nodes: np.ndarray, l_vec: np.ndarray, n_steps: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-bin (sigma Delta, D) stacks from node-sampled memory coefficients.

    Bin k is frozen at the left node value o(t_k), matching the piecewise
    treatment of the controls.  Vectorized equivalent of calling
    :func:`open_generator` per bin with M = 0.
    """
    o = np.asarray(o_nodes, dtype=complex)[:n_steps]
    l_vec = np.asarray(l_vec, dtype=complex)
    sig = symplectic_form(l_vec.size // 2)
    delta_drift = 1j * np.einsum("m,kn->kmn", l_vec, np.conj(o)) - 1j * np.einsum(
        "m,kn->kmn", np.conj(l_vec), o
    )
    delta_r = (
        np.einsum("m,kn->kmn", np.conj(l_vec), o) + np.einsum("km,n->kmn", np.conj(o), l_vec)
    ).real
    sig_delta = np.einsum("ij,kjn->kin", sig, delta_drift)
    if np.abs(sig_delta.imag).max() > 1e-10 * max(1.0, np.abs(sig_delta).max()):
        raise ValueError("drift correction has a non-negligible imaginary residue")
    diff = 2.0 * np.einsum("ij,kjl,ml->kim", sig, delta_r, sig)
    return sig_delta.real, diff
