"""Covariance-matrix toolkit for zero-mean Gaussian states of oscillator chains.

Conventions shared by the whole package:

* quadrature ordering ``R = (q_1, ..., q_N, p_1, ..., p_N)``,
* symplectic form ``sigma = [[0, I], [-I, 0]]`` (so ``[R_i, R_j] = i sigma_ij``),
* covariance matrix ``gamma_ij = <{R_i, R_j}> - 2 <R_i><R_j>``, hence the
  vacuum covariance matrix is the identity,
* first moments are identically zero for every state handled here.

Dynamics generated by a quadratic Hamiltonian ``H = R M R^T / 2`` close on
the covariance matrix: ``d(gamma)/dt = A gamma + gamma A^T + D`` with drift
``A = sigma M`` and an optional constant-in-state diffusion ``D``.  The same
equation in column-stacked form is a homogeneous linear ODE after padding a
constant unit element; :func:`lift_generator` builds that matrix explicitly,
while :func:`propagate` integrates the equivalent matrix-valued equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TimeGrid",
    "symplectic_form",
    "vacuum_cm",
    "tmss_cm",
    "closed_drift",
    "lift_generator",
    "pad_state",
    "unpad_state",
    "propagate",
    "symplectic_eigenvalues",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid: nodes ``t_k = k * dt`` for ``k = 0 .. n_steps``.

    Controls are sampled at the left edge of each of the ``n_steps`` bins and
    held constant across the bin; states live on the ``n_steps + 1`` nodes.
    """

    horizon: float
    n_steps: int = 2000

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    def nodes(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def bin_times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt


def symplectic_form(n_modes: int) -> np.ndarray:
    """Return the 2N x 2N symplectic form [[0, I], [-I, 0]]."""
    if int(n_modes) != n_modes or n_modes < 1:
        raise ValueError(f"n_modes must be a positive integer, got {n_modes}")
    n = int(n_modes)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def vacuum_cm(n_modes: int) -> np.ndarray:
    """Vacuum covariance matrix: the 2N x 2N identity in this convention."""
    if int(n_modes) != n_modes or n_modes < 1:
        raise ValueError(f"n_modes must be a positive integer, got {n_modes}")
    return np.eye(2 * int(n_modes))


# Cross-correlation signs of the two-mode squeezed vacuum, frozen once by
# matching second moments of exp(r a_i a_j - r a_i^+ a_j^+)|0> computed in a
# truncated Fock basis (see tests): qq cross block carries -sinh(2r), pp
# carries +sinh(2r).  The squeezed quadratures are (q_i + q_j)/sqrt(2) and
# (p_i - p_j)/sqrt(2).
TMSS_SIGN_QQ = -1.0
TMSS_SIGN_PP = +1.0


def tmss_cm(n_modes: int, i: int, j: int, r: float) -> np.ndarray:
    """Covariance matrix of a two-mode squeezed vacuum on sites ``(i, j)``.

    Parameters
    ----------
    n_modes:
        Total number of modes; all modes outside the pair stay in vacuum.
    i, j:
        1-based mode indices with ``1 <= i < j <= n_modes``.
    r:
        Squeezing parameter of ``exp(r a_i a_j - r a_i^+ a_j^+)`` acting on
        the global vacuum.
    """
    if i == j:
        raise ValueError("two-mode squeezing requires two distinct modes")
    if not (1 <= i < j <= n_modes):
        raise ValueError(f"mode pair ({i}, {j}) out of range for N={n_modes}")
    n = int(n_modes)
    g = np.eye(2 * n)
    c, s = np.cosh(2.0 * r), np.sinh(2.0 * r)
    qi, qj = i - 1, j - 1
    pi, pj = n + i - 1, n + j - 1
    for d in (qi, qj, pi, pj):
        g[d, d] = c
    g[qi, qj] = g[qj, qi] = TMSS_SIGN_QQ * s
    g[pi, pj] = g[pj, pi] = TMSS_SIGN_PP * s
    return g


def closed_drift(m_form: np.ndarray) -> np.ndarray:
    """Drift matrix ``A = sigma M`` of the closed flow ``d(gamma) = A gamma + gamma A^T``."""
    m = np.asarray(m_form, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        raise ValueError(f"quadratic form must be 2N x 2N, got shape {m.shape}")
    if not np.allclose(m, m.T, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise ValueError("quadratic form must be symmetric; symmetrize it first")
    return symplectic_form(m.shape[0] // 2) @ m


def lift_generator(drift: np.ndarray, diffusion: np.ndarray | None = None) -> np.ndarray:
    """Matrix of the padded column-stacked flow.

    The returned ``((2N)^2 + 1)``-square matrix acts on ``[vec(gamma), 1]``
    (column-major stacking): the top-left block is ``I (x) A + A (x) I``, the
    last column holds ``vec(D)``, and the bottom row is identically zero so
    the padded constant stays 1.
    """
    a = np.asarray(drift, dtype=float)
    d = a.shape[0]
    dim = d * d + 1
    lifted = np.zeros((dim, dim))
    lifted[:-1, :-1] = np.kron(np.eye(d), a) + np.kron(a, np.eye(d))
    if diffusion is not None:
        dif = np.asarray(diffusion, dtype=float)
        if dif.shape != a.shape:
            raise ValueError("drift and diffusion shapes differ")
        lifted[:-1, -1] = dif.flatten(order="F")
    return lifted


def pad_state(gamma: np.ndarray) -> np.ndarray:
    """Column-stack a covariance matrix and append the constant pad element 1."""
    g = np.asarray(gamma, dtype=float)
    return np.concatenate([g.flatten(order="F"), [1.0]])


def unpad_state(padded: np.ndarray) -> tuple[np.ndarray, float]:
    """Inverse of :func:`pad_state`: returns (gamma, pad element)."""
    x = np.asarray(padded, dtype=float)
    d = round(np.sqrt(x.size - 1))
    if d * d + 1 != x.size:
        raise ValueError(f"padded state length {x.size} is not (2N)^2 + 1")
    return x[:-1].reshape((d, d), order="F"), float(x[-1])


def _flow_rhs(a, g, d=None):
    k = a @ g
    k = k + np.swapaxes(k, -1, -2)
    if d is not None:
        k = k + d
    return k


def rk4_step(a: np.ndarray, g: np.ndarray, dt: float, d: np.ndarray | None = None) -> np.ndarray:
    """One classical Runge-Kutta step of ``g' = a g + g a^T + d`` with frozen (a, d).

    Broadcasts over leading axes of ``g``, so a batch of symmetric matrices
    advances in one call.
    """
    k1 = _flow_rhs(a, g, d)
    k2 = _flow_rhs(a, g + (0.5 * dt) * k1, d)
    k3 = _flow_rhs(a, g + (0.5 * dt) * k2, d)
    k4 = _flow_rhs(a, g + dt * k3, d)
    return g + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _per_bin(arr, n_steps, name):
    """Normalize a constant or per-bin matrix argument to an indexable of bins."""
    if arr is None:
        return None
    a = np.asarray(arr, dtype=float)
    if a.ndim == 2:
        return np.broadcast_to(a, (n_steps,) + a.shape)
    if a.ndim == 3:
        if a.shape[0] != n_steps:
            raise ValueError(f"{name} has {a.shape[0]} bins, grid has {n_steps}")
        return a
    raise ValueError(f"{name} must be a matrix or a stack of per-bin matrices")


def propagate(
    gamma0: np.ndarray,
    drift: np.ndarray,
    grid: TimeGrid,
    diffusion: np.ndarray | None = None,
) -> np.ndarray:
    """Fixed-step RK4 integration of ``d(gamma)/dt = A(t) gamma + gamma A(t)^T + D(t)``.

    ``drift`` and ``diffusion`` are either constant matrices or stacks with one
    matrix per grid bin (the generator is held constant across each bin, which
    makes the scheme the exact matrix-level counterpart of stepping the padded
    column-stacked vector with the lifted generator).  Symmetry of the state is
    re-enforced by averaging with the transpose after every step.

    Returns the trajectory at every node, shape ``(n_steps + 1, 2N, 2N)``.
    """
    g = np.array(gamma0, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"initial covariance matrix must be square, got {g.shape}")
    a_bins = _per_bin(drift, grid.n_steps, "drift")
    d_bins = _per_bin(diffusion, grid.n_steps, "diffusion")
    dt = grid.dt
    out = np.empty((grid.n_steps + 1,) + g.shape)
    out[0] = g
    for k in range(grid.n_steps):
        g = rk4_step(a_bins[k], g, dt, None if d_bins is None else d_bins[k])
        g = 0.5 * (g + g.T)
        if not np.all(np.isfinite(g)):
            raise RuntimeError(f"propagation produced non-finite values at step {k + 1}")
        out[k + 1] = g
    return out


def symplectic_eigenvalues(gamma: np.ndarray) -> np.ndarray:
    """The N symplectic eigenvalues of a 2N x 2N covariance matrix, ascending.

    These are the moduli of the eigenvalues of ``i sigma gamma``, which occur
    in +/- pairs; each pair is collapsed to one value.  Pure states have all
    symplectic eigenvalues equal to 1.
    """
    g = np.asarray(gamma, dtype=float)
    n = g.shape[0] // 2
    lam = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ g))
    lam.sort()
    return lam.reshape(n, 2).mean(axis=1)
