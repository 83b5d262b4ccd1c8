"""Brute-force truncated-Fock-space reference for validating Gaussian formulas.

Everything here is deliberately direct: ladder matrices, matrix exponentials,
density-matrix Runge-Kutta.  The module exists so that every covariance-level
formula in the package (moments, fidelity, negativity, the Markov dissipator)
can be checked against an independent Hilbert-space computation on small
chains.  It is test infrastructure and never enters the optimization path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .gaussian import TimeGrid

__all__ = [
    "FockSpace",
    "build_operators",
    "tmss_state",
    "squeezed_rotated_state",
    "extract_cm",
    "partial_trace",
    "lindblad_propagate",
    "bures_fidelity",
    "log_negativity_fock",
    "top_layer_population",
]

_MAX_DIM = 100_000  # desk-scale guard


@dataclass(frozen=True)
class FockSpace:
    """Tensor product of per-mode Fock spaces truncated at a common cutoff."""

    n_modes: int
    cutoff: int

    def __post_init__(self):
        if not (1 <= self.n_modes <= 3):
            raise ValueError("the oracle is limited to 1..3 modes")
        if self.cutoff < 2:
            raise ValueError("cutoff must be at least 2")
        if self.dim > _MAX_DIM:
            raise ValueError(f"Hilbert-space dimension {self.dim} exceeds the guard {_MAX_DIM}")

    @property
    def dim(self) -> int:
        return self.cutoff ** self.n_modes

    def vacuum(self) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[0] = 1.0
        return psi


def _ladder(cutoff: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, cutoff)), 1, format="csr").astype(complex)


def build_operators(space: FockSpace) -> dict[str, list[sp.csr_matrix]]:
    """Per-mode annihilation/creation/position/momentum matrices (sparse).

    q = (a^+ + a)/sqrt(2), p = i (a^+ - a)/sqrt(2); the returned dict maps
    'a', 'adag', 'q', 'p' to lists indexed by mode (0-based internally).
    """
    a1 = _ladder(space.cutoff)
    eye = sp.identity(space.cutoff, dtype=complex, format="csr")
    ann = []
    for m in range(space.n_modes):
        factors = [a1 if k == m else eye for k in range(space.n_modes)]
        op = factors[0]
        for f in factors[1:]:
            op = sp.kron(op, f, format="csr")
        ann.append(op)
    ops = {"a": ann, "adag": [op.conj().T.tocsr() for op in ann]}
    ops["q"] = [(ad + a) / np.sqrt(2.0) for a, ad in zip(ops["a"], ops["adag"])]
    ops["p"] = [1j * (ad - a) / np.sqrt(2.0) for a, ad in zip(ops["a"], ops["adag"])]
    return ops


def quadrature_ops(space: FockSpace) -> list[sp.csr_matrix]:
    """The 2N quadratures in the package ordering (q_1..q_N, p_1..p_N)."""
    ops = build_operators(space)
    return list(ops["q"]) + list(ops["p"])


def top_layer_population(psi: np.ndarray, space: FockSpace) -> float:
    """Probability of finding any mode in the highest retained Fock level."""
    probs = np.abs(psi.reshape((space.cutoff,) * space.n_modes)) ** 2
    total = 0.0
    for axis in range(space.n_modes):
        total += np.take(probs, -1, axis=axis).sum()
    return float(total)


def tmss_state(space: FockSpace, r: float) -> np.ndarray:
    """Two-mode squeezed vacuum ``exp(r a_1 a_2 - r a_1^+ a_2^+)|0,0>``.

    Built by the generator's exponential acting on vacuum and renormalized.
    The truncated generator stays exactly anti-Hermitian, so truncation shows
    up as weight parked on the cutoff edge rather than as norm loss; both are
    guarded (population above 1e-4 on the top Fock layer raises).
    """
    if space.n_modes != 2:
        raise ValueError("two-mode squeezing needs exactly 2 modes")
    ops = build_operators(space)
    gen = r * (ops["a"][0] @ ops["a"][1]) - r * (ops["adag"][0] @ ops["adag"][1])
    psi = expm_multiply(gen, space.vacuum())
    norm = np.linalg.norm(psi)
    edge = top_layer_population(psi / norm, space)
    if abs(1.0 - norm) > 1e-4 or edge > 1e-4:
        raise ValueError(
            f"cutoff {space.cutoff} too small for r={r}: "
            f"norm loss {1 - norm:.2e}, edge population {edge:.2e}"
        )
    return psi / norm


def squeezed_rotated_state(space: FockSpace, squeezings, h_passive=None) -> np.ndarray:
    """Random-Gaussian-state builder: per-mode squeezing then a passive rotation.

    ``squeezings`` holds one real parameter per mode for the single-mode
    squeezer ``exp((r a^2 - r a^+2) / 2)``; ``h_passive`` is an optional
    Hermitian mode-space matrix generating ``exp(-i sum h_jk a_j^+ a_k)``.
    The matching covariance matrix is ``S S^T`` with the symplectic factors
    from :func:`squeeze_symplectic` and :func:`passive_symplectic`.
    """
    ops = build_operators(space)
    psi = space.vacuum()
    for m, r in enumerate(squeezings):
        gen = 0.5 * r * (ops["a"][m] @ ops["a"][m] - ops["adag"][m] @ ops["adag"][m])
        psi = expm_multiply(gen, psi)
    if h_passive is not None:
        h = np.asarray(h_passive, dtype=complex)
        gen = sp.csr_matrix((space.dim, space.dim), dtype=complex)
        for j in range(space.n_modes):
            for k in range(space.n_modes):
                if h[j, k] != 0:
                    gen = gen + (-1j * h[j, k]) * (ops["adag"][j] @ ops["a"][k])
        psi = expm_multiply(gen.tocsr(), psi)
    psi = psi / np.linalg.norm(psi)
    return psi


def squeeze_symplectic(squeezings) -> np.ndarray:
    """Symplectic matrix of per-mode squeezers matching squeezed_rotated_state."""
    rs = np.asarray(squeezings, dtype=float)
    return np.diag(np.concatenate([np.exp(-rs), np.exp(rs)]))


def passive_symplectic(h_passive) -> np.ndarray:
    """Symplectic (orthogonal) matrix of exp(-i sum h_jk a_j^+ a_k)."""
    from scipy.linalg import expm

    h = np.asarray(h_passive, dtype=complex)
    v = expm(-1j * h)
    return np.block([[v.real, -v.imag], [v.imag, v.real]])


def _moments(state: np.ndarray, quads) -> tuple[np.ndarray, np.ndarray]:
    n2 = len(quads)
    second = np.empty((n2, n2), dtype=complex)
    if state.ndim == 1:
        acted = [op @ state for op in quads]
        means = np.array([np.vdot(state, v) for v in acted])
        for i in range(n2):
            for j in range(n2):
                second[i, j] = np.vdot(acted[i], acted[j])
    else:
        acted = [op @ state for op in quads]  # R_j rho, dense
        means = np.array([np.trace(a) for a in acted])
        for i in range(n2):
            for j in range(n2):
                second[i, j] = np.trace(quads[i] @ acted[j])
    return means, second


def extract_cm(state: np.ndarray, space: FockSpace) -> np.ndarray:
    """Covariance matrix ``<R_i R_j + R_j R_i> - 2 <R_i><R_j>`` of a Fock state.

    ``state`` is a ket (1-D) or a density matrix (2-D).
    """
    quads = quadrature_ops(space)
    means, second = _moments(np.asarray(state), quads)
    if np.abs(means.imag).max() > 1e-8:
        raise ValueError("first moments have a large imaginary part")
    sym = second + second.T
    gamma = sym - 2.0 * np.outer(means, means)
    if np.abs(gamma.imag).max() > 1e-8:
        raise ValueError("covariance matrix has a large imaginary residue")
    return gamma.real


def partial_trace(rho: np.ndarray, space: FockSpace, keep: int) -> np.ndarray:
    """Trace out all modes except the (1-based) ``keep`` mode of a 2-mode state."""
    if space.n_modes != 2:
        raise ValueError("partial_trace is implemented for 2-mode spaces")
    c = space.cutoff
    r = np.asarray(rho)
    if r.ndim == 1:
        r = np.outer(r, r.conj())
    r4 = r.reshape(c, c, c, c)
    if keep == 1:
        return np.einsum("ikjk->ij", r4)
    if keep == 2:
        return np.einsum("kikj->ij", r4)
    raise ValueError("keep must be 1 or 2")


def lindblad_propagate(
    rho0: np.ndarray,
    hamiltonian,
    jump,
    grid: TimeGrid,
    store_every: int = 1,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Fixed-step RK4 on ``drho = -i[H, rho] + L rho L^+ - {L^+ L, rho}/2``.

    ``hamiltonian`` is a matrix or a callable of the node time; ``jump`` may be
    None for unitary evolution.  Returns (stored node times, states); trace
    drift beyond 1e-6 aborts.
    """
    rho = np.array(rho0, dtype=complex)
    h_of_t = hamiltonian if callable(hamiltonian) else (lambda _t: hamiltonian)
    if jump is not None:
        l_op = sp.csr_matrix(jump)
        l_dag = l_op.conj().T.tocsr()
        ldl = (l_dag @ l_op).tocsr()

    def rhs(t, r):
        h = h_of_t(t)
        out = -1j * (h @ r - r @ h)
        if jump is not None:
            out = out + (l_op @ r) @ l_dag - 0.5 * (ldl @ r + r @ ldl)
        return np.asarray(out)

    dt = grid.dt
    times, stored = [0.0], [rho.copy()]
    for k in range(grid.n_steps):
        t = k * dt
        k1 = rhs(t, rho)
        k2 = rhs(t + dt / 2, rho + (dt / 2) * k1)
        k3 = rhs(t + dt / 2, rho + (dt / 2) * k2)
        k4 = rhs(t + dt, rho + dt * k3)
        rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        drift = abs(np.trace(rho).real - 1.0)
        if not drift <= 1e-6:  # catches NaN as well
            raise RuntimeError(f"trace drift {drift:.2e} at step {k + 1}; grid or cutoff too coarse")
        if (k + 1) % store_every == 0 or k + 1 == grid.n_steps:
            times.append((k + 1) * dt)
            stored.append(rho.copy())
    return np.array(times), stored


def _sqrt_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    if w.min() < -1e-8:
        raise ValueError(f"matrix is not positive semidefinite: min eigenvalue {w.min():.2e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def bures_fidelity(state1: np.ndarray, state2: np.ndarray) -> float:
    """Bures fidelity Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)).

    Kets (1-D arrays) are accepted and use the exact pure-state reduction
    |<psi1|psi2>|; mixed states go through Hermitian square roots.
    """
    s1, s2 = np.asarray(state1), np.asarray(state2)
    if s1.ndim == 1 and s2.ndim == 1:
        return float(abs(np.vdot(s1, s2)))
    r1 = np.outer(s1, s1.conj()) if s1.ndim == 1 else s1
    r2 = np.outer(s2, s2.conj()) if s2.ndim == 1 else s2
    root = _sqrt_psd(r1)
    inner = root @ r2 @ root
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    if w.min() < -1e-8:
        raise ValueError(f"fidelity kernel has negative eigenvalue {w.min():.2e}")
    return float(np.sqrt(np.clip(w, 0.0, None)).sum())


def log_negativity_fock(state: np.ndarray, space: FockSpace) -> float:
    """log2 of the trace norm of the partial transpose over the second mode.

    Density matrices are transposed blockwise and diagonalized directly.  For
    kets the same trace norm follows exactly from the Schmidt coefficients:
    ||rho^T_B||_1 = (sum_i s_i)^2.
    """
    if space.n_modes != 2:
        raise ValueError("negativity needs a 2-mode space")
    c = space.cutoff
    s = np.asarray(state)
    if s.ndim == 1:
        schmidt = np.linalg.svd(s.reshape(c, c), compute_uv=False)
        return float(2.0 * np.log2(schmidt.sum()))
    pt = s.reshape(c, c, c, c).transpose(0, 3, 2, 1).reshape(c * c, c * c)
    lam = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return float(np.log2(np.abs(lam).sum()))
