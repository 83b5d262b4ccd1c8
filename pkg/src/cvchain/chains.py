"""Quadratic-form builders for the two chain configurations and their controls.

Two topologies are supported:

* ``linear``: N oscillators of frequency ``omega0`` with excitation-preserving
  nearest-neighbour coupling ``g0 (a_i^+ a_{i+1} + h.c.)``, which in quadrature
  form couples both the qq and pp blocks through the path-graph adjacency.
* ``x_shaped``: the fixed 7-site X graph with position-position couplings
  ``g0 q_i q_j`` on edges {(1,3), (2,3), (3,4), (4,5), (5,6), (5,7)}; only the
  qq block is coupled.

Each site carries one control channel ``c_i(t) (q_i^2 + p_i^2) / 2`` that
tunes its frequency.  Site and channel indices are 1-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gaussian import TimeGrid
from .validation import check_site

__all__ = [
    "ChainSpec",
    "X_CHAIN_EDGES",
    "linear_chain_form",
    "x_chain_form",
    "chain_form",
    "control_form",
    "coupling_vector",
    "initial_guess",
]

X_CHAIN_EDGES = ((1, 3), (2, 3), (3, 4), (4, 5), (5, 6), (5, 7))

_COUPLING_KINDS = {
    "linear": "excitation_preserving",
    "x_shaped": "position_position",
}


@dataclass(frozen=True)
class ChainSpec:
    """Static description of a chain: topology, size, frequency and coupling."""

    topology: str
    n_sites: int
    omega0: float = 1.0
    g0: float = 0.4
    coupling_kind: str = field(default="")

    def __post_init__(self):
        if self.topology not in _COUPLING_KINDS:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.topology == "linear" and self.n_sites < 2:
            raise ValueError("a linear chain needs at least 2 sites")
        if self.topology == "x_shaped" and self.n_sites != 7:
            raise ValueError("the X-shaped chain is defined for exactly 7 sites")
        expected = _COUPLING_KINDS[self.topology]
        if self.coupling_kind == "":
            object.__setattr__(self, "coupling_kind", expected)
        elif self.coupling_kind != expected:
            raise ValueError(
                f"{self.topology} chains use {expected} coupling, got {self.coupling_kind!r}"
            )


def linear_chain_form(n_sites: int, omega0: float = 1.0, g0: float = 0.4) -> np.ndarray:
    """Quadratic form of the linear chain Hamiltonian.

    The excitation-preserving coupling a_i^+ a_{i+1} + h.c. equals
    q_i q_{i+1} + p_i p_{i+1} up to an additive constant that does not move
    the covariance matrix, so both diagonal blocks get the path adjacency.
    """
    if n_sites < 2:
        raise ValueError("a linear chain needs at least 2 sites")
    n = int(n_sites)
    path = np.zeros((n, n))
    idx = np.arange(n - 1)
    path[idx, idx + 1] = path[idx + 1, idx] = 1.0
    block = omega0 * np.eye(n) + g0 * path
    m = np.zeros((2 * n, 2 * n))
    m[:n, :n] = block
    m[n:, n:] = block
    return m


def x_chain_form(g0: float = 0.4) -> np.ndarray:
    """Quadratic form of the 7-site X-shaped chain (position-position coupled).

    qq block: I + g0 * A_X with the fixed X edge set; pp block: identity.
    """
    n = 7
    adj = np.zeros((n, n))
    for i, j in X_CHAIN_EDGES:
        adj[i - 1, j - 1] = adj[j - 1, i - 1] = 1.0
    m = np.eye(2 * n)
    m[:n, :n] += g0 * adj
    return m


def chain_form(spec: ChainSpec) -> np.ndarray:
    """Dispatch to the topology-specific quadratic-form builder."""
    if spec.topology == "linear":
        return linear_chain_form(spec.n_sites, spec.omega0, spec.g0)
    return x_chain_form(spec.g0)


def control_form(site: int, n_sites: int) -> np.ndarray:
    """Quadratic form of the per-site control Hamiltonian (q_i^2 + p_i^2)/2."""
    i = check_site(n_sites, site)
    n = int(n_sites)
    m = np.zeros((2 * n, 2 * n))
    m[i - 1, i - 1] = 1.0
    m[n + i - 1, n + i - 1] = 1.0
    return m


def coupling_vector(n_sites: int, strength: float) -> np.ndarray:
    """Coefficient vector of the bath coupling operator ``lambda * sum_i q_i``.

    Entries 1..N (the q components) equal ``strength``; the p components are
    zero.  Returned complex so downstream conjugations are uniform.
    """
    if strength < 0:
        raise ValueError(f"coupling strength must be non-negative, got {strength}")
    n = int(n_sites)
    l_vec = np.zeros(2 * n, dtype=complex)
    l_vec[:n] = strength
    return l_vec


def initial_guess(topology: str, site: int, grid: TimeGrid) -> np.ndarray:
    """Initial control field for one channel, sampled at the grid bin times.

    Linear chains start from the zero field; the X-shaped chain uses the
    site-indexed sine ``(0.1 + i/20) sin(4 pi t / T)``.
    """
    if topology not in _COUPLING_KINDS:
        raise ValueError(f"unknown topology {topology!r}")
    t = grid.bin_times()
    if topology == "linear":
        return np.zeros_like(t)
    return (0.1 + site / 20.0) * np.sin(4.0 * np.pi * t / grid.horizon)
