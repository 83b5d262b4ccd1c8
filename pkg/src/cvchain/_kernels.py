"""JIT-compiled inner loops of the propagation and control sweep.

The per-bin matrices are tiny (2N <= 14) while the grids are long, so the
pure-numpy loops pay mostly interpreter overhead.  When numba is available
these kernels take over; the numpy fallbacks in :mod:`cvchain.krotov` stay
the reference implementation and the test suite pins the two paths together.
"""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised implicitly by the whole suite
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


@njit(cache=True)
def _rk4_batch(a, d, g, dt, use_d):
    """One RK4 step of g' = a g + g a^T (+ d) for a batch g, symmetrized."""
    out = np.empty_like(g)
    for p in range(g.shape[0]):
        x = g[p]
        k1 = np.dot(a, x)
        k1 = k1 + k1.T
        if use_d:
            k1 = k1 + d
        x2 = x + (0.5 * dt) * k1
        k2 = np.dot(a, x2)
        k2 = k2 + k2.T
        if use_d:
            k2 = k2 + d
        x3 = x + (0.5 * dt) * k2
        k3 = np.dot(a, x3)
        k3 = k3 + k3.T
        if use_d:
            k3 = k3 + d
        x4 = x + dt * k3
        k4 = np.dot(a, x4)
        k4 = k4 + k4.T
        if use_d:
            k4 = k4 + d
        y = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[p] = 0.5 * (y + y.T)
    return out


@njit(cache=True)
def forward_kernel(a_bins, d_bins, use_d, g0, dt, traj):
    """Propagate a batch through all bins, storing every node into traj."""
    g = g0.copy()
    traj[0] = g
    for k in range(a_bins.shape[0]):
        if use_d:
            g = _rk4_batch(a_bins[k], d_bins[k], g, dt, True)
        else:
            g = _rk4_batch(a_bins[k], d_bins[0], g, dt, False)
        traj[k + 1] = g


@njit(cache=True)
def backward_kernel(a_bins, d_bins, use_d, x_final, pad_final, dt, chi, pad):
    """Adjoint march X' = -(A^T X + X A), pad' = -<D, X>, from T down to 0."""
    n_steps = a_bins.shape[0]
    n_pairs = x_final.shape[0]
    h = -dt
    x = x_final.copy()
    chi[n_steps] = x
    pad[n_steps] = pad_final
    cur_pad = pad_final.copy()
    for k in range(n_steps - 1, -1, -1):
        a_t = a_bins[k].T.copy()
        new_x = np.empty_like(x)
        for p in range(n_pairs):
            xp = x[p]
            k1 = np.dot(a_t, xp)
            k1 = -(k1 + k1.T)
            x2 = xp + (0.5 * h) * k1
            k2 = np.dot(a_t, x2)
            k2 = -(k2 + k2.T)
            x3 = xp + (0.5 * h) * k2
            k3 = np.dot(a_t, x3)
            k3 = -(k3 + k3.T)
            x4 = xp + h * k3
            k4 = np.dot(a_t, x4)
            k4 = -(k4 + k4.T)
            if use_d:
                d = d_bins[k]
                p1 = -(d * xp).sum()
                p2 = -(d * x2).sum()
                p3 = -(d * x3).sum()
                p4 = -(d * x4).sum()
                cur_pad[p] = cur_pad[p] + (h / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
            y = xp + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            new_x[p] = 0.5 * (y + y.T)
        x = new_x
        chi[k] = x
        pad[k] = cur_pad


@njit(cache=True)
def sweep_kernel(
    base_bins,
    d_bins,
    use_d,
    chi,
    g0,
    controls,
    shape_vals,
    lam,
    amp,
    use_amp,
    dt,
    n_modes,
    traj,
    a_bins,
):
    """Sequential control update fused with the forward propagation.

    Updates ``controls`` in place bin by bin, rebuilds ``a_bins`` with the new
    clamped values, advances the state batch, and returns the largest update.
    """
    n_steps = base_bins.shape[0]
    n_pairs = g0.shape[0]
    g = g0.copy()
    traj[0] = g
    max_up = 0.0
    for k in range(n_steps):
        a = base_bins[k].copy()
        for l in range(n_modes):
            val = 0.0
            for p in range(n_pairs):
                y_pq = 0.0
                y_qp = 0.0
                for m in range(2 * n_modes):
                    y_pq += g[p, n_modes + l, m] * chi[k, p, m, l]
                    y_qp += g[p, l, m] * chi[k, p, m, n_modes + l]
                val += 2.0 * (y_pq - y_qp)
            c = controls[l, k]
            fac = 1.0
            if use_amp:
                ch = np.cosh(c / amp)
                fac = 1.0 / (ch * ch)
            dc = (shape_vals[k] / lam[l]) * fac * val
            c = c + dc
            controls[l, k] = c
            if abs(dc) > max_up:
                max_up = abs(dc)
            if use_amp:
                c = amp * np.tanh(c / amp)
            a[l, n_modes + l] += c
            a[n_modes + l, l] -= c
        a_bins[k] = a
        if use_d:
            g = _rk4_batch(a, d_bins[k], g, dt, True)
        else:
            g = _rk4_batch(a, d_bins[0], g, dt, False)
        traj[k + 1] = g
    return max_up
