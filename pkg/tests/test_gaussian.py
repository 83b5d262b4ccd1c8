import numpy as np
import pytest

from cvchain import (
    TimeGrid,
    closed_drift,
    lift_generator,
    linear_chain_form,
    pad_state,
    propagate,
    symplectic_eigenvalues,
    symplectic_form,
    tmss_cm,
    unpad_state,
    vacuum_cm,
)
from cvchain.gaussian import rk4_step

from conftest import random_physical_cm


class TestSymplecticForm:
    def test_single_mode_block(self):
        assert np.array_equal(symplectic_form(1), [[0.0, 1.0], [-1.0, 0.0]])

    def test_two_mode_blocks(self):
        sig = symplectic_form(2)
        assert np.array_equal(sig[:2, 2:], np.eye(2))
        assert np.array_equal(sig[2:, :2], -np.eye(2))
        assert np.array_equal(sig[:2, :2], np.zeros((2, 2)))

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_algebra(self, n):
        sig = symplectic_form(n)
        assert np.array_equal(sig.T, -sig)
        assert np.allclose(sig @ sig, -np.eye(2 * n))

    def test_rejects_zero_modes(self):
        with pytest.raises(ValueError):
            symplectic_form(0)


class TestStates:
    def test_vacuum_is_identity(self):
        assert np.array_equal(vacuum_cm(1), np.eye(2))
        assert np.array_equal(vacuum_cm(5), np.eye(10))

    def test_vacuum_is_pure(self):
        assert np.allclose(symplectic_eigenvalues(vacuum_cm(3)), 1.0)

    def test_tmss_zero_squeezing(self):
        assert np.allclose(tmss_cm(4, 1, 2, 0.0), np.eye(8))

    def test_tmss_moments(self):
        g = tmss_cm(2, 1, 2, 1.2)
        c, s = np.cosh(2.4), np.sinh(2.4)
        assert g[0, 0] == pytest.approx(c)          # cosh(2.4) ~ 5.55695
        assert g[2, 2] == pytest.approx(c)
        assert g[0, 1] == pytest.approx(-s)         # sinh(2.4) ~ 5.46623, signs frozen
        assert g[2, 3] == pytest.approx(+s)         # against the Fock oracle

    @pytest.mark.parametrize("r", [0.3, 0.9, 1.4])
    def test_tmss_pure(self, r):
        g = tmss_cm(3, 1, 3, r)
        assert np.linalg.det(g) == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(symplectic_eigenvalues(g), 1.0, atol=1e-9)

    def test_tmss_rejects_equal_modes(self):
        with pytest.raises(ValueError):
            tmss_cm(3, 2, 2, 0.5)

    def test_tmss_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            tmss_cm(3, 2, 4, 0.5)


class TestClosedDrift:
    def test_identity_form_gives_sigma(self):
        assert np.array_equal(closed_drift(np.eye(2)), symplectic_form(1))

    def test_vacuum_stationary_under_free_evolution(self):
        grid = TimeGrid(5.0, 200)
        traj = propagate(vacuum_cm(1), closed_drift(np.eye(2)), grid)
        assert np.abs(traj - np.eye(2)).max() < 1e-12

    def test_zero_form_is_static(self):
        grid = TimeGrid(3.0, 100)
        g0 = tmss_cm(2, 1, 2, 0.7)
        traj = propagate(g0, closed_drift(np.zeros((4, 4))), grid)
        assert np.abs(traj - g0).max() == 0.0

    def test_rejects_asymmetric_form(self):
        m = np.eye(2)
        m[0, 1] = 0.3
        with pytest.raises(ValueError):
            closed_drift(m)

    def test_squeezed_state_rotates_with_period_pi(self):
        # single mode, M = I: gamma(t) = R(t) gamma R(t)^T, period pi
        grid = TimeGrid(np.pi, 600)
        g0 = np.diag([np.exp(1.2), np.exp(-1.2)])
        traj = propagate(g0, closed_drift(np.eye(2)), grid)
        assert np.abs(traj[-1] - g0).max() < 1e-9
        mid = traj[300]  # quarter period ... half period: rotated by pi/2
        assert np.abs(mid - np.diag([np.exp(-1.2), np.exp(1.2)])).max() < 1e-9


class TestLiftedGenerator:
    def test_zero_generator(self):
        lifted = lift_generator(np.zeros((2, 2)), np.zeros((2, 2)))
        assert np.abs(lifted).max() == 0.0

    def test_bottom_row_zero(self, rng):
        lifted = lift_generator(rng.normal(size=(4, 4)), rng.normal(size=(4, 4)))
        assert np.abs(lifted[-1]).max() == 0.0

    def test_one_step_matches_matrix_equation(self, rng):
        # lifted-vector RK4 against the matrix-level step, random inputs
        a = rng.normal(size=(2, 2))
        g = random_physical_cm(rng, 1)
        d = rng.normal(size=(2, 2))
        d = d + d.T
        dt = 0.01
        lifted = lift_generator(a, d)
        x = pad_state(g)
        k1 = lifted @ x
        k2 = lifted @ (x + 0.5 * dt * k1)
        k3 = lifted @ (x + 0.5 * dt * k2)
        k4 = lifted @ (x + dt * k3)
        x_next = x + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        g_lifted, pad = unpad_state(x_next)
        g_matrix = rk4_step(a, g, dt, d)
        assert pad == pytest.approx(1.0, abs=1e-12)
        assert np.abs(g_lifted - g_matrix).max() < 1e-12

    def test_constant_diffusion_integrates_linearly(self):
        grid = TimeGrid(2.0, 400)
        g0 = vacuum_cm(1)
        traj = propagate(g0, np.zeros((2, 2)), grid, diffusion=np.eye(2))
        t = grid.nodes()
        expected = np.eye(2)[None] * (1.0 + t)[:, None, None]
        assert np.abs(traj - expected).max() < 1e-12

    def test_pad_roundtrip(self, rng):
        g = random_physical_cm(rng, 2)
        back, pad = unpad_state(pad_state(g))
        assert pad == 1.0
        assert np.array_equal(back, g)


class TestPropagate:
    def test_zero_generator_constant(self):
        g0 = tmss_cm(2, 1, 2, 0.4)
        traj = propagate(g0, np.zeros((4, 4)), TimeGrid(1.0, 50))
        assert np.abs(traj - g0).max() == 0.0

    def test_closed_chain_preserves_purity(self):
        # det gamma stays at 1 along the full production-scale grid
        m = linear_chain_form(5, 1.0, 0.4)
        g0 = tmss_cm(5, 1, 2, 1.2)
        traj = propagate(g0, closed_drift(m), TimeGrid(15.0, 2000))
        dets = np.linalg.det(traj)
        assert np.abs(dets - 1.0).max() < 1e-6

    def test_closed_chain_preserves_physicality(self):
        m = linear_chain_form(4, 1.0, 0.4)
        g0 = tmss_cm(4, 1, 2, 1.0)
        traj = propagate(g0, closed_drift(m), TimeGrid(15.0, 1000))
        sig = symplectic_form(4)
        for g in traj[::50]:
            w = np.linalg.eigvalsh(g + 1j * sig)
            assert w.min() > -1e-6

    def test_rk4_order(self):
        m = linear_chain_form(2, 1.0, 0.4)
        a = closed_drift(m)
        g0 = tmss_cm(2, 1, 2, 0.8)
        ref = propagate(g0, a, TimeGrid(2.0, 1600))[-1]
        coarse = propagate(g0, a, TimeGrid(2.0, 100))[-1]
        fine = propagate(g0, a, TimeGrid(2.0, 200))[-1]
        e_coarse = np.abs(coarse - ref).max()
        e_fine = np.abs(fine - ref).max()
        assert e_coarse / e_fine == pytest.approx(16.0, rel=0.25)  # O(dt^4)

    def test_nonfinite_aborts_with_step_index(self):
        a = np.array([[50.0, 0.0], [0.0, 50.0]])  # wildly unstable drift
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(RuntimeError, match="step"):
                propagate(vacuum_cm(1), a, TimeGrid(100.0, 50))

    def test_lifted_and_matrix_propagation_agree(self, rng):
        a = rng.normal(size=(4, 4)) * 0.5
        d = rng.normal(size=(4, 4))
        d = 0.5 * (d + d.T)
        g0 = random_physical_cm(rng, 2)
        grid = TimeGrid(1.0, 100)
        lifted = lift_generator(a, d)
        x = pad_state(g0)
        dt = grid.dt
        for _ in range(grid.n_steps):
            k1 = lifted @ x
            k2 = lifted @ (x + 0.5 * dt * k1)
            k3 = lifted @ (x + 0.5 * dt * k2)
            k4 = lifted @ (x + dt * k3)
            x = x + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        g_lifted, _ = unpad_state(x)
        g_matrix = propagate(g0, a, grid, diffusion=d)[-1]
        assert np.abs(g_lifted - g_matrix).max() < 1e-10


class TestTimeGrid:
    def test_nodes_and_bins(self):
        grid = TimeGrid(15.0, 2000)
        assert grid.dt == pytest.approx(0.0075)
        assert grid.nodes().size == 2001
        assert grid.bin_times().size == 2000
        assert grid.nodes()[0] == 0.0
        assert grid.nodes()[-1] == pytest.approx(15.0)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            TimeGrid(-1.0, 100)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 0)
