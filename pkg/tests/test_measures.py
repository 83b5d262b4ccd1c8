import numpy as np
import pytest

from cvchain import (
    control_spectrum,
    gaussian_fidelity,
    log_negativity,
    objective_value,
    reduce_cm,
    residuals,
    tmss_cm,
    vacuum_cm,
    wigner_slice,
)

from conftest import random_physical_cm


class TestReduceCm:
    def test_vacuum_reduces_to_vacuum(self):
        assert np.array_equal(reduce_cm(vacuum_cm(5), (1, 2)), np.eye(4))

    def test_tmss_pair_extraction(self):
        g = tmss_cm(5, 1, 2, 0.9)
        assert np.array_equal(reduce_cm(g, (1, 2)), tmss_cm(2, 1, 2, 0.9))

    def test_unentangled_remainder(self):
        g = tmss_cm(5, 1, 2, 0.9)
        assert np.array_equal(reduce_cm(g, (4, 5)), np.eye(4))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            reduce_cm(vacuum_cm(3), (1, 4))
        with pytest.raises(ValueError):
            reduce_cm(vacuum_cm(3), (2, 2))


class TestGaussianFidelity:
    def test_self_fidelity_is_one(self, rng):
        for n in (1, 2, 3):
            g = random_physical_cm(rng, n)
            assert gaussian_fidelity(g, g) == pytest.approx(1.0, abs=1e-9)

    def test_vacuum_vs_tmss_analytic(self):
        # pure-state overlap |<0|S(r)|0>| = sech(r)
        f = gaussian_fidelity(vacuum_cm(2), tmss_cm(2, 1, 2, 1.2))
        assert f == pytest.approx(1.0 / np.cosh(1.2), abs=1e-12)

    def test_symmetry(self, rng):
        for _ in range(5):
            g1 = random_physical_cm(rng, 2)
            g2 = random_physical_cm(rng, 2)
            assert gaussian_fidelity(g1, g2) == pytest.approx(gaussian_fidelity(g2, g1), abs=1e-10)

    def test_bounded_by_one(self, rng):
        for _ in range(10):
            f = gaussian_fidelity(random_physical_cm(rng, 2), random_physical_cm(rng, 2))
            assert 0.0 <= f <= 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            gaussian_fidelity(vacuum_cm(1), vacuum_cm(2))


class TestLogNegativity:
    def test_vacuum_is_zero(self):
        assert log_negativity(vacuum_cm(2)) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("r", [0.2, 0.6, 1.0, 1.2])
    def test_tmss_analytic(self, r):
        # 2r/ln2; r = 1.2 gives 3.462468
        assert log_negativity(tmss_cm(2, 1, 2, r)) == pytest.approx(2 * r / np.log(2), abs=1e-9)

    def test_monotone_in_squeezing(self):
        values = [log_negativity(tmss_cm(2, 1, 2, r)) for r in np.linspace(0.1, 1.4, 8)]
        assert np.all(np.diff(values) > 0)

    def test_separable_product_state(self):
        # product of two single-mode squeezed states stays separable
        g = np.diag([np.exp(0.8), np.exp(-0.4), np.exp(-0.8), np.exp(0.4)])
        assert log_negativity(g) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_unphysical(self):
        g = 0.5 * np.eye(4)  # below vacuum noise
        with pytest.raises(ValueError):
            log_negativity(g)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            log_negativity(vacuum_cm(3))


class TestResiduals:
    def test_perfect_transfer(self):
        target = tmss_cm(3, 2, 3, 0.8)
        n0 = 2 * 0.8 / np.log(2)
        f_res, n_res = residuals(target, target, n0, (2, 3))
        assert f_res == pytest.approx(0.0, abs=1e-9)
        assert n_res == pytest.approx(0.0, abs=1e-12)

    def test_zero_negativity_gives_unit_residual(self):
        f_res, n_res = residuals(vacuum_cm(3), tmss_cm(3, 2, 3, 0.8), 1.5, (2, 3))
        assert n_res == pytest.approx(1.0, abs=1e-12)

    def test_direct_substitution(self):
        # F = 0.9 and N = N_0 -> (0.1, 0); arrange N = N_0 via the state itself
        g = tmss_cm(2, 1, 2, 0.5)
        n0 = log_negativity(g)
        f_res, n_res = residuals(g, g, n0, (1, 2))
        assert n_res == pytest.approx(0.0, abs=1e-12)

    def test_rejects_nonpositive_target(self):
        with pytest.raises(ValueError):
            residuals(vacuum_cm(2), vacuum_cm(2), 0.0, (1, 2))


class TestObjectiveValue:
    def test_j2_mixes_residuals_evenly(self):
        # F_r = 0.2, N_r = 0.4 -> J2 = 0.3, checked through the formula directly
        g = tmss_cm(2, 1, 2, 0.9)
        f_res, n_res = residuals(g, tmss_cm(2, 1, 2, 0.3), 2 * 0.3 / np.log(2), (1, 2))
        j2 = objective_value("fidelity_negativity", g, tmss_cm(2, 1, 2, 0.3), 2 * 0.3 / np.log(2), (1, 2))
        assert j2 == pytest.approx(0.5 * (f_res + n_res), abs=1e-14)
        assert 0.0 <= j2 <= 1.0

    def test_all_perfect_multi_target_is_log_n(self):
        gs, targets, n0s = [], [], []
        for r in (0.6, 0.7, 0.8, 0.9, 1.0):
            g = tmss_cm(4, 3, 4, r)
            gs.append(g)
            targets.append(g)
            n0s.append(2 * r / np.log(2))
        j = objective_value("lse_multi", gs, targets, n0s, (3, 4))
        assert j == pytest.approx(np.log(5.0), abs=1e-7)

    def test_lse_bounds(self, rng):
        gs, targets, n0s, per_pair = [], [], [], []
        for r in (0.4, 0.7, 1.0):
            gs.append(tmss_cm(3, 2, 3, r + 0.1))
            targets.append(tmss_cm(3, 2, 3, r))
            n0s.append(2 * r / np.log(2))
            per_pair.append(
                objective_value("fidelity_negativity", gs[-1], targets[-1], n0s[-1], (2, 3))
            )
        j = objective_value("lse_multi", gs, targets, n0s, (2, 3))
        assert j >= max(per_pair)
        assert j - max(per_pair) <= np.log(3.0) + 1e-12

    def test_single_pair_kinds_reject_lists(self):
        g = vacuum_cm(2)
        with pytest.raises(ValueError):
            objective_value("fidelity", [g, g], [g, g], [1.0, 1.0], (1, 2))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            objective_value("what", vacuum_cm(2), vacuum_cm(2), 1.0, (1, 2))


class TestWignerSlice:
    def test_vacuum_peak_value(self):
        s = wigner_slice(np.eye(4), extent=3.0, n_points=31)
        mid = 15
        assert s.values[mid, mid] == pytest.approx(np.pi ** -2, abs=1e-12)

    def test_vacuum_is_isotropic(self):
        s = wigner_slice(np.eye(4), extent=2.0, n_points=41)
        a2 = s.a_values[:, None] ** 2 + s.b_values[None, :] ** 2
        assert np.allclose(s.values, np.exp(-a2) / np.pi ** 2, atol=1e-12)

    def test_point_symmetry_for_zero_mean(self, rng):
        g = random_physical_cm(rng, 2)
        s = wigner_slice(g, n_points=21)
        assert np.allclose(s.values, s.values[::-1, ::-1], atol=1e-14)

    def test_tmss_squeezed_axis_variance(self):
        # the frozen sign convention squeezes (q_i + q_j)/sqrt2: the slice along
        # that axis decays like exp(-a^2/e^(-2r)); the default (q_i - q_j) axis
        # is the anti-squeezed one
        r = 0.6
        g = tmss_cm(2, 1, 2, r)
        u = np.array([1.0, 1.0, 0.0, 0.0]) / np.sqrt(2)
        v = np.array([0.0, 0.0, 1.0, -1.0]) / np.sqrt(2)
        s = wigner_slice(g, u, v, extent=1.0, n_points=3)
        # W(a,0)/W(0,0) = exp(-a^2 / var) with var = e^(-2r)
        ratio = s.values[2, 1] / s.values[1, 1]
        assert ratio == pytest.approx(np.exp(-1.0 / np.exp(-2 * r)), rel=1e-9)
        var_u = u @ g @ u
        assert var_u == pytest.approx(np.exp(-2 * r), abs=1e-12)

    def test_full_wigner_normalization(self):
        # coarse 4-D quadrature of the two-mode Wigner function
        g = tmss_cm(2, 1, 2, 0.3)
        extent, n = 4.5, 25
        xs = np.linspace(-extent, extent, n)
        grid = np.stack(np.meshgrid(xs, xs, xs, xs, indexing="ij"), axis=-1)
        g_inv = np.linalg.inv(g)
        quad = np.einsum("abcdi,ij,abcdj->abcd", grid, g_inv, grid)
        w = np.exp(-quad) / (np.pi ** 2 * np.sqrt(np.linalg.det(g)))
        integral = w.sum() * (xs[1] - xs[0]) ** 4
        assert integral == pytest.approx(1.0, rel=0.02)

    def test_rejects_non_orthonormal_axes(self):
        with pytest.raises(ValueError):
            wigner_slice(np.eye(4), np.array([1.0, 0, 0, 0]), np.array([1.0, 0, 0, 0]))
        with pytest.raises(ValueError):
            wigner_slice(np.eye(4), 2 * np.array([1.0, 0, 0, 0]), np.array([0, 1.0, 0, 0]))


class TestControlSpectrum:
    def test_constant_control(self):
        spec = control_spectrum(np.full(2000, 0.7))
        assert spec[0] == pytest.approx(2000 * 0.7)
        assert np.abs(spec[1:]).max() < 1e-9

    def test_single_tone_concentrates_in_bin_one(self):
        k = np.arange(2000)
        spec = control_spectrum(np.sin(2 * np.pi * k / 2000))
        assert spec[1] == pytest.approx(1000.0, rel=1e-9)
        assert spec[1] > 100 * max(spec[0], spec[2:].max())

    def test_linearity(self, rng):
        c = rng.normal(size=512)
        assert np.allclose(control_spectrum(3.0 * c), 3.0 * control_spectrum(c), atol=1e-9)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            control_spectrum(np.array([]))
