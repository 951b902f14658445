import numpy as np
import pytest

from hyperdecay import (
    FrequencyGrid,
    ModelParamsI,
    ModelParamsII,
    build_model_one,
    build_model_two,
    eigenvalues_at,
    fit_decay_type,
    mode_matrix,
    spectral_abscissa_curve,
    verify_type_bound,
)
from hyperdecay.spectral import claimed_type

from conftest import generic_params_one, generic_params_two

# regression fixture: first verified run, 601-point default grid
ABSCISSA_M6_XI1 = -0.03927240505004437


def assert_multiset_close(got, expected, tol=1e-10):
    got = list(np.asarray(got, dtype=complex))
    for e in expected:
        idx = int(np.argmin([abs(g - e) for g in got]))
        assert abs(got[idx] - e) <= tol, f"no match for {e}; residual {abs(got[idx] - e)}"
        got.pop(idx)
    assert not got


class TestGrid:
    def test_default_design(self):
        g = FrequencyGrid.log()
        assert len(g) == 601
        assert np.isclose(g.points[0], 1e-3) and np.isclose(g.points[-1], 1e3)

    @pytest.mark.parametrize("pts", [[], [0.0, 1.0], [2.0, 1.0], [-1.0, 1.0]])
    def test_rejects_bad_points(self, pts):
        with pytest.raises(ValueError):
            FrequencyGrid(np.array(pts))


class TestModeMatrix:
    def test_xi_zero_is_L(self, model1_m6):
        M = mode_matrix(model1_m6, 0.0)
        assert np.array_equal(M, model1_m6.L)

    def test_entries_at_xi1(self, model1_m6):
        M = mode_matrix(model1_m6, 1.0)
        assert M[0, 1] == 1j and M[0, 3] == 1.0

    def test_conjugate_at_negative_xi(self, model2_m6):
        M = mode_matrix(model2_m6, -1.0)
        assert np.array_equal(M, np.conj(mode_matrix(model2_m6, 1.0)))


class TestEigenvalues:
    def test_model1_m6_xi0(self, model1_m6):
        # analytic: -L has the 2x2 skew block (eigs +-i), gamma-damping (-1),
        # and a three-dimensional kernel
        got = eigenvalues_at(model1_m6, 0.0)
        assert_multiset_close(got, [0, 0, 0, -1, 1j, -1j], tol=1e-12)

    def test_model2_m6_xi0(self, model2_m6):
        # analytic block eigenvalues: -(1 +- i sqrt3)/2, -+i, 0, 0
        got = eigenvalues_at(model2_m6, 0.0)
        assert_multiset_close(
            got, [0, 0, -(1 + 1j * np.sqrt(3)) / 2, -(1 - 1j * np.sqrt(3)) / 2, 1j, -1j], tol=1e-12
        )

    def test_sorted_by_real_then_imag(self, model1_m6):
        eta = eigenvalues_at(model1_m6, 2.7)
        assert all(
            (eta[i].real > eta[i + 1].real - 1e-14)
            or (np.isclose(eta[i].real, eta[i + 1].real) and eta[i].imag <= eta[i + 1].imag)
            for i in range(len(eta) - 1)
        )

    @pytest.mark.parametrize(
        "sys_name,gamma_field",
        [("model1_m6", 1.0), ("model2_m8", 1.0)],
    )
    def test_trace_identity(self, sys_name, gamma_field, request):
        sys = request.getfixturevalue(sys_name)
        for xi in (0.0, 0.3, 1.0, 17.0, 1e3):
            eta = eigenvalues_at(sys, xi)
            assert abs(eta.sum() - (-sys.gamma)) < 1e-9

    def test_determinant_identity(self, rng):
        sys = build_model_one(generic_params_one(8))
        for xi in (1e-3, 0.7, 5.0, 300.0):
            eta = eigenvalues_at(sys, xi)
            det = np.linalg.det(-(1j * xi * sys.A + sys.L))
            assert abs(np.prod(eta) - det) <= 1e-8 * max(1.0, abs(det))

    def test_conjugate_symmetry(self):
        sys = build_model_two(generic_params_two(6))
        for xi in (0.2, 1.0, 40.0):
            eta = eigenvalues_at(sys, xi)
            eta_neg = eigenvalues_at(sys, -xi)
            assert_multiset_close(eta_neg, np.conj(eta), tol=1e-10)
            # spectrum at +xi is closed under conjugation as a multiset
            assert_multiset_close(eta, np.conj(eta), tol=1e-10)


class TestAbscissaCurve:
    def test_strictly_negative_model1_m6(self, model1_m6, grid121):
        curve = spectral_abscissa_curve(model1_m6, grid121)
        assert (curve.abscissa < 0).all()

    def test_strictly_negative_m8_needs_precision(self, model1_m8, grid121):
        # at xi = 1e-3 the true abscissa is ~ -2.5e-25, far below double noise
        curve = spectral_abscissa_curve(model1_m8, grid121)
        assert (curve.abscissa < 0).all()
        assert curve.abscissa[0] > -1e-20

    def test_abscissa_even_in_xi(self, model1_m6):
        a_pos = float(eigenvalues_at(model1_m6, 2.0).real.max())
        a_neg = float(eigenvalues_at(model1_m6, -2.0).real.max())
        assert np.isclose(a_pos, a_neg, atol=1e-12)

    def test_regression_xi1(self, model1_m6):
        got = float(eigenvalues_at(model1_m6, 1.0).real.max())
        assert abs(got - ABSCISSA_M6_XI1) < 1e-12


class TestTypeFit:
    def test_model1_m6_sharp_type(self, model1_m6, grid241):
        fit = fit_decay_type(spectral_abscissa_curve(model1_m6, grid241))
        assert abs(fit.p_hat - 2) <= 0.2 and abs(fit.q_hat - 3) <= 0.3
        assert fit.residual_low < 0.05 and fit.residual_high < 0.05

    def test_model2_m4_offdegenerate_type(self, grid241):
        sys = build_model_two(ModelParamsII(m=4, a={4: 2.0}))
        fit = fit_decay_type(spectral_abscissa_curve(sys, grid241))
        assert abs(fit.p_hat - 1) <= 0.1 and abs(fit.q_hat - 2) <= 0.2

    def test_model2_m4_default_is_degenerate(self, grid241):
        # equal wave speeds: the sharp type collapses to (1,1); the (1,2)
        # bound of the general class still holds (it is weaker)
        sys = build_model_two(ModelParamsII(m=4))
        curve = spectral_abscissa_curve(sys, grid241)
        fit = fit_decay_type(curve)
        assert abs(fit.p_hat - 1) <= 0.1 and abs(fit.q_hat - 1) <= 0.1
        assert verify_type_bound(curve, 1, 2).holds

    def test_window_errors(self, model1_m6):
        small = FrequencyGrid.log(1e-1, 1e1, 31)
        curve = spectral_abscissa_curve(model1_m6, small)
        with pytest.raises(ValueError):
            fit_decay_type(curve)


class TestTypeBound:
    @pytest.mark.parametrize("m", [6, 8])
    def test_claimed_bound_model1(self, m, grid241, request):
        sys = request.getfixturevalue(f"model1_m{m}")
        curve = spectral_abscissa_curve(sys, grid241)
        res = verify_type_bound(curve, m - 3, m - 2)
        assert res.holds and res.c_est > 0 and not res.violations

    @pytest.mark.parametrize("m", [6, 8])
    def test_claimed_bound_model2(self, m, grid241, request):
        sys = request.getfixturevalue(f"model2_m{m}")
        p, q = claimed_type(sys)
        res = verify_type_bound(spectral_abscissa_curve(sys, grid241), p, q)
        assert res.holds and res.c_est > 0

    def test_constant_bound_fails(self, model1_m6, grid241):
        res = verify_type_bound(spectral_abscissa_curve(model1_m6, grid241), 0, 0)
        assert res.c_est <= 0 or res.c_est < 1e-10

    def test_bound_monotone_consistency_m10(self, grid121):
        sys = build_model_one(ModelParamsI(m=10))
        res = verify_type_bound(spectral_abscissa_curve(sys, grid121), 7, 8)
        assert res.holds
