import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hrcmc import catenoid as C
from hrcmc import spectral as SP
from hrcmc import verify
from hrcmc.catenoid import CatenoidParams

TH = C.periodic_theta(64)


@pytest.fixture(scope="module", params=[2.0, 4.0, 8.0])
def basis(request):
    return SP.assemble_cross_section(CatenoidParams(request.param))


class TestE:
    def test_examples(self):
        np.testing.assert_allclose(SP.apply_E(np.cos(TH)), 0.0, atol=1e-12)
        # direct computation gives E sin = -sin
        np.testing.assert_allclose(SP.apply_E(np.sin(TH)), -np.sin(TH), atol=1e-12)
        np.testing.assert_allclose(SP.apply_E(np.ones_like(TH)), np.cos(2 * TH), atol=1e-12)

    @pytest.mark.parametrize("n", [2, 4, 6, 10])
    def test_mode_coupling(self, n):
        c = SP.trig_basis(32, TH) @ SP.apply_E(np.cos(n * TH)) * (2 * np.pi / 64)
        support = set(np.nonzero(np.abs(c) > 1e-10)[0])
        assert support <= {n - 2, n, n + 2}

    def test_trig_basis_orthonormal(self):
        B = SP.trig_basis(16, TH)
        np.testing.assert_allclose(B @ B.T * (2 * np.pi / 64), np.eye(16), atol=1e-13)
        # symmetry theta -> pi - theta
        np.testing.assert_allclose(SP.trig_basis(16, np.pi - TH), B, atol=1e-13)


class TestCrossSection:
    def test_low_eigenvalues(self, basis):
        eps = basis.params.epsilon
        assert abs(basis.lambdas[0]) < 1e-10
        assert abs(basis.lambdas[1] + (1 + eps) ** 2) < 1e-8

    def test_ground_state(self, basis):
        psi0 = basis.evaluate(TH)[0]
        ref = np.sqrt(1 + np.cos(TH) ** 2 / basis.alpha**2)
        np.testing.assert_allclose(psi0 / psi0[0], ref / ref[0], rtol=1e-10)

    def test_ordering_and_simplicity(self, basis):
        assert np.all(np.diff(basis.lambdas) < 0)
        assert basis.asymmetry < 1e-12

    def test_weighted_orthonormal(self, basis):
        P = basis.evaluate(TH)[:12]
        G = basis.inner(P[:, None, :], P[None, :, :], TH)
        np.testing.assert_allclose(G, np.eye(12), atol=1e-10)

    def test_even_symmetry(self, basis):
        np.testing.assert_allclose(basis.evaluate(np.pi - TH), basis.evaluate(TH), atol=1e-12)

    def test_eigen_equation(self, basis):
        # psi'' + alpha^-2 E psi = lambda psi on samples
        P = basis.evaluate(TH)[:8]
        lhs = SP.d_spectral(P, 2, axis=1) + SP.apply_E(P, axis=1) / basis.alpha**2
        np.testing.assert_allclose(lhs, basis.lambdas[:8, None] * P, atol=1e-9)

    def test_indicial(self, basis):
        g = SP.indicial_roots(basis)
        eps = basis.params.epsilon
        assert g[1] == pytest.approx(1 + eps, abs=1e-8)
        assert g[2] > 2
        assert np.all(g[2:11] > np.arange(2, 11))

    def test_sign_convention(self, basis):
        # positive overlap with the unperturbed trig function
        B = SP.trig_basis(basis.n_modes, TH)
        P = basis.evaluate(TH)
        assert np.all(np.sum(P * B, axis=1) > 0)

    def test_perturbation_expansion(self):
        gaps = {a: verify.spectral_scaled_gaps(a) for a in (4.0, 8.0, 16.0)}
        for n in (2, 3, 4):
            assert verify.stable_constant(gaps[a][n] for a in gaps) < 2

    def test_flat_model(self):
        b = SP.assemble_cross_section(None, 12)
        np.testing.assert_allclose(b.lambdas, -np.arange(12.0) ** 2, atol=1e-12)
        np.testing.assert_allclose(b.gammas, np.arange(12.0), atol=1e-12)

    def test_too_few_modes(self):
        with pytest.raises(ValueError):
            SP.assemble_cross_section(CatenoidParams(2.0), 4)

    def test_ordering_error_on_truncation(self):
        b = SP.assemble_cross_section(CatenoidParams(2.0))
        bad = SP.SpectralBasis(b.params, b.n_modes, b.lambdas, b.gammas[[0, 1, 3, 2] + list(range(4, b.n_modes))], b.coeffs)
        with pytest.raises(SP.SpectralAccuracyError):
            SP.indicial_roots(bad)


class TestProjection:
    def test_unit_vectors(self, basis):
        psi = basis.evaluate(TH)
        c, low = SP.project_high(basis, psi[3])
        e3 = np.zeros(basis.n_modes)
        e3[3] = 1
        np.testing.assert_allclose(c, e3, atol=1e-10)
        np.testing.assert_allclose(low, 0, atol=1e-10)
        c, low = SP.project_high(basis, psi[0])
        np.testing.assert_allclose(c, 0, atol=1e-10)
        assert low[0] == pytest.approx(1.0, abs=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
    def test_idempotent(self, cs):
        b = SP.assemble_cross_section(CatenoidParams(4.0))
        B = SP.trig_basis(6, TH)
        phi = np.asarray(cs) @ B
        c1, _ = SP.project_high(b, phi)
        c2, _ = SP.project_high(b, SP.synthesize(b, c1, 64))
        np.testing.assert_allclose(c2, c1, atol=1e-10)

    def test_symmetry_violation(self, basis):
        with pytest.raises(SP.SymmetryError):
            SP.project_high(basis, np.cos(TH))

    def test_mode_expansion_round_trip(self, basis):
        s = np.linspace(0, 2, 11)
        coeffs = np.exp(-np.outer(s, basis.gammas)) * (np.arange(basis.n_modes) < 6)
        u = SP.synthesize(basis, coeffs, 64)
        ex = SP.ModeExpansion.from_field(basis, s, u)
        np.testing.assert_allclose(ex.coeffs, coeffs, atol=1e-12)
        np.testing.assert_allclose(ex.reconstruct(64), u, atol=1e-12)


class TestJacobiOperator:
    def test_flat_catenoid_operator(self):
        s = np.linspace(-4, 4, 801)
        for n in (2, 4):
            u = np.cos(n * TH)[None, :] * np.ones_like(s)[:, None]
            Lu = SP.apply_L(CatenoidParams(2.0), u, s, include_sech=True, drop_E=True)
            np.testing.assert_allclose(Lu, (2 / np.cosh(s)[:, None] ** 2 - n * n) * u, atol=1e-10)

    @pytest.mark.parametrize("a", [2.0, 4.0])
    def test_closed_form_fields(self, a):
        res = verify.jacobi_field_residuals(a)
        assert set(res) == {"tanh", "s_tanh", "cos_sech", "cos_growing", "sin_minus", "sin_plus"}
        assert max(res.values()) < 1e-7

    def test_geometric_operator_has_conformal_factor(self):
        P = CatenoidParams(2.0)
        s = np.linspace(-2, 2, 201)
        S, T = np.meshgrid(s, TH, indexing="ij")
        u = np.exp(-S**2) * np.cos(2 * T)
        ratio = SP.jacobi_operator(P, u, s) / SP.apply_L(P, u, s)
        np.testing.assert_allclose(ratio, C.conformal_factor(P, S, T), rtol=1e-10)

    def test_mode_one_rates(self):
        P = CatenoidParams(4.0)
        sol = SP.mode_one_solutions(P)
        k = 1 + P.epsilon
        # the limits are approached at the rate e^{-2s} of the sech^2 term
        s = np.array([10.0, 12.0, 14.0])
        a, b = sol.v_minus(s) * np.exp(k * s), sol.v_plus(s) * np.exp(-k * s)
        assert np.ptp(a) < 1e-6 * abs(a[0]) and abs(a[0]) > 0.1
        assert np.ptp(b) < 1e-6 * abs(b[0]) and abs(b[0]) > 0.1
        lo, hi = verify.mode_one_exponents(4.0)
        assert abs(lo) < 1e-3 and abs(hi) < 1e-3

    def test_mode_one_normalization(self):
        sol = SP.mode_one_solutions(CatenoidParams(2.0))
        assert sol.v_minus(0.0) == pytest.approx(1.0, abs=1e-14)
        assert sol.v_plus(0.0) == 0 and sol.dv_plus(0.0) == pytest.approx(1.0)
        assert sol.v_even(0.0) == pytest.approx(1.0) and sol.v_minus(np.ones((2, 3))).shape == (2, 3)

    def test_nondegeneracy_on_symmetric_grid(self):
        # only the cos-mode line operator has a kernel, spanned by sech s;
        # the sin mode's top eigenvalue is -(eps(2 + eps)), away from zero
        P = CatenoidParams(4.0)
        out = SP.low_mode_line_spectrum(P)
        w, V, s = out["cos"]
        assert abs(w[0]) < 1e-4
        ref = 1 / np.cosh(s)
        assert abs(V[:, 0] @ ref) / np.linalg.norm(ref) > 0.999
        assert np.all(np.abs(out["cos"][0][1:]) > 0.5)
        e = P.epsilon
        assert out["sin"][0][0] == pytest.approx(-e * (2 + e), rel=1e-3)
        assert np.all(np.abs(out["zero"][0]) > 1e-2)
