import json
import warnings

import numpy as np
import pytest

from hrcmc import catenoid as C
from hrcmc import end_solver as E
from hrcmc import spectral as SP
from hrcmc import verify
from hrcmc.catenoid import CatenoidParams

TH = C.periodic_theta(64)


@pytest.fixture(scope="module")
def setup():
    P = CatenoidParams.from_epsilon(0.05)
    return P, SP.assemble_cross_section(P), E.end_grid(P, P.S + 12, h=0.01)


def rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


class TestFlatOracle:
    def test_exponential_mode_zero(self, setup):
        P, _, s = setup
        F = np.exp(-2 * s)[:, None]
        U = E.flat_green_oracle(F, s, -2.5, S=P.S, tail_rate=2.0)
        assert np.abs(U[:, 0] - np.exp(-2 * s) / 4).max() / np.exp(-2 * P.S) < 1e-8

    def test_matches_closed_form(self, setup):
        # f_n = e^{mu s}: low modes give e^{mu s}/(mu^2 - n^2), the others
        # subtract the homogeneous solution that fixes u_n(S) = 0
        P, _, _ = setup
        s = E.end_grid(P, P.S + 12, h=0.005)
        mu = -2.5
        n = np.arange(5)
        U = E.flat_green_oracle(np.exp(mu * s)[:, None] * np.ones(5), s, mu, S=P.S)
        hom = np.where(n < 2.5, 0.0, np.exp(mu * P.S) * np.exp(-np.outer(s - P.S, n)))
        exact = (np.exp(mu * s)[:, None] - hom) / (mu**2 - n**2)
        assert np.abs(U - exact).max() / np.exp(mu * P.S) < 1e-8

    def test_homogeneous_input(self, setup):
        _, _, s = setup
        assert np.all(E.flat_green_oracle(np.zeros((len(s), 4)), s, -1.5) == 0)

    def test_errors(self, setup):
        _, _, s = setup
        F = np.zeros((len(s), 3))
        with pytest.raises(E.IndicialCollisionError):
            E.flat_green_oracle(F, s, -2.0)
        with pytest.raises(ValueError):
            E.flat_green_oracle(F, s, 0.5)
        with pytest.raises(E.WeightError):
            E.flat_green_oracle(F, s, -2.5, tail_rate=2.0)

    def test_green_degenerates_to_oracle(self):
        assert verify.linear_solver_checks(2.0)["flat_oracle"] < 1e-8


class TestPoisson:
    def test_single_mode(self, setup):
        P, b, s = setup
        phi = np.zeros(b.n_modes)
        phi[2] = 1.0
        w = E.poisson_op(b, phi, s).values
        expect = np.exp(-b.gammas[2] * (s - P.S))[:, None] * b.evaluate(TH)[2][None, :]
        np.testing.assert_allclose(w, expect, atol=1e-14)
        np.testing.assert_allclose(SP.project(b, w[0]), phi, atol=1e-9)

    def test_zero_and_low_modes(self, setup):
        _, b, s = setup
        assert np.all(E.poisson_op(b, np.zeros(4), s).values == 0)
        with pytest.raises(E.ProjectionError):
            E.poisson_op(b, [0.0, 1e-3, 1e-3], s)
        with pytest.raises(E.ProjectionError):
            E.boundary_coefficients(b, np.ones(64))

    def test_residual_and_trace(self):
        c = verify.linear_solver_checks(2.0)
        assert c["poisson_residual"] < 1e-8
        assert c["poisson_trace"] < 1e-9

    def test_norm_bound_constant(self):
        cs = []
        for eps in (0.1, 0.05):
            P = CatenoidParams.from_epsilon(eps)
            b = SP.assemble_cross_section(P)
            phi = np.zeros(b.n_modes)
            phi[2], phi[4] = 1.0, -0.5
            w = E.poisson_op(b, phi, E.end_grid(P))
            cs.append(w.norm() / (np.exp(2 * P.S) * np.linalg.norm(phi)))
        assert verify.stable_constant(cs) < 1.5


class TestGreen:
    def test_closed_form_exponential_input(self):
        assert verify.linear_solver_checks(2.0)["closed_form"] < 1e-8

    def test_zero_input(self, setup):
        _, b, s = setup
        out = E.green_op(b, E.WeightedField(s, TH, np.zeros((len(s), 64))))
        assert np.all(out.values == 0)

    def test_right_inverse(self, setup, rng):
        P, b, s = setup
        x = s - P.S
        c = np.zeros((len(s), b.n_modes))
        c[:, :8] = rng.normal(size=8) * np.exp(-2 * x)[:, None] * (1 + rng.normal(size=8) * np.sin(x)[:, None])
        f = SP.synthesize(b, c, 64)
        u = E.green_op(b, E.WeightedField(s, TH, f)).values
        assert np.abs(SP.project(b, u[0])[2:]).max() < 1e-12
        assert np.abs(SP.apply_L(P, u, s, include_sech=False) - f)[4:-4].max() / np.abs(f).max() < 1e-7

    def test_left_inverse(self, setup):
        # fields with zero n >= 2 boundary data decaying faster than the low indicial rates
        P, b, s = setup
        x = s - P.S
        c = np.zeros((len(s), b.n_modes))
        c[:, 0] = np.exp(-3 * x)
        c[:, 1] = 0.3 * np.exp(-3 * x)
        c[:, 2] = x * np.exp(-3 * x)
        c[:, 5] = 0.2 * x * np.exp(-4 * x)
        u = SP.synthesize(b, c, 64) * np.exp(-2 * P.S)
        f = SP.apply_L(P, u, s, include_sech=False)
        g = E.green_op(b, E.WeightedField(s, TH, f)).values
        m = int(0.75 * len(s))
        assert rel(g[4:m], u[4:m]) < 1e-7

    def test_slow_decay_rejected(self, setup):
        P, b, s = setup
        f = np.exp(-(s - P.S))[:, None] * np.ones(64)
        with pytest.raises(E.WeightError):
            E.green_op(b, E.WeightedField(s, TH, f))

    def test_low_mode_leakage(self, setup):
        P, b, s = setup
        c = np.zeros((len(s), b.n_modes))
        c[:, 0] = np.exp(-2 * (s - P.S))
        u = E.green_op(b, E.WeightedField(s, TH, SP.synthesize(b, c, 64)))
        leak = E.low_mode_leakage(b, u)
        assert leak["n0"] == pytest.approx(0.25, rel=1e-6) and abs(leak["n1"]) < 1e-12

    def test_amplification_worst_mode(self):
        gain, mode, gains = E.amplification(CatenoidParams.from_epsilon(0.05))
        assert mode == 2
        assert gain == max(gains.values())
        p, _ = verify.amplification_exponent([0.1, 0.05, 0.025])
        assert -1.2 <= p <= -0.8


class TestWeightedNorm:
    s = np.linspace(0, 10, 501)
    th = C.periodic_theta(8)

    def field(self, f, **kw):
        return E.WeightedField(self.s, self.th, f[:, None] * np.ones(8), **kw)

    def test_normalization(self):
        assert self.field(1 / np.cosh(self.s) ** 2).norm(k=0) == pytest.approx(1.0, rel=1e-12)

    def test_slow_decay_flagged(self):
        with pytest.warns(E.WeightDivergenceWarning):
            v = E.weighted_norm(self.field(np.exp(-self.s)), k=0)
        assert v == pytest.approx(np.cosh(10) ** 2 * np.exp(-10), rel=1e-12)

    def test_monotone_in_weight(self):
        u = self.field(np.exp(-3 * self.s))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert E.weighted_norm(u, 2, -2) >= E.weighted_norm(u, 2, -1)
            assert E.weighted_norm(u, 2, -2) >= E.weighted_norm(u, 0, -2)

    def test_boundary_norm_is_l2(self, setup):
        _, b, _ = setup
        assert E.boundary_norm(b, [0, 0, 3.0, 4.0]) == 5.0


class TestNonlinearEnd:
    def test_zero_data(self):
        P = CatenoidParams.from_epsilon(0.05)
        sol = E.solve_cmc_end(P, np.zeros(3))
        assert np.all(sol.w.values == 0)
        assert sol.final_H_deviation < 1e-10

    def test_converges_at_eps_005(self):
        P = CatenoidParams.from_epsilon(0.05)
        phi = np.zeros(3)
        phi[2] = 0.05**2
        sol = E.solve_cmc_end(P, phi)
        assert max(sol.contraction_factors) <= 0.5
        assert sol.iterations <= 20
        assert sol.final_H_deviation < 1e-4
        np.testing.assert_allclose(SP.project(SP.assemble_cross_section(P), sol.w.values[0])[2:], np.eye(30)[0] * phi[2],
                                   atol=1e-12)

    def test_iterates_stay_small(self):
        # the correction stays in a ball of radius O(eps) times |phi|-sized data
        P = CatenoidParams.from_epsilon(0.05)
        phi = np.zeros(3)
        phi[2] = 0.05**2
        sol = E.solve_cmc_end(P, phi)
        w0 = E.weighted_norm(sol.w0, 0, warn=False)
        assert E.weighted_norm(sol.v, 0, warn=False) <= 2 * P.epsilon * w0

    def test_leading_order_linearity(self):
        P = CatenoidParams.from_epsilon(0.05)
        ratios = []
        for sc in (1.0, 0.5, 0.25):
            phi = np.zeros(3)
            phi[2] = sc * 0.5 * P.epsilon**2
            w1 = E.solve_cmc_end(P, phi).w.values
            w2 = E.solve_cmc_end(P, 2 * phi).w.values
            ratios.append(np.abs(w2 - 2 * w1).max() / np.linalg.norm(2 * phi) ** 2)
        assert verify.stable_constant(ratios) < 1.2

    def test_preconditions(self):
        P = CatenoidParams.from_epsilon(0.05)
        with pytest.raises(ValueError, match="too large"):
            E.solve_cmc_end(P, [0, 0, 0.01])
        with pytest.raises(ValueError, match="epsilon0"):
            E.solve_cmc_end(CatenoidParams.from_epsilon(0.3), [0, 0, 1e-4])

    def test_no_contraction_reported(self):
        P = CatenoidParams.from_epsilon(0.05)
        cfg = E.EndConfig(max_iter=1)
        phi = np.zeros(3)
        phi[2] = 0.05**2
        with pytest.raises(E.NoContractionError) as exc:
            E.solve_cmc_end(P, phi, cfg)
        assert exc.value.epsilon == pytest.approx(0.05)
        assert len(exc.value.norms) == 1

    def test_report_and_csv(self, tmp_path):
        P = CatenoidParams.from_epsilon(0.1)
        phi = np.zeros(4)
        phi[3] = 0.5 * 0.1**2
        sol = E.solve_cmc_end(P, phi)
        rep = json.loads(sol.to_json(tmp_path / "r.json"))
        assert set(rep) == {"alpha", "epsilon", "phi_norm", "iterations", "contraction_factors",
                            "final_H_deviation", "low_mode_leakage"}
        assert set(rep["low_mode_leakage"]) == {"n0", "n1"}
        assert json.loads(open(tmp_path / "r.json").read()) == rep
        sol.to_csv(tmp_path / "w.csv")
        data = np.loadtxt(tmp_path / "w.csv", delimiter=",", skiprows=1)
        np.testing.assert_array_equal(data[:, 2], sol.w.values.ravel())

    def test_epsilon0_estimate(self):
        best, results = E.estimate_epsilon0([0.1, 0.05])
        assert best == 0.1
        assert all(r is not None and r < 1 for r in results.values())
