import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hrcmc import catenoid, graph_solver as gs
from hrcmc.verify import annulus_problem


@pytest.fixture(scope="module")
def small_annulus():
    return gs.PlanarDomain(1.0, [(0.0, 0.3)], 1.0 / 48)


@pytest.fixture(scope="module")
def annulus_solution():
    dom, data = annulus_problem(0.05)
    return dom, data, gs.solve_dirichlet(dom, data, gs.GraphConfig(tol=1e-8, smallness=0.2))


def _catenoid_boundary(P, rad):
    # boundary angle a is measured in the xz-plane from +x; the extraction uses x = r sin(gamma)
    return lambda a: catenoid.horizontal_graph_extract(
        P, rad * np.ones_like(a), np.arctan2(rad * np.cos(a), rad * np.sin(a))) - 1


class TestOperator:
    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.05, 20.0))
    def test_constants_are_solutions(self, c):
        dom = gs.PlanarDomain(1.0, [(0.3, 0.2)], 1.0 / 16)
        M = gs.mean_curvature_graph(gs.GraphFunction.constant(dom, c))
        # no truncation error; cut-cell weights ~ 1/(theta h^2) amplify rounding only
        np.testing.assert_allclose(M, 1.0, rtol=0, atol=1e-10)

    def test_jacobian_at_one_is_laplacian(self, small_annulus):
        J = gs.jacobian(gs.GraphFunction.constant(small_annulus, 1.0))
        A, _ = gs.laplacian_matrix(small_annulus)
        assert abs(J - A).max() < 1e-12

    def test_jacobian_matches_finite_difference(self, small_annulus, rng):
        n = small_annulus.n_unknowns
        data = gs.DirichletData(0.05, [0.0])
        g = 1 + gs.harmonic_extension(small_annulus, data)
        gf = gs.GraphFunction(small_annulus, g, data)
        v = rng.standard_normal(n) * 1e-2
        t = 1e-5
        plus = gs.mean_curvature_graph(gs.GraphFunction(small_annulus, g + t * v, data))
        minus = gs.mean_curvature_graph(gs.GraphFunction(small_annulus, g - t * v, data))
        fd = (plus - minus) / (2 * t)
        np.testing.assert_allclose(gs.jacobian(gf) @ v, fd, atol=1e-6 * np.abs(fd).max())

    def test_nonpositive_graph_rejected(self, small_annulus):
        g = np.ones(small_annulus.n_unknowns)
        g[3] = 0.0
        with pytest.raises(gs.DomainError):
            gs.GraphFunction(small_annulus, g, gs.DirichletData())
        with pytest.raises(gs.DomainError):
            gs.mean_curvature_grid(np.zeros((5, 5)), 0.1)

    def test_wrong_size_rejected(self, small_annulus):
        with pytest.raises(ValueError):
            gs.GraphFunction(small_annulus, np.ones(3), gs.DirichletData())

    def test_linearization_is_laplacian(self):
        # (M(1 + t x^2) - 1)/t -> Lap(x^2) = 2, Richardson in t removes the O(t) term
        dom = gs.PlanarDomain(1.0, [], 1.0 / 32)
        X = dom.X[dom.mask]
        vals = []
        for t in (1e-2, 5e-3, 2.5e-3):
            d = gs.DirichletData(lambda a, t=t: t * np.cos(a) ** 2)
            vals.append((gs.mean_curvature_graph(gs.GraphFunction(dom, 1 + t * X**2, d)) - 1) / t)
        r1 = (4 * vals[1] - vals[0]) / 3
        r2 = (4 * vals[2] - vals[1]) / 3
        assert np.abs((4 * r2 - r1) / 3 - 2).max() < 1e-6

    def test_catenoid_end_patch(self):
        # the end of the catenoid is a horizontal cmc 1/2 graph over an annulus in the xz-plane
        P = catenoid.CatenoidParams.from_epsilon(0.05)
        h = 0.02
        dom = gs.PlanarDomain(2.0, [(0.0, 0.5)], h)
        X, Z = dom.X[dom.mask], dom.Z[dom.mask]
        R = np.hypot(X, Z)
        g = catenoid.horizontal_graph_extract(P, R, np.arctan2(X, Z))
        data = gs.DirichletData(_catenoid_boundary(P, 2.0), [_catenoid_boundary(P, 0.5)])
        err = np.abs(gs.mean_curvature_graph(gs.GraphFunction(dom, g, data)) - 1)
        # full-width stencils; cut cells next to the boundary are first order
        away = (R > 0.5 + 2 * h) & (R < 2.0 - 2 * h)
        assert err[away].max() < 1e-3
        assert np.percentile(err, 99) < 1e-3

    def test_catenoid_patch_second_order(self):
        P = catenoid.CatenoidParams.from_epsilon(0.05)
        errs = []
        for h in (0.02, 0.01):
            xs = np.arange(-1.4, 1.4 + 1e-9, h)
            XX, ZZ = np.meshgrid(xs, xs, indexing="ij")
            RR = np.maximum(np.hypot(XX, ZZ), 0.5)
            M = gs.mean_curvature_grid(catenoid.horizontal_graph_extract(P, RR, np.arctan2(XX, ZZ)), h)
            errs.append(np.abs(M - 1)[(RR > 0.7)[1:-1, 1:-1]].max())
        assert errs[0] < 1e-3
        assert 3.0 < errs[0] / errs[1] < 5.0


class TestDomain:
    def test_errors(self):
        with pytest.raises(gs.DomainError):
            gs.PlanarDomain(1.0, [(0.0, 0.3), (0.2, 0.3)])
        with pytest.raises(gs.DomainError):
            gs.PlanarDomain(1.0, [(0.9, 0.3)])
        with pytest.raises(gs.DomainError):
            gs.PlanarDomain(-1.0)

    def test_tangent_grid_lines(self):
        # grid lines tangent to the hole used to lose their crossing to rounding
        dom = gs.PlanarDomain(2.0, [(0.0, 0.5)], 0.02)
        assert dom.n_unknowns > 0

    def test_classification(self, small_annulus):
        X, Z = small_annulus.X, small_annulus.Z
        rho = np.hypot(X, Z)
        assert np.all((rho[small_annulus.mask] < 1.0) & (rho[small_annulus.mask] > 0.3))
        assert small_annulus.n_unknowns == small_annulus.mask.sum()

    def test_json_round_trip(self):
        dom = gs.PlanarDomain(1.5, [(-0.5, 0.2), (0.6, 0.3)], 0.05)
        back = gs.PlanarDomain.from_json(json.loads(json.dumps(dom.to_json())))
        assert back.to_json() == dom.to_json()
        np.testing.assert_array_equal(back.mask, dom.mask)

    def test_sampled_boundary_data(self, small_annulus):
        a = 2 * np.pi * np.arange(90) / 90
        d = gs.DirichletData(np.cos(a), [0.1])
        np.testing.assert_allclose(d.values(0, a), np.cos(a), atol=1e-14)
        np.testing.assert_allclose(d.values(0, [0.01]), np.cos(0.01), atol=1e-3)
        assert d.values(1, [1.0])[0] == 0.1
        assert d.sup_norm(small_annulus) == pytest.approx(1.0)


class TestDirichlet:
    def test_constant_data_is_exact(self, small_annulus):
        data = gs.DirichletData(0.05, [0.05])
        sol = gs.solve_dirichlet(small_annulus, data)
        assert sol.newton_steps == 0
        assert sol.residuals[-1] < 1e-10
        np.testing.assert_allclose(sol.graph.g, 1.05, atol=1e-12)

    def test_zero_data(self, small_annulus):
        sol = gs.solve_dirichlet(small_annulus, gs.DirichletData(0.0, [0.0]))
        np.testing.assert_allclose(sol.graph.g, 1.0, atol=1e-14)

    def test_annulus(self, annulus_solution):
        dom, data, sol = annulus_solution
        assert sol.newton_steps <= 6
        assert sol.residuals[-1] < 1e-8
        assert max(sol.quadratic_ratios) < 10.0

    def test_maximum_principle(self, annulus_solution):
        dom, data, sol = annulus_solution
        psi = data.values(0, np.linspace(0, 2 * np.pi, 721))
        assert sol.graph.g.min() >= 1 + min(psi.min(), 0.0) - 1e-12
        assert sol.graph.g.max() <= 1 + max(psi.max(), 0.0) + 1e-12

    def test_seeds_agree(self, annulus_solution):
        dom, data, sol = annulus_solution
        alt = gs.solve_dirichlet(dom, data, gs.GraphConfig(tol=1e-8, smallness=0.2, seed="constant"))
        assert np.abs(alt.graph.g - sol.graph.g).max() < 1e-9

    def test_picard_agrees(self, small_annulus):
        data = gs.DirichletData(lambda a: 0.1 * (1 + 0.3 * np.cos(2 * a)), [0.0])
        cfg = gs.GraphConfig(tol=1e-9, smallness=0.2)
        newton = gs.solve_dirichlet(small_annulus, data, cfg)
        picard = gs.solve_dirichlet(small_annulus, data, gs.GraphConfig(tol=1e-9, smallness=0.2, method="picard"))
        assert np.abs(newton.graph.g - picard.graph.g).max() < 1e-8
        assert picard.newton_steps > newton.newton_steps

    def test_collar_seed(self, small_annulus):
        data = gs.DirichletData(0.1, [0.05])
        g = gs.collar_seed(small_annulus, data, 0.2)
        rho = np.hypot(small_annulus.X[small_annulus.mask], small_annulus.Z[small_annulus.mask])
        np.testing.assert_array_equal(g[(rho > 0.5) & (rho < 0.8)], 1.0)
        assert np.all((g >= 1.0) & (g <= 1.1))

    def test_precondition(self, small_annulus):
        with pytest.raises(gs.PreconditionError):
            gs.solve_dirichlet(small_annulus, gs.DirichletData(0.5, [0.0]))

    def test_unknown_options(self, small_annulus):
        data = gs.DirichletData(0.01, [0.0])
        with pytest.raises(ValueError):
            gs.solve_dirichlet(small_annulus, data, gs.GraphConfig(seed="bogus"))
        with pytest.raises(ValueError):
            gs.solve_dirichlet(small_annulus, data, gs.GraphConfig(method="bogus"))

    def test_nonconvergence_keeps_history(self, small_annulus):
        data = gs.DirichletData(lambda a: 0.1 * np.cos(2 * a), [0.0])
        with pytest.raises(gs.NonConvergenceError) as exc:
            gs.solve_dirichlet(small_annulus, data, gs.GraphConfig(method="picard", max_iter_picard=1))
        assert len(exc.value.history) == 2

    def test_report(self, annulus_solution, tmp_path):
        dom, data, sol = annulus_solution
        rep = json.loads(sol.to_json())
        assert rep["newton_steps"] == sol.newton_steps
        assert rep["domain"] == dom.to_json()
        assert sol.to_json() == sol.to_json()
        path = tmp_path / "g.csv"
        sol.graph.to_csv(path)
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        assert rows.shape == (dom.n_unknowns, 3)
        np.testing.assert_array_equal(rows[:, 2], sol.graph.g)


class TestBoundaryDerivative:
    def test_constant(self, small_annulus):
        gf = gs.GraphFunction.constant(small_annulus, 1.2)
        for comp in (0, 1):
            _, d = gs.boundary_derivative(gf, comp)
            assert np.abs(d).max() < 1e-10

    def test_log_radial(self):
        dom = gs.PlanarDomain(1.0, [(0.0, 0.3)], 1.0 / 128)
        c = 0.1
        b = c / np.log(1 / 0.3)
        data = gs.DirichletData(c, [0.0])
        gf = gs.GraphFunction(dom, 1 + gs.harmonic_extension(dom, data), data)
        for comp, rad, sign in ((0, 1.0, 1.0), (1, 0.3, -1.0)):
            _, d = gs.boundary_derivative(gf, comp)
            assert np.abs(d - sign * b / rad).max() < 1e-4

    def test_inward_sign(self, annulus_solution):
        dom, data, sol = annulus_solution
        _, d_in = gs.boundary_derivative(sol.graph, 1, direction="inward")
        _, d_out = gs.boundary_derivative(sol.graph, 1)
        assert d_in.min() >= 0
        np.testing.assert_allclose(d_in, -d_out)
