"""
Verification suites: each suite runs the invariant checks of one module and
returns a SuiteReport of records

    {tag, quantity, computed, expected, tolerance, pass}

with pass = |computed - expected| <= tolerance.  One-sided bounds are
written as expected = 0, tolerance = bound on a nonnegative quantity.
Reports are sorted by (tag, quantity) and contain no timings, so equal
configs give byte-identical JSON.
"""
import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import catenoid, end_solver, fermi, geometry, graph_solver, spectral
from .catenoid import CatenoidParams
from .stencils import d_fd, d_spectral

logger = logging.getLogger(__name__)

SUITES = ("geometry", "catenoid", "fermi", "spectral", "linear", "end", "graph")


@dataclass
class VerifyConfig:
    alpha: float = 2.0
    epsilon: float = 0.05
    alphas: tuple = (1.0, 2.0, 4.0)
    alphas_spectral: tuple = (4.0, 8.0, 16.0)
    epsilons_end: tuple = (0.1, 0.05, 0.025)
    epsilons_horo: tuple = (0.05, 0.025, 0.0125)
    grid: int = 128
    s_max: Optional[float] = None
    modes: int = spectral.DEFAULT_MODES
    tol: float = 1e-8
    graph_h: float = 1.0 / 128
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for k in ("alphas", "alphas_spectral", "epsilons_end", "epsilons_horo"):
            if k in known:
                known[k] = tuple(float(x) for x in known[k])
        return cls(**known)


@dataclass
class SuiteReport:
    suite: str
    records: List[dict] = field(default_factory=list)

    def add(self, tag, quantity, computed, expected, tolerance):
        computed = float(computed)
        ok = bool(np.isfinite(computed) and abs(computed - expected) <= tolerance)
        self.records.append({"tag": tag, "quantity": quantity, "computed": computed,
                             "expected": float(expected), "tolerance": float(tolerance), "pass": ok})

    def fail(self, tag, quantity, exc):
        self.records.append({"tag": tag, "quantity": quantity, "computed": None, "expected": None,
                             "tolerance": None, "pass": False, "error": f"{type(exc).__name__}: {exc}"})

    def extend(self, other: "SuiteReport"):
        self.records.extend(other.records)

    @property
    def passed(self):
        return all(r["pass"] for r in self.records)

    def sorted_records(self):
        return sorted(self.records, key=lambda r: (r["tag"], r["quantity"]))

    def to_json(self):
        return json.dumps({"suite": self.suite, "passed": self.passed, "records": self.sorted_records()},
                          indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        cols = ["tag", "quantity", "computed", "expected", "tolerance", "pass"]
        w = csv.writer(buf)
        w.writerow(cols)
        for r in self.sorted_records():
            w.writerow([r.get(c) for c in cols])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# helpers shared with the tests


def catenoid_mean_curvature_error(alpha, n=128, s_half=3.0):
    """max |H - 1/2| of FD mean curvature on an n x n (s, theta) grid, interior s rows."""
    P = CatenoidParams(alpha)
    s = np.linspace(-s_half, s_half, n)
    th = catenoid.periodic_theta(n)
    S, T = np.meshgrid(s, th, indexing="ij")
    X = catenoid.immerse_uhp(P, S, T)
    H = fermi.numerical_mean_curvature(X, s, th, orientation=catenoid.unit_normal(P, S, T))
    return float(np.abs(H[2:-2] - 0.5).max())


def _gauss_curvature_orthogonal(E, G, hs):
    """Intrinsic curvature of E ds^2 + G dtheta^2 by differences (theta periodic)."""
    r = np.sqrt(E * G)
    Gs = d_fd(G, hs, 1, 0)
    Et = d_spectral(E, 1, axis=1)
    return -0.5 / r * (d_fd(Gs / r, hs, 1, 0) + d_spectral(Et / r, 1, axis=1))


def closed_form_consistency(alpha, n=128, s_half=3.0):
    """Relative deviations of FD geometry from the closed forms at interior nodes.

    Keys: metric (FD induced metric vs closed form), gauss_curvature (FD
    curvature of the FD metric vs closed form), ambient (sectional curvature
    of the FD tangent plane vs closed form), gauss_equation (all-FD
    K - K_amb - det(shape operator)).  Curvatures are relative to max |K|.
    """
    P = CatenoidParams(alpha)
    s = np.linspace(-s_half, s_half, n)
    th = catenoid.periodic_theta(n)
    S, T = np.meshgrid(s, th, indexing="ij")
    X = catenoid.immerse_uhp(P, S, T)
    I, II, nu, _ = fermi.numerical_forms(X, s, th, orientation=catenoid.unit_normal(P, S, T))
    gss, _, gtt = catenoid.metric_closed_form(P, S, T)
    inner = slice(4, -4)
    metric = max(np.abs(I[..., 0, 0] / gss - 1)[inner].max(),
                 np.abs(I[..., 1, 1] / gtt - 1)[inner].max(),
                 np.abs(I[..., 0, 1] / np.sqrt(gss * gtt))[inner].max())
    K = catenoid.intrinsic_curvature(P, S, T)
    scale = np.abs(K).max()
    K_fd = _gauss_curvature_orthogonal(I[..., 0, 0], I[..., 1, 1], s[1] - s[0])
    K_amb = geometry.sectional_curvature(nu, X)
    det_shape = np.linalg.det(np.linalg.solve(I, II))
    return {
        "metric": float(metric),
        "gauss_curvature": float(np.abs(K_fd - K)[inner].max() / scale),
        "ambient": float(np.abs(K_amb - catenoid.ambient_sectional(S, T))[inner].max()),
        "gauss_equation": float(np.abs(K_fd - K_amb - det_shape)[inner].max() / scale),
    }


def gauss_equation_residual(alpha, n=200, seed=0):
    """max |K_amb - K_sigma + k1 k2| at random nodes, exact-derivative forms."""
    rng = np.random.default_rng(seed)
    P = CatenoidParams(alpha)
    s = np.sort(rng.uniform(-4, 4, n))
    th = np.sort(rng.uniform(0, 2 * np.pi, n))
    g = catenoid.build_grid(P, s, th)
    kk = np.linalg.det(np.linalg.solve(g.first_form, g.second_form))
    res = geometry.sectional_curvature(g.normal, g.points) - g.K_sigma + kk
    return float(np.abs(res).max())


def horocylinder_ratio(epsilon, n_r=31, n_gamma=37):
    """max |g - (1 - eps log eps + eps log 2r)| / (eps log eps)^2 over 1/2 <= r <= 2."""
    P = CatenoidParams.from_epsilon(epsilon)
    r = np.linspace(0.5, 2.0, n_r)
    gm = np.linspace(0.05 * np.pi, 0.95 * np.pi, n_gamma)
    R, G = np.meshgrid(r, gm, indexing="ij")
    g = catenoid.horizontal_graph_extract(P, R, G)
    return float(np.abs(g - catenoid.horocylinder_approximation(epsilon, R)).max() / (epsilon * np.log(epsilon)) ** 2)


def spectral_scaled_gaps(alpha, modes=spectral.DEFAULT_MODES, ns=(2, 3, 4)):
    """alpha^4 |lambda_n + n^2 + n^2 / (2 alpha^2)| for the requested n."""
    b = spectral.assemble_cross_section(CatenoidParams(alpha), modes)
    return {n: float(alpha**4 * abs(b.lambdas[n] + n * n + n * n / (2 * alpha**2))) for n in ns}


def stable_constant(values, ratio=2.0):
    """max/min of positive values; 'stable' means at most `ratio`."""
    v = np.asarray(list(values), float)
    return float(v.max() / v.min())


def jacobi_field_residuals(alpha, s_half=6.0, n_s=1201, n_theta=64):
    """max |L f| / max |f| on interior rows for each of the six low-mode Jacobi fields."""
    P = CatenoidParams(alpha)
    fields = spectral.jacobi_fields(P)
    s = np.linspace(-s_half, s_half, n_s)
    th = catenoid.periodic_theta(n_theta)
    S, T = np.meshgrid(s, th, indexing="ij")
    out = {}
    for name, f in fields.items():
        u = f(S, T)
        r = spectral.apply_L(P, u, s)
        out[name] = float(np.abs(r[4:-4]).max() / np.abs(u).max())
    return out


def mode_one_exponents(alpha, s_lo=4.0, s_hi=10.0):
    """(log-slope of v_minus + (1+eps), log-slope of v_plus - (1+eps))."""
    P = CatenoidParams(alpha)
    sol = spectral.mode_one_solutions(P)
    k = 1.0 + P.epsilon
    return (spectral.log_slope(sol.v_minus, s_lo, s_hi) + k, spectral.log_slope(sol.v_plus, s_lo, s_hi) - k)


def riccati_sandwich(epsilon, n_nodes=100, span=8.0, seed=0):
    """Worst margin of lower <= kappa(t) <= upper over random end nodes and |t| <= 1/4.

    Also returns max |sigma_1| and the max spread of sigma_2 along each
    normal geodesic.  Nodes are drawn from s in [S_eps, S_eps + span].
    """
    rng = np.random.default_rng(seed)
    P = CatenoidParams.from_epsilon(epsilon)
    S = P.S
    margin, sig1, sig2 = np.inf, 0.0, 0.0
    ts = np.linspace(-fermi.TUBE_RADIUS, fermi.TUBE_RADIUS, 11)
    for _ in range(n_nodes):
        s = rng.uniform(S, S + span)
        th = rng.uniform(0, 2 * np.pi)
        t = rng.uniform(-fermi.TUBE_RADIUS, fermi.TUBE_RADIUS)
        st = fermi.tubular_curvatures(P, s, th, t)
        for k0, kt in ((st.kappa1_0, st.kappa1_t), (st.kappa2_0, st.kappa2_t)):
            up, lo = fermi.riccati_comparison(k0, t)
            a, b = (lo, up) if t >= 0 else (up, lo)
            margin = min(margin, kt - a, b - kt)
        C = fermi.curvature_along_normal(P, s, th, ts)
        sig1 = max(sig1, float(np.abs(C[:, 1]).max()))
        sig2 = max(sig2, float(np.ptp(C[:, 0])))
    return float(margin), sig1, sig2


def linear_solver_checks(alpha, modes=spectral.DEFAULT_MODES, h=0.01, span=8.0):
    """Residuals of the Poisson and Green operators on the end grid.

    Keys: green_residual (max |L G f - f| / max |f|, interior rows),
    green_trace (n >= 2 coefficients of G f at S), poisson_residual,
    poisson_trace, closed_form (exponential input against its closed form),
    flat_oracle (flat-model recursions vs independent Simpson quadrature).
    """
    P = CatenoidParams(alpha)
    basis = spectral.assemble_cross_section(P, modes)
    S = P.S
    s = end_solver.end_grid(P, S + span, h=h)
    th = catenoid.periodic_theta(64)
    Sg, T = np.meshgrid(s, th, indexing="ij")
    out = {}
    # source with content on modes 0, 1 and higher, decaying like e^{-2s}
    f = np.exp(-2 * (Sg - S)) * (1.0 + np.cos(2 * T) + 0.3 * np.sin(T) + 0.2 * np.sin(3 * T))
    u = end_solver.green_op(basis, end_solver.WeightedField(s, th, f)).values
    r = spectral.apply_L(P, u, s, include_sech=False) - f
    out["green_residual"] = float(np.abs(r[4:-4]).max() / np.abs(f).max())
    out["green_trace"] = float(np.abs(spectral.project(basis, u[0])[2:]).max())
    phi = np.zeros(modes)
    phi[2], phi[3], phi[6] = 1e-3, -5e-4, 2e-4
    w = end_solver.poisson_op(basis, phi, s).values
    # s-derivatives exactly (w is a sum of exponentials), theta part as in apply_L
    coeffs = phi[None, :] * np.exp(-np.outer(s - S, basis.gammas))
    w_ss = spectral.synthesize(basis, coeffs * basis.gammas**2, len(th))
    ang = spectral.apply_L(P, w, s, include_sech=False) - d_fd(w, s[1] - s[0], 2, 0)
    out["poisson_residual"] = float(np.abs(w_ss + ang).max() / np.abs(w).max())
    out["poisson_trace"] = float(np.abs(spectral.project(basis, w[0]) - phi).max())
    # closed form: f = e^{-2s} in mode n, u = (e^{-2S} e^{-g(s-S)} - e^{-2s}) / (g^2 - 4)
    err = 0.0
    for n in (2, 3, 5, 9):
        F = np.zeros((len(s), modes))
        F[:, n] = np.exp(-2 * s)
        g = basis.gammas[n]
        exact = (np.exp(-2 * S) * np.exp(-g * (s - S)) - np.exp(-2 * s)) / (g * g - 4)
        U = end_solver.mode_green(F, s, basis.gammas)
        err = max(err, float(np.abs(U[:, n] - exact).max() / np.exp(-2 * S)))
    out["closed_form"] = err
    # flat model: gamma_n = n, oracle written from the double integrals
    flat = spectral.assemble_cross_section(None, 8)
    Fm = np.zeros((len(s), 8))
    # pure e^{-2s} inputs: both methods complete the tail at that rate
    Fm[:, :4] = np.exp(-2 * (s - S))[:, None] * np.array([1.0, 0.5, -0.7, 0.3])
    U = end_solver.mode_green(Fm, s, flat.gammas)
    O = end_solver.flat_green_oracle(Fm, s, -1.5, S=S, tail_rate=2.0)
    out["flat_oracle"] = float(np.abs(U - O)[: int(0.75 * len(s))].max())
    return out


def amplification_exponent(epsilons, modes=spectral.DEFAULT_MODES):
    """Least-squares exponent p in gain ~ eps^p, with the gains."""
    gains = [end_solver.amplification(CatenoidParams.from_epsilon(e), modes)[0] for e in epsilons]
    p = np.polyfit(np.log(epsilons), np.log(gains), 1)[0]
    return float(p), gains


def end_contraction(epsilons, config: Optional[end_solver.EndConfig] = None, mode=2):
    """Nonlinear solves with phi = eps^2 psi_mode; returns one summary dict per eps.

    The contraction factor is the ratio of the first two Picard increments;
    later ratios sit at the rounding floor of the source evaluation.
    """
    out = []
    for eps in epsilons:
        P = CatenoidParams.from_epsilon(eps)
        phi = np.zeros(mode + 1)
        phi[mode] = eps**2
        sol = end_solver.solve_cmc_end(P, phi, config)
        out.append({"epsilon": eps, "factor": sol.contraction_factors[0] if sol.contraction_factors else 0.0,
                    "iterations": sol.iterations, "H_deviation": sol.final_H_deviation,
                    "phi_norm": sol.phi_norm, "leakage": sol.low_mode_leakage})
    return out


def annulus_problem(epsilon=0.05, h=1.0 / 128):
    """Annulus r = 1 minus B_0.3, psi_out = eps|log eps| (1 + 0.3 cos 2a), psi_in = 0."""
    dom = graph_solver.PlanarDomain(1.0, [(0.0, 0.3)], h)
    amp = epsilon * abs(np.log(epsilon))
    data = graph_solver.DirichletData(lambda a: amp * (1 + 0.3 * np.cos(2 * a)), [0.0])
    return dom, data


# ---------------------------------------------------------------------------
# suites


def _guard(rep: SuiteReport, tag, quantity):
    """Decorator-free try block: record module errors as failures."""

    class _G:
        def __enter__(self):
            return self

        def __exit__(self, et, ev, tb):
            if et is not None and issubclass(et, Exception):
                logger.warning("%s/%s failed: %s", tag, quantity, ev)
                rep.fail(tag, quantity, ev)
                return True
            return False

    return _G()


def suite_geometry(cfg: VerifyConfig) -> SuiteReport:
    rep = SuiteReport("geometry")
    rng = np.random.default_rng(cfg.seed)
    tag = "geometry.metric"
    rep.add(tag, "metric at y=2 on d_x", geometry.metric_uhp([0, 2, 0], [1, 0, 0], [1, 0, 0]), 0.25, 1e-15)
    p = np.array([0.3, 0.7, 1.1])
    rep.add(tag, "ball round trip", np.abs(geometry.ball_to_uhp(geometry.uhp_to_ball(p)) - p).max(), 0.0, 1e-14)
    tag = "geometry.curvature"
    ex, ey, ez = np.eye(3)
    rep.add(tag, "Rm(dx,dy,dy,dx) at (0,1,0)", geometry.curvature_tensor([0, 1, 0], ex, ey, ey, ex), -1.0, 1e-14)
    rep.add(tag, "K(nu = dz)", geometry.sectional_curvature(ez, [0, 1, 0]), -1.0, 1e-14)
    pts = np.column_stack([rng.normal(size=200), rng.uniform(0.2, 3, 200), rng.normal(size=200)])
    v = rng.normal(size=(200, 3))
    v /= np.sqrt(geometry.metric_uhp(pts, v, v))[:, None]
    K = geometry.sectional_curvature(v, pts)
    rep.add(tag, "K + Ric + 1 on random unit nu", np.abs(K + geometry.ricci(v, pts) + 1).max(), 0.0, 1e-14)
    rep.add(tag, "K outside [-1, 0]", max(0.0, K.max(), -1 - K.min()), 0.0, 1e-14)
    tag = "geometry.geodesic"
    t = np.linspace(-2, 2, 9)
    Y = geometry.exp_map(np.array([0, 1, 0.0]), ey, t)
    rep.add(tag, "y-axis geodesic vs e^t", np.abs(Y[:, 1] - np.exp(t)).max(), 0.0, 1e-12)
    # geodesic equation by differences: X'' + Gamma(X', X') = 0
    p0, v0 = np.array([0.4, 1.3, -0.2]), np.array([0.7, -0.5, 0.6])
    dt = 1e-3
    Xm, X0, Xp = (geometry.exp_map(p0, v0, 0.5 + k * dt) for k in (-1, 0, 1))
    acc = (Xp - 2 * X0 + Xm) / dt**2
    vel = (Xp - Xm) / (2 * dt)
    res = acc + np.einsum("kab,a,b->k", geometry.christoffel(X0), vel, vel)
    rep.add(tag, "geodesic equation residual", np.abs(res).max(), 0.0, 1e-6)
    tag = "geometry.isometry"
    q = pts[::-1]
    d0 = geometry.hyperbolic_distance(pts, q)
    worst = 0.0
    for kind, a in (("parabolic", 0.7), ("dilation", 2.5), ("rotation", 0.9), ("inversion", 0.0)):
        d1 = geometry.hyperbolic_distance(geometry.isometry(kind, pts, a), geometry.isometry(kind, q, a))
        worst = max(worst, float(np.abs(d1 - d0).max() / max(1.0, d0.max())))
    rep.add(tag, "distance preserved by isometries", worst, 0.0, 1e-10)
    return rep


def suite_catenoid(cfg: VerifyConfig) -> SuiteReport:
    rep = SuiteReport("catenoid")
    alphas = sorted(set(cfg.alphas) | {cfg.alpha})
    for a in alphas:
        with _guard(rep, "catenoid.cmc", f"alpha={a}"):
            rep.add("catenoid.cmc", f"max |H - 1/2|, alpha={a}", catenoid_mean_curvature_error(a, cfg.grid), 0.0, 1e-5)
        with _guard(rep, "catenoid.closed_form", f"alpha={a}"):
            cc = closed_form_consistency(a, cfg.grid)
            for k, v in sorted(cc.items()):
                rep.add("catenoid.closed_form", f"{k}, alpha={a}", v, 0.0, 1e-5)
        with _guard(rep, "catenoid.gauss_equation", f"alpha={a}"):
            rep.add("catenoid.gauss_equation", f"max residual, alpha={a}", gauss_equation_residual(a, seed=cfg.seed), 0.0, 1e-6)
    with _guard(rep, "catenoid.profile", "identities"):
        P = CatenoidParams(cfg.alpha)
        # |phi'| <= alpha*, so cos phi stays positive for u < pi / (2 alpha*)
        prof = catenoid.integrate_profile(P, 0.9 * np.pi / (2 * P.alpha_star))
        r1, r2 = prof.identity_residuals()
        rep.add("catenoid.profile", "phi/phi* identity residual", max(np.abs(r1).max(), np.abs(r2).max()), 0.0, 1e-8)
    with _guard(rep, "catenoid.horocylinder", "ratios"):
        ratios = [horocylinder_ratio(e) for e in cfg.epsilons_horo]
        for e, r in zip(cfg.epsilons_horo, ratios):
            rep.add("catenoid.horocylinder", f"ratio, eps={e}", r, 0.0, 10.0)
        rep.add("catenoid.horocylinder", "max/min ratio across eps", stable_constant(ratios), 1.0, 1.0)
    return rep


def suite_fermi(cfg: VerifyConfig) -> SuiteReport:
    rep = SuiteReport("fermi")
    with _guard(rep, "fermi.riccati", "sandwich"):
        margin, sig1, sig2 = riccati_sandwich(cfg.epsilon, seed=cfg.seed)
        rep.add("fermi.riccati", "comparison violation", max(0.0, -margin), 0.0, 1e-10)
        rep.add("fermi.curvature_operator", "max |sigma_1|", sig1, 0.0, 1e-8)
        rep.add("fermi.curvature_operator", "spread of sigma_2 along normals", sig2, 0.0, 1e-8)
    P = CatenoidParams.from_epsilon(cfg.epsilon)
    with _guard(rep, "fermi.metric_expansion", "checks"):
        worst = {}
        for s, th, t in ((P.S + 0.5, 0.3, 0.1), (P.S + 2.0, 1.7, -0.2), (P.S + 4.0, 4.0, 0.05)):
            r = fermi.fermi_metric_check(P, s, th, t)
            for q in ("remainder_over_t2", "gamma3_vs_dtg", "gamma3_at_0_vs_h"):
                worst[q] = max(worst.get(q, 0.0), r.max(q))
        rep.add("fermi.metric_expansion", "|g~ - g + 2ht| / t^2", worst["remainder_over_t2"], 0.0, 10.0)
        rep.add("fermi.metric_expansion", "Gamma3 + d_t g / 2", worst["gamma3_vs_dtg"], 0.0, 1e-5)
        rep.add("fermi.metric_expansion", "Gamma3 at t=0 vs h", worst["gamma3_at_0_vs_h"], 0.0, 1e-6)
    with _guard(rep, "fermi.normal_graph", "Q"):
        s = end_solver.end_grid(P, P.S + 4.0, h=0.04)
        th = catenoid.periodic_theta(64)
        grid = catenoid.build_grid(P, s, th)
        S, T = np.meshgrid(s, th, indexing="ij")
        zero = fermi.nonlinear_remainder_Q(fermi.NormalGraphField(grid, np.zeros(grid.shape)))
        rep.add("fermi.normal_graph", "Q(0)", np.abs(zero).max(), 0.0, 0.0)
        ratios = []
        for d in (1e-3, 5e-4):
            w = d * np.exp(-2 * (S - P.S)) * np.sin(2 * T)
            Q = fermi.nonlinear_remainder_Q(fermi.NormalGraphField(grid, w))
            ratios.append(np.abs(Q[4:-4]).max() / d**2)
        rep.add("fermi.normal_graph", "Q/d^2 at d vs d/2, relative change", abs(ratios[1] / ratios[0] - 1), 0.0, 0.05)
    return rep


def suite_spectral(cfg: VerifyConfig) -> SuiteReport:
    rep = SuiteReport("spectral")
    for a in sorted(set(cfg.alphas) | {cfg.alpha} | set(cfg.alphas_spectral)):
        with _guard(rep, "spectral.low_eigenvalues", f"alpha={a}"):
            P = CatenoidParams(a)
            b = spectral.assemble_cross_section(P, cfg.modes)
            rep.add("spectral.low_eigenvalues", f"lambda_0, alpha={a}", b.lambdas[0], 0.0, 1e-10)
            rep.add("spectral.low_eigenvalues", f"lambda_1 + (1+eps)^2, alpha={a}", b.lambdas[1] + (1 + P.epsilon) ** 2, 0.0, 1e-8)
            g = b.gammas
            order = [g[0], 1 + P.epsilon, 2.0] + list(g[2:11])
            rep.add("spectral.indicial", f"ordering violations, alpha={a}",
                    int(np.sum(np.diff(order) <= 0)) + int(np.sum(g[2:11] <= np.arange(2, 11))), 0, 0)
            rep.add("spectral.indicial", f"|gamma_1 - (1+eps)|, alpha={a}", abs(g[1] - 1 - P.epsilon), 0.0, 1e-8)
    with _guard(rep, "spectral.perturbation", "alpha sweep"):
        gaps = {a: spectral_scaled_gaps(a, cfg.modes) for a in cfg.alphas_spectral}
        for n in (2, 3, 4):
            rep.add("spectral.perturbation", f"max/min of alpha^4 gap, n={n}", stable_constant(gaps[a][n] for a in gaps), 1.0, 1.0)
    for a in sorted(set(cfg.alphas) | {cfg.alpha}):
        with _guard(rep, "spectral.jacobi_fields", f"alpha={a}"):
            res = jacobi_field_residuals(a)
            rep.add("spectral.jacobi_fields", f"max relative residual, alpha={a}", max(res.values()), 0.0, 1e-7)
            lo, hi = mode_one_exponents(a)
            rep.add("spectral.jacobi_fields", f"v- exponent + (1+eps), alpha={a}", abs(lo), 0.0, 1e-3)
            rep.add("spectral.jacobi_fields", f"v+ exponent - (1+eps), alpha={a}", abs(hi), 0.0, 1e-3)
    return rep


def suite_linear(cfg: VerifyConfig) -> SuiteReport:
    rep = SuiteReport("linear")
    with _guard(rep, "linear.solvers", f"alpha={cfg.alpha}"):
        c = linear_solver_checks(cfg.alpha, cfg.modes)
        for k, v in sorted(c.items()):
            tol = 1e-8 if k in ("closed_form", "flat_oracle") else 1e-7
            rep.add("linear.solvers", k, v, 0.0, tol)
    with _guard(rep, "linear.amplification", "exponent"):
        p, gains = amplification_exponent(cfg.epsilons_end, cfg.modes)
        rep.add("linear.amplification", "fitted exponent of the gain in eps", p, -1.0, 0.2)
    return rep


def suite_end(cfg: VerifyConfig) -> SuiteReport:
    rep = SuiteReport("end")
    ec = end_solver.EndConfig(s_max=cfg.s_max, n_modes=cfg.modes, tol=cfg.tol)
    eps_list = sorted(set(cfg.epsilons_end) | {cfg.epsilon}, reverse=True)
    with _guard(rep, "end.picard", "solves"):
        runs = end_contraction(eps_list, ec)
        for r in runs:
            e = r["epsilon"]
            rep.add("end.picard", f"contraction factor, eps={e}", r["factor"], 0.0, 0.5)
            rep.add("end.picard", f"iterations, eps={e}", r["iterations"], 0.0, 20)
            rep.add("end.picard", f"interior |H - 1/2|, eps={e}", r["H_deviation"], 0.0, 1e-4)
        # factor <= c eps with c taken at the largest eps
        c1 = runs[0]["factor"] / runs[0]["epsilon"]
        excess = max(r["factor"] / (c1 * r["epsilon"]) for r in runs)
        rep.add("end.picard", "max factor / (c eps), c at largest eps", excess, 0.0, 1.0 + 1e-9)
    return rep


def suite_graph(cfg: VerifyConfig) -> SuiteReport:
    rep = SuiteReport("graph")
    dom, data = annulus_problem(cfg.epsilon, cfg.graph_h)
    tag = "graph.operator"
    worst = 0.0
    for c in (0.5, 1.0, 1.3, 7.0):
        M = graph_solver.mean_curvature_graph(graph_solver.GraphFunction.constant(dom, c))
        worst = max(worst, float(np.abs(M - 1).max()))
    rep.add(tag, "M(const) - 1", worst, 0.0, 0.0)
    J = graph_solver.jacobian(graph_solver.GraphFunction.constant(dom, 1.0))
    A, _ = graph_solver.laplacian_matrix(dom)
    rep.add(tag, "Jacobian at g=1 minus Laplacian", abs(J - A).max(), 0.0, 1e-12)
    gc = graph_solver.GraphConfig(tol=cfg.tol, smallness=0.2)
    with _guard(rep, "graph.dirichlet", "annulus"):
        sol = graph_solver.solve_dirichlet(dom, data, gc)
        rep.add("graph.dirichlet", "final residual", sol.residuals[-1], 0.0, cfg.tol)
        rep.add("graph.dirichlet", "Newton steps", sol.newton_steps, 0.0, 6)
        rep.add("graph.dirichlet", "max r_{k+1}/r_k^2", max(sol.quadratic_ratios), 0.0, 10.0)
        lo = 1.0 + min(data.values(0, np.linspace(0, 2 * np.pi, 721)).min(), 0.0)
        hi = 1.0 + max(data.values(0, np.linspace(0, 2 * np.pi, 721)).max(), 0.0)
        rep.add("graph.dirichlet", "maximum principle violation",
                max(0.0, lo - sol.graph.g.min(), sol.graph.g.max() - hi), 0.0, 1e-12)
        alt = graph_solver.solve_dirichlet(dom, data, graph_solver.GraphConfig(tol=cfg.tol, smallness=0.2, seed="constant"))
        rep.add("graph.dirichlet", "harmonic vs constant seed", np.abs(alt.graph.g - sol.graph.g).max(), 0.0, 1e-9)
        _, dn = graph_solver.boundary_derivative(sol.graph, 1, direction="inward")
        rep.add("graph.boundary_derivative", "inner inward derivative below 0", max(0.0, -dn.min()), 0.0, 0.0)
    with _guard(rep, "graph.boundary_derivative", "log-radial"):
        c = 0.1
        b = c / np.log(1 / 0.3)
        lap = graph_solver.DirichletData(c, [0.0])
        u = graph_solver.harmonic_extension(dom, lap)
        gf = graph_solver.GraphFunction(dom, 1 + u, lap)
        err = 0.0
        for comp, rad, sign in ((0, 1.0, 1.0), (1, 0.3, -1.0)):
            _, d = graph_solver.boundary_derivative(gf, comp)
            err = max(err, float(np.abs(d - sign * b / rad).max()))
        rep.add("graph.boundary_derivative", "log-radial outward derivative error", err, 0.0, 1e-4)
    return rep


SUITE_FUNCS: Dict[str, Callable[[VerifyConfig], SuiteReport]] = {
    "geometry": suite_geometry,
    "catenoid": suite_catenoid,
    "fermi": suite_fermi,
    "spectral": suite_spectral,
    "linear": suite_linear,
    "end": suite_end,
    "graph": suite_graph,
}


def run_suite(name: str, config: Optional[VerifyConfig] = None) -> SuiteReport:
    cfg = config or VerifyConfig()
    if name == "all":
        rep = SuiteReport("all")
        for n in SUITES:
            rep.extend(SUITE_FUNCS[n](cfg))
        return rep
    if name not in SUITE_FUNCS:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    return SUITE_FUNCS[name](cfg)


# ---------------------------------------------------------------------------
# sweeps


def sweep(parameter: str, values, suite: str, config: Optional[VerifyConfig] = None):
    """Rows of tracked constants against alpha or epsilon.

    spectral/alpha: alpha^4-scaled eigenvalue gaps for n = 2, 3, 4.
    end/epsilon: leading contraction factor, its ratio to eps, Green gain.
    catenoid/epsilon: horocylinder ratio.
    """
    cfg = config or VerifyConfig()
    values = [float(v) for v in values]
    if values != sorted(values):
        raise ValueError("sweep values must be sorted")
    rows = []
    if suite == "spectral" and parameter == "alpha":
        for a in values:
            gaps = spectral_scaled_gaps(a, cfg.modes)
            rows.append({"alpha": a, **{f"alpha4_gap_n{n}": v for n, v in gaps.items()}})
    elif suite == "end" and parameter == "epsilon":
        ec = end_solver.EndConfig(s_max=cfg.s_max, n_modes=cfg.modes, tol=cfg.tol)
        for r in end_contraction(values, ec):
            gain = end_solver.amplification(CatenoidParams.from_epsilon(r["epsilon"]), cfg.modes)[0]
            rows.append({"epsilon": r["epsilon"], "contraction_factor": r["factor"],
                         "factor_over_eps": r["factor"] / r["epsilon"], "green_gain": gain,
                         "gain_times_eps": gain * r["epsilon"]})
    elif suite == "catenoid" and parameter == "epsilon":
        for e in values:
            rows.append({"epsilon": e, "horocylinder_ratio": horocylinder_ratio(e)})
    else:
        raise ValueError(f"no sweep defined for parameter {parameter!r} in suite {suite!r}")
    return rows


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]))
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()
