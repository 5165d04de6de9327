"""
Horizontal catenoids of constant mean curvature 1/2 in H^2 x R.

The family is indexed by alpha > 0, with alpha* = sqrt(alpha^2 + 1) and
necksize eps = alpha*/alpha - 1.  The main chart is (s, theta) in the upper
half-plane model, where everything is in closed form; the (u, v) chart in
the disc model needs the profile ODEs and is kept for cross-validation.
"""
import csv
import logging
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import geometry
from .geometry import OutOfChartError

logger = logging.getLogger(__name__)

# steps for the complex-step first derivatives and the FD second derivatives
CSTEP = 1e-30
FD_STEP = 2e-3


class SingularProfileError(ValueError):
    def __init__(self, u):
        super().__init__(f"profile singular (cos phi = 0) at u = {u:.12g}")
        self.u = u


class ExtractionError(ValueError):
    pass


class CurvatureError(ValueError):
    pass


@dataclass(frozen=True)
class CatenoidParams:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @classmethod
    def from_epsilon(cls, epsilon: float) -> "CatenoidParams":
        # alpha*/alpha = 1 + eps together with alpha*^2 = alpha^2 + 1
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        return cls(1.0 / np.sqrt(epsilon * (2.0 + epsilon)))

    @property
    def alpha_star(self) -> float:
        return float(np.sqrt(self.alpha**2 + 1.0))

    @property
    def epsilon(self) -> float:
        # alpha*/alpha - 1 written without cancellation
        a = self.alpha
        return float(1.0 / (a * (self.alpha_star + a)))

    @property
    def S(self) -> float:
        return truncation_S(self.epsilon)


def phi_prime_of_theta(params: CatenoidParams, theta):
    return -np.sqrt(params.alpha**2 + np.cos(theta) ** 2)


def immerse_uhp(params: CatenoidParams, s, theta):
    """X(s, theta) = (x, y, z) in the upper half-plane model.

    Written with complex-safe ufuncs so it can be differentiated by
    complex steps.
    """
    a, a_s, eps = params.alpha, params.alpha_star, params.epsilon
    s = np.asarray(s)
    theta = np.asarray(theta)
    pp = -np.sqrt(a**2 + np.cos(theta) ** 2)
    A = a - pp
    sin_t = np.sin(theta)
    # e^{-s} cosh s = (1 + e^{-2s})/2
    omega = 1.0 / (1.0 + sin_t**2 / (a_s * (a + a_s) * A * (a_s - pp)) * 0.5 * (1.0 + np.exp(-2 * s)))
    ees = np.exp(eps * s)
    x = sin_t / (a_s * A) * np.cosh(s) * ees * omega
    y = ees * omega
    z = np.cos(theta) * np.cosh(s) / (a * A)
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def omega(params: CatenoidParams, s, theta):
    pt = immerse_uhp(params, s, theta)
    return pt[..., 1] / np.exp(params.epsilon * np.asarray(s))


def _cstep(f, s, theta, which):
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if which == 0:
        return f(s + 1j * CSTEP, theta).imag / CSTEP
    return f(s, theta + 1j * CSTEP).imag / CSTEP


def _fd4(f, s, theta, which, h=FD_STEP):
    def sh(k):
        return f(s + k * h, theta) if which == 0 else f(s, theta + k * h)

    return (sh(-2) - 8 * sh(-1) + 8 * sh(1) - sh(2)) / (12 * h)


def tangents(params: CatenoidParams, s, theta):
    """X, X_s, X_theta (complex-step, exact to rounding)."""
    f = lambda a, b: immerse_uhp(params, a, b)
    return f(np.asarray(s, float), np.asarray(theta, float)), _cstep(f, s, theta, 0), _cstep(f, s, theta, 1)


def second_derivatives(params: CatenoidParams, s, theta):
    """X_ss, X_st, X_tt by 4th-order differences of complex-step derivatives."""
    fs = lambda a, b: _cstep(lambda p, q: immerse_uhp(params, p, q), a, b, 0)
    ft = lambda a, b: _cstep(lambda p, q: immerse_uhp(params, p, q), a, b, 1)
    Xss = _fd4(fs, s, theta, 0)
    Xtt = _fd4(ft, s, theta, 1)
    Xst = 0.5 * (_fd4(fs, s, theta, 1) + _fd4(ft, s, theta, 0))
    return Xss, Xst, Xtt


def normal_from_tangents(p, Xs, Xt):
    """Unit normal (w.r.t. the ambient metric) with Xs x Xt orientation."""
    n = np.cross(Xs, Xt)
    Gi = np.zeros(p.shape[:-1] + (3,))
    Gi[..., 0] = Gi[..., 1] = p[..., 1] ** 2
    Gi[..., 2] = 1.0
    N = Gi * n
    return N / np.sqrt(np.sum(n * N, axis=-1))[..., None]


def unit_normal(params: CatenoidParams, s, theta):
    """Unit normal of the catenoid, oriented so that H = +1/2."""
    X, Xs, Xt = tangents(params, s, theta)
    return normal_from_tangents(X, Xs, Xt)


def metric_closed_form(params: CatenoidParams, s, theta):
    """(g_ss, g_st, g_tt) of the induced metric."""
    a = params.alpha
    s, theta = np.broadcast_arrays(np.asarray(s, float), np.asarray(theta, float))
    pp = phi_prime_of_theta(params, theta)
    gss = np.cosh(s) ** 2 / (a**2 * (a - pp) ** 2)
    return gss, np.zeros_like(gss), gss * a**2 / pp**2


def conformal_factor(params: CatenoidParams, s, theta):
    """alpha^2 (alpha - phi')^2 / cosh^2 s, the prefactor of the Jacobi operator."""
    a = params.alpha
    pp = phi_prime_of_theta(params, theta)
    return a**2 * (a - pp) ** 2 / np.cosh(s) ** 2


def ambient_sectional(s, theta):
    """Sectional curvature of H^2 x R along the tangent planes: -cos^2 / cosh^2."""
    return -np.cos(theta) ** 2 / np.cosh(s) ** 2


def intrinsic_curvature(params: CatenoidParams, s, theta):
    a = params.alpha
    pp = phi_prime_of_theta(params, theta)
    A = a - pp
    c2 = np.cos(theta) ** 2
    ch2 = np.cosh(s) ** 2
    inner = 1.0 / ch2 + a**-2 * ((1 - c2) * c2 / A**2 - pp / A * (2 * c2 - 1))
    return -(a**2 * A**2 / ch2) * inner


def principal_curvatures(params: CatenoidParams, s, theta):
    """(kappa1, kappa2) with kappa1 >= kappa2 and kappa1 + kappa2 = 1."""
    disc = 1.0 - 4.0 * (intrinsic_curvature(params, s, theta) - ambient_sectional(s, theta))
    if np.any(disc < 0):
        raise CurvatureError("negative discriminant: principal curvatures would be complex")
    r = np.sqrt(disc)
    return 0.5 * (1 + r), 0.5 * (1 - r)


def jacobi_potential(params: CatenoidParams, s, theta):
    """|h|^2 + Ric(nu) in closed form."""
    a = params.alpha
    return conformal_factor(params, s, theta) * (2 / np.cosh(s) ** 2 + np.cos(2 * theta) / a**2)


def truncation_S(epsilon: float) -> float:
    """Positive root of eps cosh s = 1."""
    if not 0 < epsilon < 1:
        raise ValueError("truncation needs 0 < epsilon < 1")
    return float(np.arccosh(1.0 / epsilon))


def neck_distance(params: CatenoidParams) -> float:
    """Length of the theta = 0 curve from the neck s = 0 to s = S_eps.

    Along theta = 0 the metric is cosh s ds / (alpha (alpha + alpha*)), so
    the length is sinh(S) / (alpha (alpha + alpha*)).
    """
    a = params.alpha
    return float(np.sinh(params.S) / (a * (a + params.alpha_star)))


# ---------------------------------------------------------------------------
# disc model: profile curves


@dataclass(frozen=True)
class ProfileSample:
    u: float
    phi: float
    phi_star: float
    f: float


def _profile_rhs(params):
    a, a_s = params.alpha, params.alpha_star

    def rhs(u, y):
        return [-np.sqrt(a**2 + np.cos(y[0]) ** 2), -np.sqrt(a_s**2 - np.cos(y[1]) ** 2)]

    return rhs


def _f_aux(params, phi, phi_star):
    a, a_s = params.alpha, params.alpha_star
    return (a * np.cos(phi_star) - a_s * np.cos(phi)) / (a * np.cos(phi) * np.cos(phi_star) ** 2)


def profile_values(params: CatenoidParams, u, tol: float = 1e-10):
    """(phi(u), phi*(u)) at the requested u values."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    phi = np.zeros_like(u)
    phs = np.zeros_like(u)
    rhs = _profile_rhs(params)

    def ev(u_, y):
        return np.cos(y[0])

    ev.terminal = True
    for sign in (1.0, -1.0):
        mask = sign * u > 0
        if not np.any(mask):
            continue
        targets = np.unique(sign * u[mask])
        sol = solve_ivp(
            lambda t, y: [sign * r for r in rhs(sign * t, y)],
            (0.0, targets[-1]),
            [0.0, 0.0],
            method="DOP853",
            t_eval=targets,
            rtol=tol,
            atol=tol * 1e-2,
            events=ev,
        )
        if sol.status == 1:
            raise SingularProfileError(sign * float(sol.t_events[0][0]))
        idx = np.searchsorted(targets, sign * u[mask])
        phi[mask] = sol.y[0][idx]
        phs[mask] = sol.y[1][idx]
    return phi, phs


@dataclass
class Profile:
    params: CatenoidParams
    u: np.ndarray
    phi: np.ndarray
    phi_star: np.ndarray
    f: np.ndarray

    def __iter__(self) -> Iterator[ProfileSample]:
        for row in zip(self.u, self.phi, self.phi_star, self.f):
            yield ProfileSample(*map(float, row))

    def __len__(self):
        return len(self.u)

    def identity_residuals(self):
        """Residuals of -phi' cos phi* = alpha* cos phi and -phi' sin phi* = alpha sin phi."""
        a, a_s = self.params.alpha, self.params.alpha_star
        dphi = -np.sqrt(a**2 + np.cos(self.phi) ** 2)
        r1 = -dphi * np.cos(self.phi_star) - a_s * np.cos(self.phi)
        r2 = -dphi * np.sin(self.phi_star) - a * np.sin(self.phi)
        return r1, r2


def integrate_profile(params: CatenoidParams, u_max: float, tol: float = 1e-10, n: int = 201) -> Profile:
    """Integrate phi, phi* on [-u_max, u_max] with phi(0) = phi*(0) = 0."""
    if not (u_max > 0 and tol > 0):
        raise ValueError("u_max and tol must be positive")
    u = np.linspace(-u_max, u_max, n)
    phi, phs = profile_values(params, u, tol)
    return Profile(params, u, phi, phs, _f_aux(params, phi, phs))


def ball_components(params: CatenoidParams, u, v, tol: float = 1e-10):
    """X1, X2, X3, z of the disc-model parametrization."""
    a, a_s = params.alpha, params.alpha_star
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    phi, phs = profile_values(params, u.ravel(), tol)
    phi, phs = phi.reshape(u.shape), phs.reshape(u.shape)
    f = _f_aux(params, phi, phs)
    dphi = -np.sqrt(a**2 + np.cos(phi) ** 2)
    ca, sa = np.cosh(a * v), np.sinh(a * v)
    cs_, ss_ = np.cosh(a_s * v), np.sinh(a_s * v)
    X1 = ca * np.sin(phs) * f
    X2 = ca * ss_ * (f + a_s / a) - cs_ * sa
    X3 = ca * cs_ * (f + a_s / a) - ss_ * sa
    z = np.cos(phi) * ca / (a * (a - dphi))
    return X1, X2, X3, z, phi


def immerse_ball(params: CatenoidParams, u, v, tol: float = 1e-10):
    X1, X2, X3, z, _ = ball_components(params, u, v, tol)
    if np.any(1 + X3 <= 0):
        raise OutOfChartError("1 + X3 <= 0")
    return np.stack([X1 / (1 + X3), X2 / (1 + X3), z], axis=-1)


# ---------------------------------------------------------------------------
# sampled surfaces


@dataclass
class SurfaceGrid:
    params: CatenoidParams
    s_values: np.ndarray
    theta_values: np.ndarray
    points: np.ndarray  # (Ns, Nt, 3)
    first_form: np.ndarray  # (Ns, Nt, 2, 2)
    second_form: np.ndarray
    normal: np.ndarray  # (Ns, Nt, 3)
    kappa1: np.ndarray
    kappa2: np.ndarray
    K_sigma: np.ndarray
    K_ambient: np.ndarray
    tangents: Optional[tuple] = field(default=None, repr=False)

    @property
    def shape(self):
        return self.points.shape[:2]


def fundamental_forms(p, Xs, Xt, Xss, Xst, Xtt, normal):
    """First and second fundamental forms with h_ij = <D_i X_j, nu>."""
    G = geometry.metric_matrix(p)
    Gam = geometry.christoffel(p)
    T = (Xs, Xt)
    D = ((Xss, Xst), (Xst, Xtt))
    nlow = np.einsum("...ij,...j->...i", G, normal)
    I = np.empty(p.shape[:-1] + (2, 2))
    II = np.empty_like(I)
    for i in range(2):
        for j in range(2):
            I[..., i, j] = np.einsum("...i,...ij,...j->...", T[i], G, T[j])
            acc = D[i][j] + np.einsum("...kab,...a,...b->...k", Gam, T[i], T[j])
            II[..., i, j] = np.sum(acc * nlow, axis=-1)
    return I, II


def build_grid(params: CatenoidParams, s_values, theta_values) -> SurfaceGrid:
    """Sample the catenoid on a tensor grid with exact-derivative geometry."""
    s_values = np.asarray(s_values, float)
    theta_values = np.asarray(theta_values, float)
    S, T = np.meshgrid(s_values, theta_values, indexing="ij")
    X, Xs, Xt = tangents(params, S, T)
    Xss, Xst, Xtt = second_derivatives(params, S, T)
    nu = normal_from_tangents(X, Xs, Xt)
    I, II = fundamental_forms(X, Xs, Xt, Xss, Xst, Xtt, nu)
    k1, k2 = principal_curvatures(params, S, T)
    return SurfaceGrid(
        params=params,
        s_values=s_values,
        theta_values=theta_values,
        points=X,
        first_form=I,
        second_form=II,
        normal=nu,
        kappa1=k1,
        kappa2=k2,
        K_sigma=intrinsic_curvature(params, S, T),
        K_ambient=ambient_sectional(S, T),
        tangents=(Xs, Xt, Xss, Xst, Xtt),
    )


def periodic_theta(n: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n) / n


# ---------------------------------------------------------------------------
# horocylinder limit


def horocylinder_approximation(epsilon, r):
    """Leading terms 1 - eps log eps + eps log 2r of the horizontal graph."""
    return 1.0 - epsilon * np.log(epsilon) + epsilon * np.log(2 * r)


def horizontal_graph_extract(params: CatenoidParams, r, gamma, tol: float = 1e-13, max_iter: int = 60):
    """Sample y = g(r, gamma) over x = r sin gamma, z = r cos gamma on the end s > 0.

    Each sample is found by damped Newton in (s, theta), seeded with
    eps cosh s = r and theta = gamma.
    """
    eps = params.epsilon
    r, gamma = np.broadcast_arrays(np.asarray(r, float), np.asarray(gamma, float))
    tx, tz = r * np.sin(gamma), r * np.cos(gamma)
    s = np.arccosh(np.maximum(r / eps, 1.0))
    th = np.array(gamma, dtype=float)

    def resid(s_, t_):
        P = immerse_uhp(params, s_, t_)
        return np.stack([P[..., 0] - tx, P[..., 2] - tz], axis=-1)

    F = resid(s, th)
    for _ in range(max_iter):
        _, Ps, Pt = tangents(params, s, th)
        J = np.stack([np.stack([Ps[..., 0], Pt[..., 0]], -1), np.stack([Ps[..., 2], Pt[..., 2]], -1)], -2)
        det = np.linalg.det(J)
        scale = np.abs(J).max(axis=(-1, -2)) ** 2
        if np.any(np.abs(det) < 1e-12 * scale):
            raise ExtractionError("degenerate Jacobian: patch is not a horizontal graph")
        step = np.linalg.solve(J, -F[..., None])[..., 0]
        lam = np.ones(s.shape)
        nF = np.linalg.norm(F, axis=-1)
        for _ in range(30):
            Fn = resid(s + lam * step[..., 0], th + lam * step[..., 1])
            bad = np.linalg.norm(Fn, axis=-1) > (1 - 1e-4 * lam) * nF
            bad &= nF > tol * np.maximum(r, 1)
            if not np.any(bad):
                break
            lam = np.where(bad, 0.5 * lam, lam)
        s = s + lam * step[..., 0]
        th = th + lam * step[..., 1]
        F = resid(s, th)
        if np.all(np.linalg.norm(F, axis=-1) <= tol * np.maximum(r, 1)):
            break
    else:
        raise ExtractionError("Newton inversion did not converge")
    if np.any(s <= 0):
        raise ExtractionError("inversion left the end s > 0")
    return immerse_uhp(params, s, th)[..., 1]


def boundary_curve(params: CatenoidParams, theta):
    """Points of the truncation curve s = S_eps."""
    return immerse_uhp(params, params.S, theta)


# ---------------------------------------------------------------------------
# export

CSV_COLUMNS = ("s", "theta", "x", "y", "z", "kappa1", "kappa2", "K_sigma")


def _model_points(grid: SurfaceGrid, model: str):
    if model == "uhp":
        return grid.points
    if model == "ball":
        return geometry.uhp_to_ball(grid.points)
    raise ValueError(f"unknown model {model!r}")


def export_mesh(grid: SurfaceGrid, fmt: str, path, model: str = "uhp"):
    """Write the grid as a triangulated OBJ or as a CSV table."""
    P = _model_points(grid, model)
    ns, nt = grid.shape
    if fmt == "obj":
        with open(path, "w") as fh:
            fh.write(f"# catenoid alpha={grid.params.alpha!r} model={model}\n")
            for v in P.reshape(-1, 3):
                fh.write("v %.17g %.17g %.17g\n" % tuple(v))
            idx = np.arange(ns * nt).reshape(ns, nt) + 1
            for i in range(ns - 1):
                for j in range(nt - 1):
                    a, b, c, d = idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]
                    fh.write(f"f {a} {b} {c}\nf {a} {c} {d}\n")
    elif fmt == "csv":
        S, T = np.meshgrid(grid.s_values, grid.theta_values, indexing="ij")
        cols = [S, T, P[..., 0], P[..., 1], P[..., 2], grid.kappa1, grid.kappa2, grid.K_sigma]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for row in zip(*(c.ravel() for c in cols)):
                w.writerow([repr(float(x)) for x in row])
    else:
        raise ValueError(f"unknown format {fmt!r}")
    logger.info("wrote %s mesh to %s", fmt, path)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])
