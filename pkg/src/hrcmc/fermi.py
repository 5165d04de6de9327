"""
Fermi coordinates off the catenoid, normal graphs and their mean curvature.

A normal graph over the catenoid X is Y = exp_X(w nu).  Its mean curvature
is computed in two ways:

* numerical_mean_curvature: plain finite differences of the sampled points
  Y, with the ambient Christoffel symbols.  Used for reporting.
* mean_curvature_increment: the same discrete formulas, but arranged so
  that H(Y) - H(X) is assembled from the displacement Y - X term by term.
  On the end of the catenoid the coordinates grow like cosh s while w decays
  like e^{-2s}; subtracting two separately computed curvatures there loses
  every significant digit of the quadratic remainder, and the remainder is
  then multiplied by cosh^2 s.  The increment form keeps full relative
  precision, which is what the fixed-point iteration needs.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import catenoid, geometry
from .catenoid import CatenoidParams, SurfaceGrid
from .stencils import derivatives_2d
from .spectral import apply_L

logger = logging.getLogger(__name__)

TUBE_RADIUS = 0.25
RK4_STEP = 1e-3


class BlowupError(RuntimeError):
    def __init__(self, t):
        super().__init__(f"principal curvature blew up at t = {t:.6g}")
        self.t = t


class ComparisonBreakdownError(ZeroDivisionError):
    pass


class OutOfTubeError(ValueError):
    pass


class DegenerateImmersionError(ValueError):
    pass


class ChartError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Riccati flow of the tubular hypersurfaces


@dataclass(frozen=True)
class TubularState:
    base: tuple
    t: float
    kappa1_t: float
    kappa2_t: float
    rho1: float = 0.0
    rho2: float = 0.0
    kappa1_0: float = 0.0
    kappa2_0: float = 0.0


def riccati_comparison(kappa0, t):
    """(upper, lower) comparison solutions of k' = k^2 and k' = k^2 - 1."""
    kappa0 = np.asarray(kappa0, float)
    t = np.asarray(t, float)
    den_u = 1.0 - kappa0 * t
    e2 = np.exp(2 * t)
    den_l = kappa0 + 1 - (kappa0 - 1) * e2
    if np.any(den_u == 0) or np.any(den_l == 0):
        raise ComparisonBreakdownError("comparison solution has a pole at this t")
    return kappa0 / den_u, (kappa0 + 1 + (kappa0 - 1) * e2) / den_l


def riccati_scalar(kappa0, rho, t, step=RK4_STEP):
    """RK4 for k' = k^2 + rho with rho constant."""
    n = max(1, int(np.ceil(abs(t) / step)))
    h = t / n
    k = float(kappa0)
    f = lambda x: x * x + rho
    for i in range(n):
        k1 = f(k)
        k2 = f(k + 0.5 * h * k1)
        k3 = f(k + 0.5 * h * k2)
        k4 = f(k + h * k3)
        k += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        if not np.isfinite(k) or abs(k) > 1e8:
            raise BlowupError((i + 1) * h)
    return k


def _orthonormal_frame(p, nu, Xs, Xt, I):
    """Orthonormal tangent frame (e1, e2) with e1 along the tangential part of d_z.

    Returns the coordinate coefficients E (2x2, columns e_a in the (X_s, X_t)
    basis).  The frame is parallel along the normal geodesic because d_z and
    nu-hat both are.
    """
    dz = np.array([0.0, 0.0, 1.0])
    c = geometry.metric_uhp(p, nu, dz)
    dzT = dz - c * nu
    # coefficients of dzT in the tangent basis: solve I a = (<dzT, Xs>, <dzT, Xt>)
    rhs = np.array([geometry.metric_uhp(p, dzT, Xs), geometry.metric_uhp(p, dzT, Xt)])
    a1 = np.linalg.solve(I, rhs)
    n1 = np.sqrt(a1 @ I @ a1)
    if n1 < 1e-12:
        a1 = np.array([1.0, 0.0])
        n1 = np.sqrt(a1 @ I @ a1)
    a1 = a1 / n1
    a2 = np.array([-(I[0, 1] * a1[0] + I[1, 1] * a1[1]), I[0, 0] * a1[0] + I[0, 1] * a1[1]])
    a2 = a2 / np.sqrt(a2 @ I @ a2)
    return np.stack([a1, a2], axis=1)


def tubular_frame_data(params: CatenoidParams, s, theta):
    """Shape operator S0 and curvature operator R in a parallel orthonormal frame at one node."""
    g = catenoid.build_grid(params, [s], [theta])
    p = g.points[0, 0]
    nu = g.normal[0, 0]
    Xs, Xt = g.tangents[0][0, 0], g.tangents[1][0, 0]
    I, II = g.first_form[0, 0], g.second_form[0, 0]
    E = _orthonormal_frame(p, nu, Xs, Xt, I)
    S0 = E.T @ II @ E
    vecs = [E[0, a] * Xs + E[1, a] * Xt for a in range(2)]
    R = np.array([[geometry.curvature_tensor(p, vecs[a], nu, nu, vecs[b]) for b in range(2)] for a in range(2)])
    return S0, R, (g.kappa1[0, 0], g.kappa2[0, 0])


def _riccati_matrix(S0, R, t, step=RK4_STEP):
    n = max(1, int(np.ceil(abs(t) / step)))
    h = t / n
    S = S0.copy()
    f = lambda M: M @ M + R
    for i in range(n):
        k1 = f(S)
        k2 = f(S + 0.5 * h * k1)
        k3 = f(S + 0.5 * h * k2)
        k4 = f(S + h * k3)
        S = S + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        if not np.all(np.isfinite(S)) or np.abs(S).max() > 1e8:
            raise BlowupError((i + 1) * h)
    return S


def tubular_curvatures(params: CatenoidParams, s, theta, t, step=RK4_STEP) -> TubularState:
    """Principal curvatures of the parallel surface at signed distance t.

    Integrates S' = S^2 + R in a parallel orthonormal frame.  In H^2 x R the
    curvature operator is parallel, so R is constant in that frame, and the
    eigenvalues of S obey k_i' = k_i^2 + rho_i with rho_i the sectional
    curvature of the plane spanned by the geodesic tangent and the i-th
    principal direction.
    """
    if abs(t) > TUBE_RADIUS + 1e-15:
        raise OutOfTubeError(f"|t| = {abs(t)} exceeds the tube radius {TUBE_RADIUS}")
    S0, R, (k1, k2) = tubular_frame_data(params, s, theta)
    S = _riccati_matrix(S0, R, t, step)
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    rho = np.einsum("ia,ij,ja->a", V, R, V)
    return TubularState((float(s), float(theta)), float(t), float(w[1]), float(w[0]),
                        float(rho[1]), float(rho[0]), float(k1), float(k2))


def curvature_along_normal(params: CatenoidParams, s, theta, ts):
    """Eigenvalues of X -> R(X, d3) d3 on d3^perp along the normal geodesic.

    Evaluated directly from the ambient curvature tensor at each point; also
    returns <d3, d_z>.  Rows: (sigma_small, sigma_large, <d3, dz>).
    """
    p0 = catenoid.immerse_uhp(params, s, theta)
    nu = catenoid.unit_normal(params, s, theta)
    out = []
    for t in np.atleast_1d(ts):
        P, V, _ = geometry.geodesic(p0, nu, t)
        # orthonormal basis of V^perp by Gram-Schmidt on coordinate vectors
        basis = []
        for cand in np.eye(3):
            w = cand - geometry.metric_uhp(P, cand, V) * V
            for b in basis:
                w = w - geometry.metric_uhp(P, w, b) * b
            nrm = np.sqrt(geometry.metric_uhp(P, w, w))
            if nrm > 1e-6:
                basis.append(w / nrm)
            if len(basis) == 2:
                break
        R = np.array([[geometry.curvature_tensor(P, a, V, V, b) for b in basis] for a in basis])
        sig = np.linalg.eigvalsh(0.5 * (R + R.T))
        out.append((sig[0], sig[1], geometry.metric_uhp(P, V, [0.0, 0.0, 1.0])))
    return np.array(out)


# ---------------------------------------------------------------------------
# Fermi chart


def fermi_chart(params: CatenoidParams, s, theta, t):
    """F(s, theta, t) = exp_{X(s,theta)}(t nu(s,theta))."""
    X = catenoid.immerse_uhp(params, s, theta)
    nu = catenoid.unit_normal(params, s, theta)
    return geometry.exp_map(X, nu, t)


def _fermi_partials(params, s, theta, t, h=1e-3):
    """F, F_s, F_t (4th-order differences at fixed t) and the geodesic velocity d3."""
    F = lambda a, b: fermi_chart(params, a, b, t)
    Fs = (F(s - 2 * h, theta) - 8 * F(s - h, theta) + 8 * F(s + h, theta) - F(s + 2 * h, theta)) / (12 * h)
    Ft = (F(s, theta - 2 * h) - 8 * F(s, theta - h) + 8 * F(s, theta + h) - F(s, theta + 2 * h)) / (12 * h)
    X = catenoid.immerse_uhp(params, s, theta)
    nu = catenoid.unit_normal(params, s, theta)
    P, V, _ = geometry.geodesic(X, nu, t)
    return P, Fs, Ft, V


def fermi_metric(params: CatenoidParams, s, theta, t, h=1e-3):
    """g~_ij(x, t), pulled back through the Fermi chart."""
    P, Fs, Ft, _ = _fermi_partials(params, s, theta, t, h)
    T = (Fs, Ft)
    g = np.empty(np.shape(P)[:-1] + (2, 2))
    for i in range(2):
        for j in range(2):
            g[..., i, j] = geometry.metric_uhp(P, T[i], T[j])
    return g


def fermi_gamma3(params: CatenoidParams, s, theta, t, h=1e-3):
    """<nabla_i d_j, d_3> in Fermi coordinates at (x, t)."""
    F = lambda a, b: fermi_chart(params, a, b, t)
    P, Fs, Ft, V = _fermi_partials(params, s, theta, t, h)
    c = F(s, theta)
    Fss = (-F(s - 2 * h, theta) + 16 * F(s - h, theta) - 30 * c + 16 * F(s + h, theta) - F(s + 2 * h, theta)) / (12 * h**2)
    Ftt = (-F(s, theta - 2 * h) + 16 * F(s, theta - h) - 30 * c + 16 * F(s, theta + h) - F(s, theta + 2 * h)) / (12 * h**2)
    Fst = (F(s + h, theta + h) - F(s + h, theta - h) - F(s - h, theta + h) + F(s - h, theta - h)) / (4 * h**2)
    Gam = geometry.christoffel(P)
    T = (Fs, Ft)
    D = ((Fss, Fst), (Fst, Ftt))
    out = np.empty(np.shape(P)[:-1] + (2, 2))
    for i in range(2):
        for j in range(2):
            acc = D[i][j] + np.einsum("...kab,...a,...b->...k", Gam, T[i], T[j])
            out[..., i, j] = geometry.metric_uhp(P, acc, V)
    return out


@dataclass
class ResidualReport:
    rows: list = field(default_factory=list)  # (s, theta, t, quantity, value, bound, ratio)

    def add(self, s, theta, t, quantity, value, bound, ratio=None):
        if ratio is None:
            ratio = value / bound if bound else float("nan")
        self.rows.append((float(s), float(theta), float(t), quantity, float(value), float(bound), float(ratio)))

    def max(self, quantity):
        return max(r[4] for r in self.rows if r[3] == quantity)

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "theta", "t", "quantity", "value", "bound", "ratio"])
            for r in self.rows:
                w.writerow([repr(r[0]), repr(r[1]), repr(r[2]), r[3], repr(r[4]), repr(r[5]), repr(r[6])])


def fermi_metric_check(params: CatenoidParams, s, theta, t, dt=1e-3) -> ResidualReport:
    """Compare the Fermi-chart metric with its first-order expansion g - 2 h t.

    Reports the expansion error, the quadratic-remainder ratio |Q~|/t^2,
    and the identity Gamma~^3_ij = -(1/2) d_t g~_ij.
    """
    if abs(t) > TUBE_RADIUS + 1e-15:
        raise OutOfTubeError("t outside the tube")
    grid = catenoid.build_grid(params, [s], [theta])
    g0, h0 = grid.first_form[0, 0], grid.second_form[0, 0]
    gt = fermi_metric(params, s, theta, t)
    if np.linalg.det(gt) <= 0:
        raise ChartError("Fermi chart degenerate (focal point)")
    scale = np.abs(g0).max()
    rep = ResidualReport()
    Q = gt - (g0 - 2 * h0 * t)
    rep.add(s, theta, t, "linear_expansion_error", np.abs(Q).max() / scale, 1.0)
    if t != 0:
        rep.add(s, theta, t, "remainder_over_t2", np.abs(Q).max() / (scale * t * t), 1.0)
    dg = (fermi_metric(params, s, theta, t + dt) - fermi_metric(params, s, theta, t - dt)) / (2 * dt)
    G3 = fermi_gamma3(params, s, theta, t)
    rep.add(s, theta, t, "gamma3_vs_dtg", np.abs(G3 + 0.5 * dg).max() / scale, 1.0)
    G30 = fermi_gamma3(params, s, theta, 0.0)
    rep.add(s, theta, t, "gamma3_at_0_vs_h", np.abs(G30 - h0).max() / scale, 1.0)
    return rep


def fermi_graph_mean_curvature(params: CatenoidParams, s, theta, w, dw, ddw, h=1e-3, dt=1e-4):
    """Mean curvature of the graph t = w(x) written in Fermi coordinates.

    dw = (w_s, w_t), ddw = ((w_ss, w_st), (w_st, w_tt)) at a single node.
    Uses g~(x, t) from the Fermi chart, Gamma~^3 = -(1/2) d_t g~, and the
    tangential Christoffel symbols from x-derivatives of g~ at fixed t.
    """
    gt = lambda a, b, tt: fermi_metric(params, a, b, tt)
    g = gt(s, theta, w)
    dgs = (gt(s + h, theta, w) - gt(s - h, theta, w)) / (2 * h)
    dgt = (gt(s, theta + h, w) - gt(s, theta - h, w)) / (2 * h)
    dg = (dgs, dgt)
    G3 = -0.5 * (gt(s, theta, w + dt) - gt(s, theta, w - dt)) / (2 * dt)
    # Gamma_{ij,l} = <nabla_i d_j, d_l>
    Gl = np.empty((2, 2, 2))
    for i in range(2):
        for j in range(2):
            for l in range(2):
                Gl[i, j, l] = 0.5 * (dg[i][j, l] + dg[j][i, l] - dg[l][i, j])
    dw = np.asarray(dw, float)
    ddw = np.asarray(ddw, float)
    gw = g + np.outer(dw, dw)
    gwi = np.linalg.inv(gw)
    q = dw @ gwi @ dw
    v = gwi @ dw
    hw = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            val = G3[i, j] + ddw[i, j] - v @ Gl[i, j]
            val += v @ (dw[i] * G3[j] + dw[j] * G3[i] - dw * G3[i, j] - dw * ddw[i, j])
            hw[i, j] = val / np.sqrt(1 - q)
    return 0.5 * np.trace(gwi @ hw)


# ---------------------------------------------------------------------------
# normal graphs on sampled grids


@dataclass
class NormalGraphField:
    grid: SurfaceGrid
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, float)
        if self.w.shape != self.grid.shape:
            raise ValueError("w must live on the grid nodes")
        if np.any(np.abs(self.w) >= TUBE_RADIUS):
            raise OutOfTubeError("normal offset leaves the tube |w| < 1/4")


def normal_graph_immerse(field_: NormalGraphField):
    """Y = exp_X(w nu); returns (Y, displacement Y - X, geodesic velocity at Y)."""
    g = field_.grid
    Y, V, D = geometry.geodesic(g.points, g.normal, field_.w)
    return Y, D, V


def numerical_forms(points, s_values, theta_values, orientation=None, periodic_theta=True):
    """FD fundamental forms of a sampled immersion.

    Returns (I, II, normal, H).  orientation, if given, is a vector field
    the normal should have positive inner product with.
    """
    P = np.asarray(points, float)
    hs = s_values[1] - s_values[0]
    ht = theta_values[1] - theta_values[0]
    comps = [derivatives_2d(P[..., k], hs, periodic_theta, ht) for k in range(3)]
    Xs, Xt, Xss, Xst, Xtt = (np.stack([c[i] for c in comps], axis=-1) for i in range(5))
    if np.any(np.all(np.cross(Xs, Xt) == 0, axis=-1)):
        raise DegenerateImmersionError("tangent vectors are parallel")
    nu = catenoid.normal_from_tangents(P, Xs, Xt)
    if orientation is not None:
        sgn = np.sign(geometry.metric_uhp(P, nu, orientation))
        nu = nu * np.where(sgn == 0, 1.0, sgn)[..., None]
    I, II = catenoid.fundamental_forms(P, Xs, Xt, Xss, Xst, Xtt, nu)
    det = I[..., 0, 0] * I[..., 1, 1] - I[..., 0, 1] ** 2
    if np.any(det <= 0):
        raise DegenerateImmersionError("induced metric is not positive definite")
    H = 0.5 * (I[..., 1, 1] * II[..., 0, 0] - 2 * I[..., 0, 1] * II[..., 0, 1] + I[..., 0, 0] * II[..., 1, 1]) / det
    return I, II, nu, H


def numerical_mean_curvature(points, s_values, theta_values, orientation=None, periodic_theta=True):
    """H = (1/2) tr(g^{-1} h) from finite differences of the sampled points."""
    return numerical_forms(points, s_values, theta_values, orientation, periodic_theta)[3]


def numerical_principal_curvatures(points, s_values, theta_values, orientation=None, periodic_theta=True):
    I, II, _, _ = numerical_forms(points, s_values, theta_values, orientation, periodic_theta)
    A = np.linalg.solve(I, II)
    ev = np.linalg.eigvals(A).real
    return np.sort(ev, axis=-1)[..., ::-1]


def _bilinear_gamma(a, b):
    """B(a, b) with Gamma_p(a, b) = B(a, b) / y."""
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = -(a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0])
    out[..., 1] = a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1]
    return out


def _gip(y, a, b):
    """Ambient inner product with the metric at height y."""
    return (a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]) / y**2 + a[..., 2] * b[..., 2]


def base_curvature(grid: SurfaceGrid):
    """(1/2) tr(g^{-1} h) from the grid's exact-derivative forms."""
    I, II = grid.first_form, grid.second_form
    det = I[..., 0, 0] * I[..., 1, 1] - I[..., 0, 1] ** 2
    return 0.5 * (I[..., 1, 1] * II[..., 0, 0] - 2 * I[..., 0, 1] * II[..., 0, 1] + I[..., 0, 0] * II[..., 1, 1]) / det


def mean_curvature_increment(field_: NormalGraphField):
    """H(Y) - H(X) for Y = exp_X(w nu), assembled without subtractive cancellation.

    The base surface uses the grid's exact derivatives; the displacement
    D = Y - X is differentiated with the grid stencils (4th order in s,
    Fourier in theta).  Every difference of base and displaced quantities is
    written as an explicit multiple of D, so the result keeps full relative
    precision even where |D| is many orders below |X|.
    """
    g = field_.grid
    X = g.points
    Xs, Xt, Xss, Xst, Xtt = g.tangents
    _, D, _ = normal_graph_immerse(field_)
    hs = g.s_values[1] - g.s_values[0]
    comps = [derivatives_2d(D[..., k], hs, True) for k in range(3)]
    Ds, Dt, Dss, Dst, Dtt = (np.stack([c[i] for c in comps], axis=-1) for i in range(5))

    y = X[..., 1]
    dy = D[..., 1]
    yY = y + dy
    # metric: G_Y - G_X = diag(delta, delta, 0)
    delta = -dy * (2 * y + dy) / (y**2 * yY**2)
    Xi = (Xs, Xt)
    Di = (Ds, Dt)
    Yi = (Xs + Ds, Xt + Dt)
    Dij = ((Dss, Dst), (Dst, Dtt))
    Xij = ((Xss, Xst), (Xst, Xtt))

    def hor(a, b):
        return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]

    dg = np.empty(X.shape[:-1] + (2, 2))
    for i in range(2):
        for j in range(2):
            dg[..., i, j] = delta * hor(Yi[i], Yi[j]) + _gip(y, Di[i], Yi[j]) + _gip(y, Xi[i], Di[j])
    g0 = g.first_form
    gw = g0 + dg

    # unit normal covectors n = c / sqrt(c^T G^{-1} c), c = cross product
    c0 = np.cross(Xs, Xt)
    dc = np.cross(Ds, Xt) + np.cross(Xs, Dt) + np.cross(Ds, Dt)
    cw = c0 + dc

    def ginv_q(yy, a, b):
        return yy**2 * (a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]) + a[..., 2] * b[..., 2]

    Q0 = ginv_q(y, c0, c0)
    Qw = ginv_q(yY, cw, cw)
    dQ = ginv_q(yY, dc, cw + c0) + dy * (2 * y + dy) * (c0[..., 0] ** 2 + c0[..., 1] ** 2)
    r0, rw = np.sqrt(Q0), np.sqrt(Qw)
    n0 = c0 / r0[..., None]
    dn = dc / rw[..., None] - c0 * (dQ / (r0 * rw * (r0 + rw)))[..., None]

    dh = np.empty_like(dg)
    for i in range(2):
        for j in range(2):
            Bw = _bilinear_gamma(Yi[i], Yi[j])
            acc_w = Xij[i][j] + Dij[i][j] + Bw / yY[..., None]
            dacc = Dij[i][j] - (dy / (y * yY))[..., None] * Bw
            dacc = dacc + (_bilinear_gamma(Di[i], Yi[j]) + _bilinear_gamma(Xi[i], Di[j])) / y[..., None]
            dh[..., i, j] = np.sum(dn * acc_w, axis=-1) + np.sum(n0 * dacc, axis=-1)

    h0 = g.second_form
    M = dh - dg @ np.linalg.solve(g0, h0)
    return 0.5 * np.trace(np.linalg.solve(gw, M), axis1=-2, axis2=-1)


def linearized_mean_curvature(params: CatenoidParams, w, s_values):
    """First variation of H = (1/2) tr(g^{-1} h) along w nu: (1/2) Omega L w."""
    theta = catenoid.periodic_theta(w.shape[1])
    S, T = np.meshgrid(s_values, theta, indexing="ij")
    return 0.5 * catenoid.conformal_factor(params, S, T) * apply_L(params, w, s_values, True)


def nonlinear_remainder_Q(field_: NormalGraphField):
    """Q(w) = H(w) - H(0) - (1/2) Omega L w.

    H(0) is the curvature of the sampled catenoid (1/2 up to roundoff), so
    Q(0) = 0 exactly and Q is quadratic in w.
    """
    g = field_.grid
    return mean_curvature_increment(field_) - linearized_mean_curvature(g.params, field_.w, g.s_values)


def normal_graph_mean_curvature(field_: NormalGraphField, orientation_from_flow: bool = True):
    """Mean curvature of the normal graph from finite differences of its points."""
    g = field_.grid
    Y, _, V = normal_graph_immerse(field_)
    return numerical_mean_curvature(Y, g.s_values, g.theta_values, orientation=V if orientation_from_flow else None)
