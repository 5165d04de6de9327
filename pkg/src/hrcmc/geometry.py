"""
Ambient geometry of H^2 x R.

Points are stored as (x, y, z) in the upper half-plane model, where the
metric is (dx^2 + dy^2)/y^2 + dz^2, or as (xt, yt, z) in the disc model.
All functions accept either the small dataclasses below or plain arrays
with a trailing axis of length 3, and they broadcast over leading axes.
"""
from dataclasses import dataclass

import numpy as np

# tolerance for unit-length preconditions
UNIT_TOL = 1e-10


class InvalidPointError(ValueError):
    """Point outside the model (y <= 0, or outside the unit disc)."""


class OutOfChartError(ValueError):
    """The image of a map lands at infinity or on the ideal boundary."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class UhpPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not self.y > 0:
            raise InvalidPointError(f"upper half-plane point needs y > 0, got y={self.y}")

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x, self.y, self.z], dtype=dtype)


@dataclass(frozen=True)
class BallPoint:
    xt: float
    yt: float
    z: float

    def __post_init__(self):
        if not self.xt**2 + self.yt**2 < 1:
            raise InvalidPointError("disc point needs xt^2 + yt^2 < 1")

    def __array__(self, dtype=None, copy=None):
        return np.array([self.xt, self.yt, self.z], dtype=dtype)


@dataclass(frozen=True)
class TangentVector:
    base: UhpPoint
    vx: float
    vy: float
    vz: float

    def __array__(self, dtype=None, copy=None):
        return np.array([self.vx, self.vy, self.vz], dtype=dtype)


def _pt(p):
    p = np.asarray(p, dtype=float)
    if np.any(p[..., 1] <= 0):
        raise InvalidPointError("upper half-plane point needs y > 0")
    return p


def _vec(v):
    if isinstance(v, TangentVector):
        return np.array(v)
    return np.asarray(v, dtype=float)


def _base_and_vec(nu, p):
    if p is None:
        if not isinstance(nu, TangentVector):
            raise TypeError("base point required for a bare component array")
        p = nu.base
    return _pt(p), _vec(nu)


def metric_uhp(p, v, w):
    """<v, w> at p: (vx wx + vy wy)/y^2 + vz wz."""
    p = _pt(p)
    v, w = _vec(v), _vec(w)
    y = p[..., 1]
    return (v[..., 0] * w[..., 0] + v[..., 1] * w[..., 1]) / y**2 + v[..., 2] * w[..., 2]


def metric_matrix(p):
    """Diagonal metric coefficients as a (..., 3, 3) array."""
    p = _pt(p)
    G = np.zeros(p.shape[:-1] + (3, 3))
    G[..., 0, 0] = G[..., 1, 1] = 1.0 / p[..., 1] ** 2
    G[..., 2, 2] = 1.0
    return G


def ball_to_uhp(q):
    """Disc model -> upper half-plane; z is unchanged."""
    q = np.asarray(q, dtype=float)
    r2 = q[..., 0] ** 2 + q[..., 1] ** 2
    if np.any(r2 > 1):
        raise InvalidPointError("disc point needs xt^2 + yt^2 < 1")
    den = q[..., 0] ** 2 + (q[..., 1] - 1.0) ** 2
    if np.any(den == 0):
        raise OutOfChartError("(0, 1) in the disc maps to infinity")
    if np.any(r2 == 1):
        raise OutOfChartError("boundary of the disc maps to y = 0")
    out = np.empty_like(q)
    out[..., 0] = 2 * q[..., 0] / den
    out[..., 1] = (1 - r2) / den
    out[..., 2] = q[..., 2]
    return out


def uhp_to_ball(p):
    """Upper half-plane -> disc model, xi -> i (xi - i)/(xi + i)."""
    p = _pt(p)
    xi = p[..., 0] + 1j * p[..., 1]
    zeta = 1j * (xi - 1j) / (xi + 1j)
    out = np.empty_like(p)
    out[..., 0] = zeta.real
    out[..., 1] = zeta.imag
    out[..., 2] = p[..., 2]
    return out


def curvature_tensor(p, X, Y, Z, W):
    """Rm(X,Y,Z,W) = -(<Xh,Wh><Yh,Zh> - <Xh,Zh><Yh,Wh>) with horizontal parts only."""
    p = _pt(p)

    def hor(v):
        v = np.array(_vec(v), dtype=float)
        v[..., 2] = 0.0
        return v

    Xh, Yh, Zh, Wh = hor(X), hor(Y), hor(Z), hor(W)
    ip = lambda a, b: metric_uhp(p, a, b)
    return -(ip(Xh, Wh) * ip(Yh, Zh) - ip(Xh, Zh) * ip(Yh, Wh))


def _check_unit(p, nu):
    n2 = metric_uhp(p, nu, nu)
    if np.any(np.abs(n2 - 1.0) > UNIT_TOL):
        raise PreconditionError("normal vector is not unit length")


def sectional_curvature(nu, p=None):
    """Sectional curvature of the plane with unit normal nu: -<nu, dz>^2."""
    p, v = _base_and_vec(nu, p)
    _check_unit(p, v)
    return -v[..., 2] ** 2


def ricci(nu, p=None):
    """Ric(nu, nu) = -1 - K(nu^perp)."""
    return -1.0 - sectional_curvature(nu, p)


def christoffel(p):
    """Gamma[..., k, i, j] for the product metric."""
    p = _pt(p)
    y = p[..., 1]
    G = np.zeros(p.shape[:-1] + (3, 3, 3))
    G[..., 0, 0, 1] = G[..., 0, 1, 0] = -1.0 / y
    G[..., 1, 0, 0] = 1.0 / y
    G[..., 1, 1, 1] = -1.0 / y
    return G


def _h2_geodesic(x0, y0, vx, vy, t):
    """Horizontal geodesic through (x0, y0) with coordinate velocity (vx, vy).

    Conjugates to the base point i by translation and dilation, where the
    geodesic with initial direction e^{ia} is an elliptic rotation of the
    imaginary axis.  Returns the complex position, the complex velocity,
    and the displacement from the start point (computed without cancellation).
    """
    speed_e = np.hypot(vx, vy)
    c = speed_e / y0  # hyperbolic speed
    a = np.arctan2(vy, vx)
    phi = 0.5 * (a - 0.5 * np.pi)
    cs, sn = np.cos(phi), np.sin(phi)
    d = c * t
    w = 1j * np.exp(d)
    den_w = -sn * w + cs
    den_i = -sn * 1j + cs
    # k(w) - k(i) = (w - i) / ((-sn w + cs)(-sn i + cs)) for a det-one Mobius map
    dzeta = 1j * np.expm1(d) / (den_w * den_i)
    vel = y0 * c * w / den_w**2
    moving = speed_e > 0
    disp = np.where(moving, y0 * dzeta, 0.0)
    pos = (x0 + 1j * y0) + disp
    vel = np.where(moving, vel, 0.0)
    return pos, vel, disp


def geodesic(p, v, t):
    """Position, velocity and displacement at parameter t along the geodesic.

    Returns three arrays with trailing axis 3.  The displacement is
    exp_p(tv) - p evaluated in a cancellation-free form, which matters when
    t*|v| is tiny compared with the size of the coordinates.
    """
    p = _pt(p)
    v = _vec(v)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast_shapes(p.shape, v.shape, t.shape + (3,))
    p = np.broadcast_to(p, shape)
    v = np.broadcast_to(v, shape)
    t = np.broadcast_to(t, shape[:-1])
    pos, vel, disp = _h2_geodesic(p[..., 0], p[..., 1], v[..., 0], v[..., 1], t)
    X = np.empty(shape)
    V = np.empty(shape)
    D = np.empty(shape)
    X[..., 0], X[..., 1] = pos.real, pos.imag
    V[..., 0], V[..., 1] = vel.real, vel.imag
    D[..., 0], D[..., 1] = disp.real, disp.imag
    D[..., 2] = t * v[..., 2]
    X[..., 2] = p[..., 2] + D[..., 2]
    V[..., 2] = v[..., 2]
    return X, V, D


def exp_map(p, v, t=1.0):
    """exp_p(t v) in closed form."""
    return geodesic(p, v, t)[0]


ISOMETRY_KINDS = ("parabolic", "dilation", "rotation", "inversion")


def isometry(kind, p, a=0.0):
    """Apply one of the generating isometries; all act trivially on z.

    parabolic: (x + a, y); dilation: (a x, a y); rotation: the elliptic
    rotation fixing (0, 1); inversion: reflection in x^2 + y^2 = 1.
    """
    p = _pt(p)
    x, y = p[..., 0], p[..., 1]
    out = np.array(p, dtype=float)
    if kind == "parabolic":
        out[..., 0] = x + a
    elif kind == "dilation":
        if not a > 0:
            raise PreconditionError("dilation needs a > 0")
        out[..., 0] = a * x
        out[..., 1] = a * y
    elif kind == "rotation":
        r2 = x**2 + y**2
        den = r2 * np.sin(a / 2) ** 2 + np.cos(a / 2) ** 2 - x * np.sin(a)
        if np.any(den == 0):
            raise OutOfChartError("rotation sends the point to infinity")
        out[..., 0] = (0.5 * (1 - r2) * np.sin(a) + x * np.cos(a)) / den
        out[..., 1] = y / den
    elif kind == "inversion":
        r2 = x**2 + y**2
        out[..., 0] = x / r2
        out[..., 1] = y / r2
    else:
        raise ValueError(f"unknown isometry kind {kind!r}")
    if np.any(~np.isfinite(out)) or np.any(out[..., 1] <= 0):
        raise OutOfChartError("image lies on the ideal boundary")
    return out


def hyperbolic_distance(p, q):
    """Distance in H^2 x R."""
    p, q = _pt(p), _pt(q)
    dx2 = (p[..., 0] - q[..., 0]) ** 2 + (p[..., 1] - q[..., 1]) ** 2
    dh = np.arccosh(1 + dx2 / (2 * p[..., 1] * q[..., 1]))
    return np.hypot(dh, p[..., 2] - q[..., 2])
