"""
The Jacobi operator of the horizontal catenoids in (s, theta) coordinates.

Up to the conformal factor alpha^2 (alpha - phi')^2 / cosh^2 s, the Jacobi
operator is

    d_s^2 + d_theta^2 + alpha^{-2} E + 2 sech^2 s,

with E = ((cos 2t + 1)/2) d_t^2 - (sin 2t / 2) d_t + cos 2t.  The angular part
d_t^2 + alpha^{-2} E is self-adjoint for the weight (1 + alpha^{-2} cos^2 t)^{-1/2};
conjugating by m = (1 + alpha^{-2} cos^2 t)^{1/4} gives a symmetric operator T
on plain L^2, which is what gets discretized.  Everything lives on the space
of functions with f(pi - t) = f(t).
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .catenoid import CatenoidParams
from .stencils import d_fd, d_spectral

DEFAULT_MODES = 32
OVERSAMPLE = 4


class AssemblyError(RuntimeError):
    pass


class SpectralAccuracyError(RuntimeError):
    pass


class SymmetryError(ValueError):
    pass


def trig_basis(n_modes, theta, deriv=0):
    """Even-symmetry trig basis e_k(theta), k < n_modes, as an (n_modes, len(theta)) array.

    e_0 = 1/sqrt(2 pi); cos(k t)/sqrt(pi) for even k; sin(k t)/sqrt(pi) for odd k.
    """
    theta = np.asarray(theta, float)
    k = np.arange(n_modes)[:, None]
    kt = k * theta[None, :]
    # d^j/dt^j cos(kt) = k^j cos(kt + j pi/2), same shift for sin
    shift = deriv * np.pi / 2
    even = (k % 2 == 0)
    vals = np.where(even, np.cos(kt + shift), np.sin(kt + shift)) * k.astype(float) ** deriv / np.sqrt(np.pi)
    if deriv == 0:
        vals[0] = 1.0 / np.sqrt(2 * np.pi)
    else:
        vals[0] = 0.0
    return vals


def _m(alpha, theta):
    if alpha is None:
        return np.ones_like(np.asarray(theta, float))
    return (1.0 + np.cos(theta) ** 2 / alpha**2) ** 0.25


def apply_E(f, axis=-1):
    """E f on a uniform periodic theta grid (Fourier derivatives)."""
    f = np.asarray(f, float)
    n = f.shape[axis]
    theta = 2 * np.pi * np.arange(n) / n
    shape = [1] * f.ndim
    shape[axis] = n
    c2 = np.cos(2 * theta).reshape(shape)
    s2 = np.sin(2 * theta).reshape(shape)
    f1 = d_spectral(f, 1, axis=axis)
    f2 = d_spectral(f, 2, axis=axis)
    return 0.5 * (c2 + 1) * f2 - 0.5 * s2 * f1 + c2 * f


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenpairs of the angular operator on the even-symmetry space.

    coeffs[:, n] holds the trig-basis coefficients of chi_n = psi_n / m,
    which are orthonormal in plain L^2; psi_n themselves are orthonormal for
    the weighted measure.  alpha is None for the flat model (E switched off).
    """

    params: Optional[CatenoidParams]
    n_modes: int
    lambdas: np.ndarray
    gammas: np.ndarray
    coeffs: np.ndarray
    asymmetry: float = 0.0

    @property
    def alpha(self):
        return None if self.params is None else self.params.alpha

    def weight(self, theta):
        return _m(self.alpha, theta) ** -2

    def conjugator(self, theta):
        return _m(self.alpha, theta)

    def chi(self, theta):
        """chi_n(theta) as (n_modes, len(theta))."""
        return self.coeffs.T @ trig_basis(self.n_modes, theta)

    def evaluate(self, theta, deriv=0):
        """psi_n(theta) (or its first/second derivative) as (n_modes, len(theta))."""
        theta = np.asarray(theta, float)
        if deriv == 0:
            return self.chi(theta) * _m(self.alpha, theta)[None, :]
        # derivatives by the product rule with a complex step for m
        h = 1e-30
        m = _m(self.alpha, theta)
        if self.alpha is None:
            m1 = m2 = np.zeros_like(theta)
        else:
            m1 = _m(self.alpha, theta + 1j * h).imag / h
            dd = 1e-4
            m2 = (_m(self.alpha, theta + dd + 1j * h).imag - _m(self.alpha, theta - dd + 1j * h).imag) / (2 * dd * h)
        c = self.coeffs.T
        chi0 = c @ trig_basis(self.n_modes, theta)
        chi1 = c @ trig_basis(self.n_modes, theta, 1)
        if deriv == 1:
            return chi1 * m + chi0 * m1
        chi2 = c @ trig_basis(self.n_modes, theta, 2)
        return chi2 * m + 2 * chi1 * m1 + chi0 * m2

    def inner(self, f, g, theta):
        """Weighted inner product of samples on a uniform periodic grid (trapezoid)."""
        w = self.weight(theta)
        return np.sum(f * g * w, axis=-1) * (2 * np.pi / len(theta))


def assemble_cross_section(params: Optional[CatenoidParams], n_modes: int = DEFAULT_MODES,
                           include_E: bool = True) -> SpectralBasis:
    """Galerkin eigenpairs of d_t^2 + alpha^{-2} E on the even-symmetry space."""
    if n_modes < 8:
        raise ValueError("n_modes must be at least 8")
    if params is None or not include_E:
        lam = -np.arange(n_modes, dtype=float) ** 2
        return SpectralBasis(None, n_modes, lam, np.sqrt(-lam), np.eye(n_modes))
    a = params.alpha
    nq = OVERSAMPLE * 2 * n_modes
    t = 2 * np.pi * np.arange(nq) / nq
    e = trig_basis(n_modes, t)
    m = _m(a, t)
    u = m[None, :] * e
    # strong form of m^{-1} (d_t^2 + a^{-2} E)(m e_k), derivatives spectral on the fine grid
    u1 = d_spectral(u, 1, axis=1)
    u2 = d_spectral(u, 2, axis=1)
    c2, s2 = np.cos(2 * t), np.sin(2 * t)
    Au = u2 + (0.5 * (c2 + 1) * u2 - 0.5 * s2 * u1 + c2 * u) / a**2
    T = (e / m[None, :]) @ Au.T * (2 * np.pi / nq)
    asym = float(np.abs(T - T.T).max())
    if asym > 1e-10 * max(1.0, np.abs(T).max()):
        raise AssemblyError(f"conjugated angular operator not symmetric (defect {asym:.3e})")
    T = 0.5 * (T + T.T)
    try:
        w, V = np.linalg.eigh(T)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SpectralAccuracyError("eigensolver failed") from exc
    order = np.argsort(w)[::-1]
    lam, V = w[order], V[:, order]
    # sign: positive weighted inner product with the unperturbed e_n,
    # <psi_n, e_n>_w = int chi_n e_n / m
    proj = np.einsum("kn,kq,nq->n", V, e, e / m[None, :]) * (2 * np.pi / nq)
    V = V * np.where(proj < 0, -1.0, 1.0)[None, :]
    return SpectralBasis(params, n_modes, lam, np.sqrt(np.abs(lam)), V, asym)


def indicial_roots(basis: SpectralBasis, check: bool = True, n_check: int = 10):
    """gamma_n = sqrt|lambda_n|, optionally checking 0 = g0 < g1 < 2 < g2 < ... and g_n > n."""
    g = basis.gammas
    if check and basis.params is not None:
        n_check = min(n_check, basis.n_modes - 1)
        ok = g[0] < 1e-6 and g[1] < 2 < g[2]
        ok &= bool(np.all(np.diff(g[: n_check + 1]) > 0))
        ok &= bool(np.all(g[2 : n_check + 1] > np.arange(2, n_check + 1)))
        if not ok:
            raise SpectralAccuracyError("indicial root ordering violated; increase n_modes")
    return g


def check_even(phi, tol=1e-8):
    phi = np.asarray(phi, float)
    n = phi.shape[-1]
    if n % 2:
        raise SymmetryError("theta grid must have an even number of nodes")
    mirror = (n // 2 - np.arange(n)) % n
    defect = np.abs(phi - phi[..., mirror]).max()
    if defect > tol * max(1.0, np.abs(phi).max()):
        raise SymmetryError(f"field is not symmetric under theta -> pi - theta (defect {defect:.3e})")


def project(basis: SpectralBasis, phi, check: bool = True):
    """Weighted coefficients <phi, psi_n> of samples on a uniform periodic grid.

    Works along the last axis, so a (Ns, Nt) field gives (Ns, n_modes).
    """
    phi = np.asarray(phi, float)
    if check:
        check_even(phi)
    n = phi.shape[-1]
    theta = 2 * np.pi * np.arange(n) / n
    kern = basis.chi(theta) / _m(basis.alpha, theta)[None, :]
    return phi @ kern.T * (2 * np.pi / n)


def project_high(basis: SpectralBasis, phi):
    """(coefficients with n >= 2, rejected (n = 0, 1) coefficients)."""
    c = project(basis, phi)
    low = c[..., :2].copy()
    c[..., :2] = 0.0
    return c, low


def synthesize(basis: SpectralBasis, coeffs, n_theta: int):
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    return np.asarray(coeffs) @ basis.evaluate(theta)


@dataclass
class ModeExpansion:
    s_grid: np.ndarray
    coeffs: np.ndarray  # (Ns, n_modes)
    basis: SpectralBasis

    @classmethod
    def from_field(cls, basis, s_grid, u, check=True):
        return cls(np.asarray(s_grid), project(basis, u, check), basis)

    def reconstruct(self, n_theta):
        return synthesize(self.basis, self.coeffs, n_theta)


def apply_L(params: Optional[CatenoidParams], u, s_values, include_sech: bool = True, drop_E: bool = False):
    """u_ss + u_tt + alpha^{-2} E u (+ 2 sech^2 s u) on an (s, theta) grid.

    s runs along axis 0 with 4th-order differences; theta along axis 1 is
    periodic and uniform, differentiated spectrally.
    """
    u = np.asarray(u, float)
    s_values = np.asarray(s_values, float)
    h = s_values[1] - s_values[0]
    out = d_fd(u, h, 2, axis=0) + d_spectral(u, 2, axis=1)
    if params is not None and not drop_E:
        out = out + apply_E(u, axis=1) / params.alpha**2
    if include_sech:
        out = out + 2 * (u / np.cosh(s_values)[:, None] ** 2)
    return out


def jacobi_operator(params: CatenoidParams, u, s_values):
    """The geometric Jacobi operator: conformal factor times the sech-including operator."""
    from .catenoid import conformal_factor

    n = u.shape[1]
    theta = 2 * np.pi * np.arange(n) / n
    S, T = np.meshgrid(s_values, theta, indexing="ij")
    return conformal_factor(params, S, T) * apply_L(params, u, s_values, True)


# ---------------------------------------------------------------------------
# Jacobi fields


def mode_one_ode(params: CatenoidParams):
    k = 1.0 + params.epsilon

    def rhs(s, y):
        return [y[1], -(2.0 / np.cosh(s) ** 2 - k**2) * y[0]]

    return rhs


def _dense(sol, s, comp):
    """Component of a dense ODE solution at s of any shape."""
    s = np.asarray(s, float)
    return sol(s.ravel())[comp].reshape(s.shape)


@dataclass
class ModeOneSolutions:
    """Solutions of v'' + (2 sech^2 s - (1+eps)^2) v = 0 on [-s_max, s_max].

    v_plus is the odd solution (v(0) = 0, v'(0) = 1) and grows like
    e^{(1+eps)s}.  v_minus is the solution decaying like e^{-(1+eps)s} as
    s -> +infinity, normalized by v(0) = 1.  For eps > 0 the decaying
    solution is not even: the even solution grows at both ends.
    """

    params: CatenoidParams
    s_max: float
    _plus: object
    _minus: object
    minus_scale: float

    def v_plus(self, s):
        s = np.asarray(s, float)
        return np.sign(s) * _dense(self._plus, np.abs(s), 0)

    def dv_plus(self, s):
        s = np.asarray(s, float)
        return _dense(self._plus, np.abs(s), 1)

    def v_minus(self, s):
        return _dense(self._minus, s, 0) / self.minus_scale

    def dv_minus(self, s):
        return _dense(self._minus, s, 1) / self.minus_scale

    def v_even(self, s):
        """The even solution with v(0) = 1, v'(0) = 0 (for comparison)."""
        # v_minus = v_even + v_minus'(0) v_plus
        return self.v_minus(s) - self.dv_minus(0.0) * self.v_plus(s)


def mode_one_solutions(params: CatenoidParams, s_max: float = 14.0, rtol: float = 1e-12) -> ModeOneSolutions:
    rhs = mode_one_ode(params)
    k = 1.0 + params.epsilon
    # explicit first steps: the automatic choice divides by the tiny atol scale
    plus = solve_ivp(rhs, (0.0, s_max), [0.0, 1.0], method="DOP853", rtol=rtol, atol=1e-300,
                     dense_output=True, first_step=1e-3)
    # start far out with the asymptotic decaying data and integrate inwards,
    # the direction in which the decaying solution dominates
    L = s_max + 12.0
    y0 = [np.exp(-k * L), -k * np.exp(-k * L)]
    minus = solve_ivp(rhs, (L, -s_max), y0, method="DOP853", rtol=rtol, atol=1e-300,
                      dense_output=True, first_step=1e-3)
    scale = float(minus.sol(0.0)[0])
    return ModeOneSolutions(params, s_max, plus.sol, minus.sol, scale)


def jacobi_fields(params: CatenoidParams, s_max: float = 14.0):
    """The six low-mode Jacobi fields as callables f(s, theta)."""
    a = params.alpha
    w0 = lambda th: np.sqrt(1 + np.cos(th) ** 2 / a**2)
    sol = mode_one_solutions(params, s_max)
    return {
        "tanh": lambda s, th: w0(th) * np.tanh(s),
        "s_tanh": lambda s, th: w0(th) * (s * np.tanh(s) - 1),
        "cos_sech": lambda s, th: np.cos(th) / np.cosh(s),
        "cos_growing": lambda s, th: (s / np.cosh(s) + np.sinh(s)) * np.cos(th),
        "sin_minus": lambda s, th: sol.v_minus(s) * np.sin(th),
        "sin_plus": lambda s, th: sol.v_plus(s) * np.sin(th),
    }


def log_slope(f, s_lo, s_hi, n=81):
    """Least-squares slope of log|f| on [s_lo, s_hi]."""
    s = np.linspace(s_lo, s_hi, n)
    return float(np.polyfit(s, np.log(np.abs(f(s))), 1)[0])


def low_mode_line_spectrum(params: CatenoidParams, L: float = 10.0, n_s: int = 2001, n_eigs: int = 3):
    """Smallest-magnitude eigenvalues of d_s^2 + 2 sech^2 s + lambda on [-L, L].

    Done for the three lowest angular eigenvalues of the full (not
    symmetry-reduced) cross-section: 0 (constant-type mode), -1 (cos theta)
    and -(1 + eps)^2 (sin theta), with Dirichlet conditions standing in for
    decay.  Returns {mode: (eigenvalues, eigenvectors, s)}.
    """
    from scipy.linalg import eigh_tridiagonal

    s = np.linspace(-L, L, n_s)[1:-1]
    h = s[1] - s[0]
    out = {}
    k2 = (1.0 + params.epsilon) ** 2
    for name, lam in (("zero", 0.0), ("cos", -1.0), ("sin", -k2)):
        d = -2.0 / h**2 + 2.0 / np.cosh(s) ** 2 + lam
        e = np.full(len(s) - 1, 1.0 / h**2)
        w, V = eigh_tridiagonal(d, e)
        idx = np.argsort(np.abs(w))[:n_eigs]
        out[name] = (w[idx], V[:, idx], s)
    return out
