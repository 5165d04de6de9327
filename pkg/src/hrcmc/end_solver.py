"""
Boundary-value solvers on the truncated end [S, s_max] x S^1 and the
fixed-point construction of cmc 1/2 normal graphs over it.

Fields are expanded in the angular eigenfunctions psi_n (spectral module);
each coefficient solves u'' - gamma_n^2 u = f_n.  The decaying solution is
written with two exponential convolutions,

    A(t) = int_t^inf e^{-gamma (tau - t)} f(tau) dtau,
    u(s) = -int_S^s e^{-gamma (s - t)} A(t) dt        (n >= 2, u(S) = 0)
    u(s) =  int_s^inf e^{gamma (t - s)} A(t) dt        (n = 0, 1, no condition at S)

which are evaluated by one-step recursions whose cell integrals are exact
for the exponential kernel against a local cubic interpolant.  The
recursions never form e^{2 gamma t}, so high modes and long windows are safe.
"""
import json
import logging
import warnings
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.signal import lfilter

from . import catenoid, fermi
from .catenoid import CatenoidParams
from .spectral import SpectralBasis, assemble_cross_section, project, synthesize, DEFAULT_MODES

logger = logging.getLogger(__name__)

TAIL_RATE = 2.0
GL_ORDER = 6


class IndicialCollisionError(ValueError):
    pass


class WeightError(ValueError):
    pass


class ProjectionError(ValueError):
    pass


class NoContractionError(RuntimeError):
    def __init__(self, msg, epsilon=None, norms=None):
        super().__init__(msg)
        self.epsilon = epsilon
        self.norms = norms or []


class WeightDivergenceWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# weighted fields and norms


@dataclass
class WeightedField:
    s: np.ndarray
    theta: np.ndarray
    values: np.ndarray
    mu: float = -2.0
    k: int = 2

    def norm(self, k=None, mu=None):
        return weighted_norm(self, k=self.k if k is None else k, mu=self.mu if mu is None else mu)


def _cosh_pow(s, p):
    """cosh(s)^p without overflow for large |s|."""
    s = np.abs(np.asarray(s, float))
    return np.exp(p * (s - np.log(2.0) + np.log1p(np.exp(-2 * s))))


def weighted_profile(u: WeightedField, k=None, mu=None):
    """(cosh s)^{-mu} times the max over theta of |u| and its derivatives up to order k."""
    from .stencils import derivatives_2d

    k = u.k if k is None else k
    mu = u.mu if mu is None else mu
    vals = np.asarray(u.values, float)
    local = np.abs(vals).max(axis=1)
    if k >= 1:
        hs = u.s[1] - u.s[0]
        us, ut, uss, ust, utt = derivatives_2d(vals, hs, True)
        parts = [us, ut] if k == 1 else [us, ut, uss, ust, utt]
        for d in parts:
            local = np.maximum(local, np.abs(d).max(axis=1))
    return _cosh_pow(u.s, -mu) * local


def weighted_norm(u: WeightedField, k=None, mu=None, warn: bool = True):
    """Grid proxy of sup_s (cosh s)^{-mu} |u|_{k, s}.

    Hoelder seminorms are not included.  When the weighted profile is still
    growing at the last node the norm is not meaningful (the true norm would
    be infinite) and a WeightDivergenceWarning is issued.
    """
    prof = weighted_profile(u, k, mu)
    if warn and _diverging(prof):
        warnings.warn("weighted norm dominated by the truncation point; decay is too slow for this weight",
                      WeightDivergenceWarning, stacklevel=2)
    return float(prof.max())


def _diverging(prof):
    n = len(prof)
    if n < 10 or not np.any(prof > 0):
        return False
    head = prof[: int(0.8 * n)].max()
    return prof[-1] > 1.5 * head and prof[-1] >= prof[-2]


def boundary_norm(basis: SpectralBasis, phi_coeffs):
    """Weighted L^2 norm of boundary data, i.e. the l^2 norm of its psi_n coefficients."""
    return float(np.linalg.norm(phi_coeffs))


# ---------------------------------------------------------------------------
# exponential-fitted convolutions


def _gl_nodes(h):
    x, w = np.polynomial.legendre.leggauss(GL_ORDER)
    return 0.5 * h * (x + 1), 0.5 * h * w


def _cell_values(F, h):
    """Values of the local cubic interpolant at the GL nodes of every cell.

    F: (N, M).  Returns (N-1, Q, M).  Cell c uses nodes c-1..c+2, shifted
    inward at the two ends.
    """
    N = F.shape[0]
    if N < 4:
        raise ValueError("need at least 4 nodes")
    sig, _ = _gl_nodes(h)
    c = np.arange(N - 1)
    start = np.clip(c - 1, 0, N - 4)
    out = np.empty((N - 1, len(sig), F.shape[1]))
    for off in np.unique(start - c):
        xj = (off + np.arange(4)) * h
        L = np.ones((len(sig), 4))
        for j in range(4):
            for k in range(4):
                if k != j:
                    L[:, j] *= (sig - xj[k]) / (xj[j] - xj[k])
        cells = c[start - c == off]
        stencil = F[cells[:, None] + off + np.arange(4)[None, :]]  # (nc, 4, M)
        out[cells] = np.einsum("qj,cjm->cqm", L, stencil)
    return out


def _run(cells, decay):
    """y_{i} = decay * y_{i-1} + cells_i, y_0 = cells_0 path; vectorized over columns."""
    out = np.empty_like(cells)
    for m in range(cells.shape[1]):
        out[:, m] = lfilter([1.0], [1.0, -decay[m]], cells[:, m])
    return out


def backward_convolution(F, h, rate, tail):
    """B_i = int_{s_i}^{inf} e^{-rate (t - s_i)} F(t) dt with B_{N-1} = tail."""
    F = np.atleast_2d(F.T).T
    rate = np.broadcast_to(np.asarray(rate, float), (F.shape[1],))
    sig, w = _gl_nodes(h)
    P = _cell_values(F, h)
    C = np.einsum("q,qm,cqm->cm", w, np.exp(-np.outer(sig, rate)), P)
    decay = np.exp(-rate * h)
    # reverse: B_{N-1} = tail, B_i = decay B_{i+1} + C_i
    x = np.vstack([np.asarray(tail, float)[None, :], C[::-1]])
    B = _run(x, decay)[::-1]
    return B


def forward_convolution(F, h, rate):
    """C_i = int_{s_0}^{s_i} e^{-rate (s_i - t)} F(t) dt."""
    F = np.atleast_2d(F.T).T
    rate = np.broadcast_to(np.asarray(rate, float), (F.shape[1],))
    sig, w = _gl_nodes(h)
    P = _cell_values(F, h)
    C = np.einsum("q,qm,cqm->cm", w, np.exp(-np.outer(h - sig, rate)), P)
    x = np.vstack([np.zeros((1, F.shape[1])), C])
    return _run(x, np.exp(-rate * h))


def mode_green(f_modes, s, gammas, n_low=2, scale_rate=0.0, tail_rate=TAIL_RATE):
    """Decaying solutions of u_n'' - gamma_n^2 u_n = f_n, mode by mode.

    f_modes: (Ns, M).  Modes n < n_low get no condition at s[0], the others
    vanish there.  With scale_rate nu the input and output are the scaled
    coefficients e^{nu s} f_n and e^{nu s} u_n, which keeps very long windows
    representable.  The tail beyond s[-1] is completed assuming f_n decays
    like e^{-tail_rate s}.
    """
    f_modes = np.asarray(f_modes, float)
    s = np.asarray(s, float)
    h = s[1] - s[0]
    g = np.asarray(gammas, float)[: f_modes.shape[1]]
    nu = scale_rate
    kappa = tail_rate - nu
    if kappa <= 0:
        raise ValueError("scale_rate must be below the tail decay rate")
    r_in = g + nu
    A = backward_convolution(f_modes, h, r_in, f_modes[-1] / (r_in + kappa))
    u = np.empty_like(A)
    hi = np.arange(len(g)) >= n_low
    if np.any(hi):
        u[:, hi] = -forward_convolution(A[:, hi], h, g[hi] - nu)
    lo = ~hi
    if np.any(lo):
        q = nu - g[lo]
        if np.any(q + kappa <= 0):
            raise WeightError("low-mode rate too fast for the tail decay")
        u[:, lo] = backward_convolution(A[:, lo], h, q, A[-1, lo] / (q + kappa))
    return u


# ---------------------------------------------------------------------------
# flat model oracle


def flat_green_oracle(f_modes, s, mu, S=None, tail_rate=None):
    """Solutions of u_n'' - n^2 u_n = f_n for the flat Laplacian on [S, inf) x S^1.

    f_modes[:, j] is the coefficient of mode index n = j.  Modes with
    n < |mu| are integrated in from infinity; the others vanish at S.  Both
    nested integrals are composite Simpson on the s-grid, with exponential
    tail completion past s[-1] assuming e^{-tail_rate s} decay (default -mu).
    Written directly from the double-integral formulas so that it is
    independent of the recursions used by green_op; it is accurate while
    n * h is small.
    """
    if mu >= 0:
        raise ValueError("mu must be negative")
    if float(mu).is_integer():
        raise IndicialCollisionError(f"mu = {mu} coincides with an indicial root of the flat model")
    f_modes = np.atleast_2d(np.asarray(f_modes, float).T).T
    s = np.asarray(s, float)
    if S is not None and abs(S - s[0]) > 1e-12:
        raise ValueError("the grid must start at S")
    kappa = -mu if tail_rate is None else tail_rate
    S0, s1 = s[0], s[-1]
    out = np.empty_like(f_modes)
    for j in range(f_modes.shape[1]):
        n = float(j)
        f = f_modes[:, j]
        # I(t) e^{n (t - s1)} = int_t^inf e^{-n (tau - s1)} f dtau, referenced at s1
        g = np.exp(-n * (s - s1)) * f
        tail = f[-1] / (n + kappa)
        J = tail + cumulative_simpson(g[::-1], x=-s[::-1], initial=0.0)[::-1]
        # J(t) = e^{n s1} I(t)
        if n < -mu:
            if kappa <= n:
                raise WeightError(f"tail rate {kappa} too slow for the inward integral of mode {j}")
            # u(s) = e^{-n s} int_s^inf e^{2 n t} I(t) dt = int_s^inf e^{n (2t - s - s1)} J(t) dt
            h2 = np.exp(n * (2 * s - 2 * s1)) * J  # e^{2n(t - s1)} J(t)
            tail2 = J[-1] / (kappa - n)
            K = tail2 + cumulative_simpson(h2[::-1], x=-s[::-1], initial=0.0)[::-1]
            out[:, j] = np.exp(n * (s1 - s)) * K
        else:
            # u(s) = -e^{-n s} int_S^s e^{2nt} I(t) dt = -int_S^s e^{n (2t - s - s1)} J(t) dt
            h2 = np.exp(2 * n * (s - S0)) * J
            K = cumulative_simpson(h2, x=s, initial=0.0)
            out[:, j] = -np.exp(n * (2 * S0 - s - s1)) * K
    return out


# ---------------------------------------------------------------------------
# Poisson and Green operators


def _flat_absorbed(basis):
    return basis.params is None


def end_grid(params: CatenoidParams, s_max=None, n_s=None, h=0.02):
    """Uniform s-grid from S_eps to s_max (default S_eps + 8)."""
    S = catenoid.truncation_S(params.epsilon)
    s_max = S + 8.0 if s_max is None else s_max
    if n_s is None:
        n_s = int(round((s_max - S) / h)) + 1
    return np.linspace(S, s_max, n_s)


def boundary_coefficients(basis: SpectralBasis, phi_samples, tol=1e-10):
    """psi_n coefficients of boundary samples, rejecting content on n = 0, 1."""
    c = project(basis, phi_samples)
    scale = max(np.abs(c).max(), 1e-300)
    if np.abs(c[:2]).max() > tol * max(scale, 1.0):
        raise ProjectionError("boundary data has components on psi_0 or psi_1")
    c = c.copy()
    c[:2] = 0.0
    return c


def poisson_op(basis: SpectralBasis, phi_coeffs, s, n_theta=64, mu=-2.0, k=2) -> WeightedField:
    """u = sum_{n>=2} phi_n e^{-gamma_n (s - S)} psi_n, the decaying solution of L u = 0 with trace phi."""
    phi = np.zeros(basis.n_modes)
    pc = np.asarray(phi_coeffs, float)
    phi[: len(pc)] = pc
    if np.abs(phi[:2]).max() > 1e-12 * max(1.0, np.abs(phi).max()):
        raise ProjectionError("boundary data has components on psi_0 or psi_1")
    phi[:2] = 0.0
    s = np.asarray(s, float)
    coeffs = phi[None, :] * np.exp(-np.outer(s - s[0], basis.gammas))
    theta = catenoid.periodic_theta(n_theta)
    return WeightedField(s, theta, synthesize(basis, coeffs, n_theta), mu, k)


def check_decay(f: WeightedField):
    prof = weighted_profile(f, 0, -2.0)
    if _diverging(prof):
        raise WeightError("source decays slower than e^{-2s}; its weighted norm diverges on this grid")


def green_op(basis: SpectralBasis, f: WeightedField, check: bool = True) -> WeightedField:
    """Decaying solution of L u = f with the n >= 2 boundary coefficients zero at S.

    L = d_s^2 + d_theta^2 + alpha^{-2} E (no sech^2 term).  Modes 0 and 1
    carry no boundary condition; their boundary values are what
    low_mode_leakage reports.
    """
    if check:
        check_decay(f)
    fm = project(basis, f.values)
    um = mode_green(fm, f.s, basis.gammas)
    return WeightedField(f.s, f.theta, synthesize(basis, um, len(f.theta)), f.mu, f.k)


def low_mode_leakage(basis: SpectralBasis, u: WeightedField):
    c = project(basis, u.values[0])
    return {"n0": float(c[0]), "n1": float(c[1])}


def amplification(params: CatenoidParams, n_modes=DEFAULT_MODES, window=None, h=0.05, modes=None):
    """Weighted C^0 gain sup(cosh^2 s |u|) / sup(cosh^2 s |f|) of the Green operator.

    Measured on the inputs f = e^{-2s} psi_n, one mode at a time, and the
    worst case is returned with its mode.  For n = 2 the gain only saturates
    once s - S is many multiples of 1/(gamma_2 - 2), so the default window
    is 10/(gamma_2 - 2) and the computation uses scaled coefficients
    e^{2s} u_n so nothing underflows.
    """
    basis = assemble_cross_section(params, n_modes)
    g = basis.gammas
    S = catenoid.truncation_S(params.epsilon)
    if window is None:
        window = max(8.0, 10.0 / (g[2] - 2.0))
    s = np.arange(0, int(np.ceil(window / h)) + 1) * h + S
    modes = range(n_modes) if modes is None else modes
    nu = 1.9  # just below the tail rate; rescale afterwards
    w = (0.5 * (1 + np.exp(-2 * s))) ** 2  # cosh^2 s e^{-2s}
    gains = {}
    for n in modes:
        F = np.zeros((len(s), n_modes))
        F[:, n] = np.exp((nu - 2.0) * s)  # e^{nu s} e^{-2s}
        U = mode_green(F, s, g, scale_rate=nu)
        un = U[:, n] * np.exp((2.0 - nu) * s)  # e^{2s} u_n
        gains[n] = float(np.max(w * np.abs(un)) / np.max(w))
    worst = max(gains, key=gains.get)
    return gains[worst], worst, gains


# ---------------------------------------------------------------------------
# nonlinear end


@dataclass
class EndConfig:
    s_max: Optional[float] = None
    h: float = 0.02
    n_theta: int = 64
    n_modes: int = DEFAULT_MODES
    tol: float = 1e-8
    max_iter: int = 20
    relax: Optional[float] = None
    epsilon0: float = 0.15
    check_phi: bool = True


@dataclass
class EndSolution:
    params: CatenoidParams
    phi: np.ndarray
    w: WeightedField
    w0: WeightedField
    v: WeightedField
    trace: list
    contraction_factors: list
    iterations: int
    final_H_deviation: float
    low_mode_leakage: dict
    phi_norm: float

    def report(self):
        return {
            "alpha": float(self.params.alpha),
            "epsilon": float(self.params.epsilon),
            "phi_norm": self.phi_norm,
            "iterations": self.iterations,
            "contraction_factors": [float(c) for c in self.contraction_factors],
            "final_H_deviation": float(self.final_H_deviation),
            "low_mode_leakage": self.low_mode_leakage,
        }

    def to_json(self, path=None):
        txt = json.dumps(self.report(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(txt + "\n")
        return txt

    def to_csv(self, path):
        S, T = np.meshgrid(self.w.s, self.w.theta, indexing="ij")
        rows = np.column_stack([S.ravel(), T.ravel(), self.w.values.ravel()])
        np.savetxt(path, rows, delimiter=",", header="s,theta,w", comments="", fmt="%.17g")


def fixed_point_source(grid, w):
    """Right-hand side of L w = -2 sech^2 s w - 2 Q(w) / Omega, the cmc 1/2 condition."""
    S, T = np.meshgrid(grid.s_values, grid.theta_values, indexing="ij")
    Q = fermi.nonlinear_remainder_Q(fermi.NormalGraphField(grid, w))
    c = 1.0 / catenoid.conformal_factor(grid.params, S, T)
    return -2 * w / np.cosh(S) ** 2 - 2 * c * Q


def solve_cmc_end(params: CatenoidParams, phi_coeffs, config: Optional[EndConfig] = None) -> EndSolution:
    """Picard iteration v <- G(source(w0 + v)) with w0 the Poisson extension of phi.

    phi_coeffs are psi_n coefficients (n >= 2) of the boundary data.
    """
    cfg = config or EndConfig()
    eps = params.epsilon
    if eps > cfg.epsilon0:
        raise ValueError(f"epsilon = {eps} above the configured epsilon0 = {cfg.epsilon0}")
    basis = assemble_cross_section(params, cfg.n_modes)
    phi = np.zeros(cfg.n_modes)
    phi[: len(phi_coeffs)] = phi_coeffs
    pn = boundary_norm(basis, phi)
    if cfg.check_phi and pn > eps**2 * (1 + 1e-12):
        raise ValueError(f"boundary data too large: |phi| = {pn:.3e} > eps^2 = {eps**2:.3e}")
    s = end_grid(params, cfg.s_max, h=cfg.h)
    theta = catenoid.periodic_theta(cfg.n_theta)
    grid = catenoid.build_grid(params, s, theta)
    w0 = poisson_op(basis, phi, s, cfg.n_theta)
    v = np.zeros_like(w0.values)
    trace, factors = [], []
    ref = max(weighted_norm(w0, 0, warn=False), 1e-300)
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        w = w0.values + v
        if np.abs(w).max() >= fermi.TUBE_RADIUS:
            raise NoContractionError("iterate left the tube |w| < 1/4", eps, trace)
        f = WeightedField(s, theta, fixed_point_source(grid, w))
        v_new = green_op(basis, f, check=False).values
        if cfg.relax:
            v_new = (1 - cfg.relax) * v + cfg.relax * v_new
        d = weighted_norm(WeightedField(s, theta, v_new - v), 0, warn=False)
        trace.append(d)
        if len(trace) > 1 and trace[-2] > 0:
            factors.append(d / trace[-2])
        v = v_new
        logger.debug("iteration %d: |dv| = %.3e", it, d)
        if d <= cfg.tol * ref or d == 0.0:
            converged = True
            break
        if len(factors) >= 3 and min(factors[-3:]) > 1.0:
            raise NoContractionError(f"Picard iteration diverges at epsilon = {eps}", eps, trace)
    if not converged:
        raise NoContractionError(f"no convergence in {cfg.max_iter} iterations at epsilon = {eps}", eps, trace)
    wf = WeightedField(s, theta, w0.values + v)
    dH = fermi.mean_curvature_increment(fermi.NormalGraphField(grid, wf.values))
    H = fermi.base_curvature(grid) + dH
    inner = slice(4, -4)
    dev = float(np.abs(H[inner] - 0.5).max())
    vf = WeightedField(s, theta, v)
    return EndSolution(params, phi, wf, w0, vf, trace, factors, it, dev, low_mode_leakage(basis, vf), pn)


def estimate_epsilon0(epsilons, n=2, config: Optional[EndConfig] = None):
    """Largest epsilon in the list for which phi = eps^2 psi_n gives a contracting iteration."""
    cfg = config or EndConfig()
    best = None
    results = {}
    for eps in sorted(epsilons):
        params = CatenoidParams.from_epsilon(eps)
        phi = np.zeros(n + 1)
        phi[n] = eps**2
        c = EndConfig(**{**asdict(cfg), "epsilon0": np.inf})
        try:
            sol = solve_cmc_end(params, phi, c)
            results[eps] = max(sol.contraction_factors) if sol.contraction_factors else 0.0
            best = eps
        except NoContractionError:
            results[eps] = None
    return best, results
