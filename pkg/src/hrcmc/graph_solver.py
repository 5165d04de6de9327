"""
Horizontal graphs y = g(x, z) with constant mean curvature 1/2.

M(g) below is twice the mean curvature of the graph, so the problem is
M(g) = 1 in a planar domain with g = 1 + psi on the boundary.  Domains are
discs in the xz-plane with circular holes centred on the x-axis; curved
boundaries enter through Shortley-Weller stencils, i.e. non-uniform
three-point differences that use the boundary crossing point on each grid
line instead of the neighbouring node.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve

logger = logging.getLogger(__name__)

INTERIOR_MARGIN = 1e-3  # nodes closer than this many h to the boundary are not unknowns


class DomainError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, history):
        super().__init__(msg)
        self.history = list(history)


class PreconditionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# M(g) on plain arrays


def graph_operator(g, gx, gz, gxx, gxz, gzz):
    """(g^2 / W^3) ((g^2 + gz^2) gxx - 2 gx gz gxz + (1 + gx^2) gzz + g (1 + gx^2))."""
    W = np.sqrt(g**2 * (1 + gx**2) + gz**2)
    B = (g**2 + gz**2) * gxx - 2 * gx * gz * gxz + (1 + gx**2) * gzz + g * (1 + gx**2)
    # written as (g/W)^2 (B/W) so that constants give exactly 1
    return (g / W) ** 2 * (B / W)


def graph_operator_partials(g, gx, gz, gxx, gxz, gzz):
    """Partial derivatives of M with respect to (g, gx, gz, gxx, gxz, gzz)."""
    W2 = g**2 * (1 + gx**2) + gz**2
    W3 = W2**1.5
    W5 = W2**2.5
    P = g**2 / W3
    B = (g**2 + gz**2) * gxx - 2 * gx * gz * gxz + (1 + gx**2) * gzz + g * (1 + gx**2)
    Pg = 2 * g / W3 - 1.5 * g**2 / W5 * (2 * g * (1 + gx**2))
    Pgx = -1.5 * g**2 / W5 * (2 * g**2 * gx)
    Pgz = -1.5 * g**2 / W5 * (2 * gz)
    Bg = 2 * g * gxx + (1 + gx**2)
    Bgx = -2 * gz * gxz + 2 * gx * gzz + 2 * g * gx
    Bgz = 2 * gz * gxx - 2 * gx * gxz
    return (Pg * B + P * Bg, Pgx * B + P * Bgx, Pgz * B + P * Bgz,
            P * (g**2 + gz**2), P * (-2 * gx * gz), P * (1 + gx**2))


def mean_curvature_grid(g, h):
    """M(g) at the interior nodes of a rectangular grid (centred 2nd-order differences).

    g is indexed [ix, iz]; returns an array two nodes smaller in each direction.
    """
    g = np.asarray(g, float)
    if np.any(g <= 0):
        raise DomainError("graph must stay in y > 0")
    c = g[1:-1, 1:-1]
    gx = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2 * h)
    gz = (g[1:-1, 2:] - g[1:-1, :-2]) / (2 * h)
    gxx = (g[2:, 1:-1] - 2 * c + g[:-2, 1:-1]) / h**2
    gzz = (g[1:-1, 2:] - 2 * c + g[1:-1, :-2]) / h**2
    gxz = (g[2:, 2:] - g[2:, :-2] - g[:-2, 2:] + g[:-2, :-2]) / (4 * h**2)
    return graph_operator(c, gx, gz, gxx, gxz, gzz)


# ---------------------------------------------------------------------------
# domains and boundary data


@dataclass
class BoundaryPoint:
    component: int  # 0 = outer circle, j >= 1 = hole j-1
    angle: float
    x: float
    z: float


class PlanarDomain:
    """B_r(0) minus disjoint discs B_{r_j}((x_j, 0)), sampled on a square grid."""

    def __init__(self, r: float, holes: Sequence = (), h: Optional[float] = None):
        self.r = float(r)
        self.holes = [(float(x), float(rj)) for x, rj in holes]
        self.h = self.r / 128 if h is None else float(h)
        self._check()
        n = int(np.ceil(self.r / self.h)) + 1
        self.x = np.arange(-n, n + 1) * self.h
        self.z = self.x.copy()
        X, Z = np.meshgrid(self.x, self.z, indexing="ij")
        self.X, self.Z = X, Z
        self.mask = self._inside(X, Z, INTERIOR_MARGIN * self.h)
        self.index = -np.ones(X.shape, dtype=int)
        self.nodes = np.argwhere(self.mask)
        self.index[self.mask] = np.arange(len(self.nodes))
        self._build_neighbours()

    def _check(self):
        if self.r <= 0:
            raise DomainError("outer radius must be positive")
        for i, (x, rj) in enumerate(self.holes):
            if rj <= 0 or abs(x) + rj >= self.r:
                raise DomainError(f"hole {i} is not strictly inside the outer disc")
            for x2, r2 in self.holes[i + 1:]:
                if abs(x - x2) <= rj + r2:
                    raise DomainError("holes must be pairwise disjoint")

    def circles(self):
        """(centre, radius, inside-is-domain) for every boundary component."""
        out = [((0.0, 0.0), self.r, True)]
        out += [((x, 0.0), rj, False) for x, rj in self.holes]
        return out

    def _inside(self, X, Z, margin=0.0):
        ok = X**2 + Z**2 < (self.r - margin) ** 2
        for x, rj in self.holes:
            ok &= (X - x) ** 2 + Z**2 > (rj + margin) ** 2
        return ok

    @property
    def n_unknowns(self):
        return len(self.nodes)

    def _crossing(self, px, pz, dx, dz):
        """Distance to the first boundary crossing along (dx, dz), and its component/angle."""
        best = (np.inf, -1)
        for k, ((cx, cz), rad, inner) in enumerate(self.circles()):
            qx, qz = px - cx, pz - cz
            b = qx * dx + qz * dz
            c = qx**2 + qz**2 - rad**2
            disc = b * b - c
            # grid lines tangent to a circle give disc = 0 up to rounding
            if disc < -1e-12 * rad**2:
                continue
            sq = np.sqrt(max(disc, 0.0))
            for t in (-b - sq, -b + sq):
                if t > 0 and t < best[0]:
                    best = (t, k)
        t, k = best
        (cx, cz), _, _ = self.circles()[k]
        bx, bz = px + t * dx, pz + t * dz
        return t, k, float(np.arctan2(bz - cz, bx - cx)), bx, bz

    def _build_neighbours(self):
        """For each node and direction: (neighbour index or -1, distance, boundary point id)."""
        self.boundary_points = []
        n = self.n_unknowns
        self.nbr = np.full((n, 4), -1, dtype=int)  # +x, -x, +z, -z
        self.dist = np.full((n, 4), self.h)
        self.bid = np.full((n, 4), -1, dtype=int)
        dirs = [(1, 0), (-1, 0), (0, 1), (0, -1)]
        for a, (i, j) in enumerate(self.nodes):
            for d, (di, dj) in enumerate(dirs):
                ii, jj = i + di, j + dj
                if 0 <= ii < len(self.x) and 0 <= jj < len(self.z) and self.mask[ii, jj]:
                    self.nbr[a, d] = self.index[ii, jj]
                    continue
                t, k, ang, bx, bz = self._crossing(self.x[i], self.z[j], di, dj)
                if not t <= self.h * (1 + 2 * INTERIOR_MARGIN):
                    raise DomainError("grid line leaves the domain without a boundary crossing")
                self.dist[a, d] = t
                self.bid[a, d] = len(self.boundary_points)
                self.boundary_points.append(BoundaryPoint(k, ang, bx, bz))

    def to_json(self):
        return {"r": self.r, "holes": [{"x": x, "r": rj} for x, rj in self.holes], "h": self.h}

    @classmethod
    def from_json(cls, d):
        return cls(d["r"], [(hh["x"], hh["r"]) for hh in d.get("holes", [])], d.get("h"))


BoundaryValue = Union[float, Callable[[np.ndarray], np.ndarray], np.ndarray]


def _eval_component(spec: BoundaryValue, angles):
    angles = np.asarray(angles, float)
    if callable(spec):
        return np.asarray(spec(angles), float) * np.ones_like(angles)
    arr = np.asarray(spec, float)
    if arr.ndim == 0:
        return np.full_like(angles, float(arr))
    # samples at equally spaced angles 2 pi k / n, periodic linear interpolation
    grid = 2 * np.pi * np.arange(len(arr)) / len(arr)
    return np.interp(np.mod(angles, 2 * np.pi), grid, arr, period=2 * np.pi)


@dataclass
class DirichletData:
    """psi on the outer circle and on each hole, as constants, callables of the angle, or samples."""

    psi_out: BoundaryValue = 0.0
    psi_in: list = field(default_factory=list)

    def component(self, k):
        if k == 0:
            return self.psi_out
        if k - 1 < len(self.psi_in):
            return self.psi_in[k - 1]
        return 0.0

    def values(self, k, angles):
        return _eval_component(self.component(k), angles)

    def sup_norm(self, domain: PlanarDomain, n=720):
        a = 2 * np.pi * np.arange(n) / n
        return max(np.abs(self.values(k, a)).max() for k in range(1 + len(domain.holes)))

    def boundary_vector(self, domain: PlanarDomain):
        """1 + psi at every boundary crossing point of the grid."""
        bp = domain.boundary_points
        out = np.empty(len(bp))
        for k in range(1 + len(domain.holes)):
            idx = [i for i, p in enumerate(bp) if p.component == k]
            if idx:
                out[idx] = 1.0 + self.values(k, [bp[i].angle for i in idx])
        return out


# ---------------------------------------------------------------------------
# difference operators as affine maps  D g = A g_int + B g_bdry


@dataclass
class DifferenceOperators:
    Dx: tuple
    Dz: tuple
    Dxx: tuple
    Dzz: tuple
    Dxz: tuple
    interior: tuple = ()


def _sw_coeffs(hl, hr, order):
    """Three-point weights (left, centre, right); the centre weight is minus the sum of the others."""
    if order == 1:
        cl, cr = -hr / (hl * (hl + hr)), hl / (hr * (hl + hr))
    else:
        cl, cr = 2.0 / (hl * (hl + hr)), 2.0 / (hr * (hl + hr))
    return cl, -(cl + cr), cr


def _axis_operator(dom: PlanarDomain, axis, order):
    n, nb = dom.n_unknowns, len(dom.boundary_points)
    dp, dm = (0, 1) if axis == 0 else (2, 3)
    hr, hl = dom.dist[:, dp], dom.dist[:, dm]
    cl, c0, cr = _sw_coeffs(hl, hr, order)
    rows = np.arange(n)
    Ar, Ac, Av, Br, Bc, Bv = [rows], [rows], [c0], [], [], []
    for d, c in ((dp, cr), (dm, cl)):
        inn = dom.nbr[:, d] >= 0
        Ar.append(rows[inn]); Ac.append(dom.nbr[inn, d]); Av.append(c[inn])
        Br.append(rows[~inn]); Bc.append(dom.bid[~inn, d]); Bv.append(c[~inn])
    A = sp.csr_matrix((np.concatenate(Av), (np.concatenate(Ar), np.concatenate(Ac))), shape=(n, n))
    B = sp.csr_matrix((np.concatenate(Bv), (np.concatenate(Br), np.concatenate(Bc))), shape=(n, nb))
    return A, B


def _interior_first_difference(dom: PlanarDomain, axis):
    """First difference using interior nodes only (for the mixed derivative)."""
    n, h = dom.n_unknowns, dom.h
    dp, dm = (0, 1) if axis == 0 else (2, 3)
    rows, cols, vals = [], [], []
    for a in range(n):
        p, m = dom.nbr[a, dp], dom.nbr[a, dm]
        if p >= 0 and m >= 0:
            rows += [a, a]; cols += [p, m]; vals += [0.5 / h, -0.5 / h]
        elif p >= 0:
            pp = dom.nbr[p, dp]
            if pp >= 0:
                rows += [a, a, a]; cols += [a, p, pp]; vals += [-1.5 / h, 2 / h, -0.5 / h]
            else:
                rows += [a, a]; cols += [a, p]; vals += [-1 / h, 1 / h]
        elif m >= 0:
            mm = dom.nbr[m, dm]
            if mm >= 0:
                rows += [a, a, a]; cols += [a, m, mm]; vals += [1.5 / h, -2 / h, 0.5 / h]
            else:
                rows += [a, a]; cols += [a, m]; vals += [1 / h, -1 / h]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def difference_operators(dom: PlanarDomain) -> DifferenceOperators:
    if getattr(dom, "_ops", None) is None:
        Dx, Dz = _axis_operator(dom, 0, 1), _axis_operator(dom, 1, 1)
        Dxx, Dzz = _axis_operator(dom, 0, 2), _axis_operator(dom, 1, 2)
        Ix, Iz = _interior_first_difference(dom, 0), _interior_first_difference(dom, 1)
        Axz = 0.5 * (Ix @ Dz[0] + Iz @ Dx[0])
        Bxz = 0.5 * (Ix @ Dz[1] + Iz @ Dx[1])
        dom._ops = DifferenceOperators(Dx, Dz, Dxx, Dzz, (Axz.tocsr(), Bxz.tocsr()), (Ix, Iz))
    return dom._ops


def laplacian_matrix(dom: PlanarDomain):
    """Shortley-Weller 5-point Laplacian (A, B): Lap g = A g_int + B g_bdry.

    Assembled node by node, separately from difference_operators, so that it
    can serve as a reference for the Jacobian at g = 1.
    """
    n, nb = dom.n_unknowns, len(dom.boundary_points)
    A = sp.lil_matrix((n, n))
    B = sp.lil_matrix((n, nb))
    for a in range(n):
        diag = 0.0
        for dp, dm in ((0, 1), (2, 3)):
            hr, hl = dom.dist[a, dp], dom.dist[a, dm]
            cr = 2.0 / (hr * (hl + hr))
            cl = 2.0 / (hl * (hl + hr))
            for d, c in ((dp, cr), (dm, cl)):
                if dom.nbr[a, d] >= 0:
                    A[a, dom.nbr[a, d]] += c
                else:
                    B[a, dom.bid[a, d]] += c
            diag += -(cl + cr)
        A[a, a] = diag
    return A.tocsr(), B.tocsr()


# ---------------------------------------------------------------------------
# graph functions


@dataclass
class GraphFunction:
    domain: PlanarDomain
    g: np.ndarray  # values at the interior nodes
    data: DirichletData

    def __post_init__(self):
        self.g = np.asarray(self.g, float)
        if self.g.shape != (self.domain.n_unknowns,):
            raise ValueError("g must hold one value per interior node")
        if np.any(self.g <= 0):
            raise DomainError("graph must stay in y > 0")

    @classmethod
    def constant(cls, domain, c):
        return cls(domain, np.full(domain.n_unknowns, float(c)), DirichletData(c - 1.0, [c - 1.0] * len(domain.holes)))

    def boundary_values(self):
        return self.data.boundary_vector(self.domain)

    def to_grid(self):
        out = np.full(self.domain.X.shape, np.nan)
        out[self.domain.mask] = self.g
        return out

    def to_csv(self, path):
        rows = np.column_stack([self.domain.X[self.domain.mask], self.domain.Z[self.domain.mask], self.g])
        np.savetxt(path, rows, delimiter=",", header="x,z,g", comments="", fmt="%.17g")


def _neighbour_values(gf: GraphFunction, gb):
    dom = gf.domain
    inn = dom.nbr >= 0
    vals = np.empty(dom.nbr.shape)
    vals[inn] = gf.g[dom.nbr[inn]]
    vals[~inn] = gb[dom.bid[~inn]]
    return vals


def _derivatives(gf: GraphFunction):
    """(g, gx, gz, gxx, gxz, gzz) at the interior nodes.

    Differences are taken as sums of c_d (g_d - g_0), so constants give
    derivatives that are exactly zero.
    """
    dom = gf.domain
    ops = difference_operators(dom)
    gb = gf.boundary_values()
    if np.any(gb <= 0):
        raise DomainError("boundary values must be positive")
    nv = _neighbour_values(gf, gb) - gf.g[:, None]
    out = []
    for order in (1, 2):
        for dp, dm in ((0, 1), (2, 3)):
            cl, _, cr = _sw_coeffs(dom.dist[:, dm], dom.dist[:, dp], order)
            out.append(cr * nv[:, dp] + cl * nv[:, dm])
    gx, gz, gxx, gzz = out
    Ix, Iz = ops.interior
    gxz = 0.5 * (Ix @ gz + Iz @ gx)
    return gf.g, gx, gz, gxx, gxz, gzz


def mean_curvature_graph(gf: GraphFunction):
    """M(g) at every interior node."""
    return graph_operator(*_derivatives(gf))


def jacobian(gf: GraphFunction):
    """Analytic Jacobian of g -> M(g) on the interior nodes (boundary values fixed)."""
    ops = difference_operators(gf.domain)
    pg, pgx, pgz, pgxx, pgxz, pgzz = graph_operator_partials(*_derivatives(gf))
    D = sp.diags
    J = D(pg) + D(pgx) @ ops.Dx[0] + D(pgz) @ ops.Dz[0] + D(pgxx) @ ops.Dxx[0] + D(pgxz) @ ops.Dxz[0] + D(pgzz) @ ops.Dzz[0]
    return J.tocsr()


def harmonic_extension(domain: PlanarDomain, data: DirichletData):
    """Discrete harmonic function with boundary values psi."""
    A, B = laplacian_matrix(domain)
    psi = data.boundary_vector(domain) - 1.0
    return spsolve(A.tocsc(), -(B @ psi))


@dataclass
class GraphConfig:
    tol: float = 1e-8
    max_iter: int = 20
    smallness: float = 0.1
    seed: str = "harmonic"
    method: str = "newton"
    max_iter_picard: int = 200
    seed_collar: float = 0.2


@dataclass
class GraphSolution:
    graph: GraphFunction
    residuals: list
    newton_steps: int
    quadratic_ratios: list

    def report(self):
        return {
            "newton_steps": self.newton_steps,
            "residuals": [float(r) for r in self.residuals],
            "quadratic_ratios": [float(q) for q in self.quadratic_ratios],
            "g_min": float(self.graph.g.min()),
            "g_max": float(self.graph.g.max()),
            "domain": self.graph.domain.to_json(),
        }

    def to_json(self):
        return json.dumps(self.report(), indent=2, sort_keys=True)


def _damped_step(gf: GraphFunction, delta, merit, lam_min):
    """Backtracking on the l2 residual; returns the accepted GraphFunction or None."""
    lam = 1.0
    while lam >= lam_min:
        trial = gf.g + lam * delta
        if np.all(trial > 0):
            cand = GraphFunction(gf.domain, trial, gf.data)
            if np.linalg.norm(mean_curvature_graph(cand) - 1.0) < (1 - 1e-4 * lam) * merit:
                return cand
        lam *= 0.5
    return None


def collar_seed(domain: PlanarDomain, data: DirichletData, width: float):
    """g = 1 away from the boundary, ramped smoothly to 1 + psi within `width` of it.

    Each node takes psi from its nearest boundary component at the radial
    projection angle.  Raw g = 1 jumps to 1 + psi across the tiny cut-cell
    distances next to the boundary and puts the first Newton step far outside
    the basin; the collar removes that jump.  The ramp is the quintic
    smoothstep so the seed has no kinks for the second differences to see.
    """
    px = domain.x[domain.nodes[:, 0]]
    pz = domain.z[domain.nodes[:, 1]]
    best = np.full(len(px), np.inf)
    val = np.zeros(len(px))
    for k, ((cx, cz), rad, _) in enumerate(domain.circles()):
        rho = np.hypot(px - cx, pz - cz)
        d = np.abs(rho - rad)
        ang = np.arctan2(pz - cz, px - cx)
        closer = d < best
        best[closer] = d[closer]
        val[closer] = data.values(k, ang[closer])
    t = np.clip(1.0 - best / width, 0.0, 1.0)
    return 1.0 + val * t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def _iterate(gf: GraphFunction, cfg: GraphConfig):
    """Damped Newton (or Laplacian-preconditioned Picard); returns (solution, residual history)."""
    history = []
    lap = None
    if cfg.method == "picard":
        lap = splu(laplacian_matrix(gf.domain)[0].tocsc())
    elif cfg.method != "newton":
        raise ValueError(f"unknown method {cfg.method!r}")
    budget = cfg.max_iter if lap is None else cfg.max_iter_picard
    while True:
        F = mean_curvature_graph(gf) - 1.0
        r = float(np.abs(F).max())
        history.append(r)
        logger.debug("%s step %d: residual %.3e", cfg.method, len(history) - 1, r)
        if r < cfg.tol:
            return gf, history
        if len(history) > budget:
            raise NonConvergenceError(f"no convergence to {cfg.tol} within {budget} steps", history)
        if lap is not None:
            delta = -lap.solve(F)
        else:
            if len(history) >= 4 and history[-1] > 0.5 * history[-4]:
                raise NonConvergenceError("Newton iteration stagnates", history)
            delta = spsolve(jacobian(gf).tocsc(), -F)
        cand = _damped_step(gf, delta, float(np.linalg.norm(F)), lam_min=1.0 / 8)
        if cand is None:
            raise NonConvergenceError("damped step does not reduce the residual", history)
        gf = cand


def solve_dirichlet(domain: PlanarDomain, data: DirichletData, config: Optional[GraphConfig] = None) -> GraphSolution:
    """Solve M(g) = 1 with g = 1 + psi on the boundary.

    Seeds: 'harmonic' is 1 + the discrete harmonic extension of psi;
    'constant' is g = 1 with a boundary collar of width seed_collar * r
    (see collar_seed).  Method 'newton' uses the analytic Jacobian with
    backtracking; 'picard' iterates g <- g - L^{-1}(M(g) - 1) with the fixed
    discrete Laplacian L, which is the Jacobian at g = 1.
    """
    cfg = config or GraphConfig()
    size = data.sup_norm(domain)
    if size > cfg.smallness:
        raise PreconditionError(f"|psi| = {size:.3g} exceeds the smallness threshold {cfg.smallness}")
    if cfg.seed == "harmonic":
        g = 1.0 + harmonic_extension(domain, data)
    elif cfg.seed == "constant":
        g = collar_seed(domain, data, cfg.seed_collar * domain.r)
    else:
        raise ValueError(f"unknown seed {cfg.seed!r}")
    gf, history = _iterate(GraphFunction(domain, g, data), cfg)
    # r_{k+1}/r_k^2 for steps that start above sqrt(tol); below that the
    # next residual is at the rounding floor and the ratio means nothing
    quad = [history[k + 1] / history[k] ** 2 for k in range(len(history) - 1)
            if history[k] >= np.sqrt(cfg.tol)]
    return GraphSolution(gf, history, len(history) - 1, quad)


def boundary_derivative(gf: GraphFunction, component: int, n_samples: int = 64, direction: str = "outward",
                        degree: int = 4, window: float = 4.0):
    """Normal derivative of g along one boundary component.

    At each sample point a weighted least-squares polynomial (quartic by
    default) is fitted to the
    interior nodes within 4h and to the exact boundary values nearby; its
    normal slope is returned.  direction 'outward' points out of the domain,
    'inward' into it.  Returns (angles, derivative).
    """
    dom = gf.domain
    (cx, cz), rad, inside = dom.circles()[component]
    angles = 2 * np.pi * np.arange(n_samples) / n_samples
    pts = dom.nodes
    NX, NZ = dom.x[pts[:, 0]], dom.z[pts[:, 1]]
    h = dom.h
    R = window * h
    powers = [(i, k - i) for k in range(degree + 1) for i in range(k, -1, -1)]
    out = np.empty(n_samples)
    for k, a in enumerate(angles):
        bx, bz = cx + rad * np.cos(a), cz + rad * np.sin(a)
        # inward normal of the domain
        nx, nz = (-np.cos(a), -np.sin(a)) if inside else (np.cos(a), np.sin(a))
        tx, tz = -nz, nx
        sel = (NX - bx) ** 2 + (NZ - bz) ** 2 < R**2
        xi = ((NX[sel] - bx) * tx + (NZ[sel] - bz) * tz) / h
        eta = ((NX[sel] - bx) * nx + (NZ[sel] - bz) * nz) / h
        vals = gf.g[sel]
        # boundary samples along the arc
        da = np.linspace(-R, R, 2 * degree + 3) / rad
        ab = a + da
        bxs, bzs = cx + rad * np.cos(ab), cz + rad * np.sin(ab)
        xi_b = ((bxs - bx) * tx + (bzs - bz) * tz) / h
        eta_b = ((bxs - bx) * nx + (bzs - bz) * nz) / h
        vb = 1.0 + gf.data.values(component, ab)
        XI = np.concatenate([xi, xi_b])
        ET = np.concatenate([eta, eta_b])
        V = np.concatenate([vals, vb])
        wts = np.concatenate([np.ones_like(xi), 10.0 * np.ones_like(xi_b)])
        M = np.column_stack([XI**i * ET**j for i, j in powers])
        coef, *_ = np.linalg.lstsq(M * wts[:, None], V * wts, rcond=None)
        d_in = coef[powers.index((0, 1))] / h
        out[k] = d_in if direction == "inward" else -d_in
    return angles, out
