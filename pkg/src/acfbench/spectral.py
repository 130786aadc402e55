"""Mixed Dirichlet-Neumann eigenvalues on arcs of S^1 and regions of S^2.

Arcs have closed forms; S^2 regions are solved by P1 surface FEM on a
geodesic fan mesh with Dirichlet nodes eliminated and Neumann natural.
The smallest generalized eigenvalue is found by inverse power iteration
with conjugate-gradient inner solves, and Richardson extrapolation across
two mesh sizes supplies the reported discretization error.

The characteristic exponent alpha solves alpha^2 + (n-2) alpha = lambda;
beta additionally carries the boundary correction A through
beta^2 + (n-2)(1+A) beta = lambda, with beta = 0 at A = infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg as _cg

from .errors import (
    BadNesting,
    MeshFailure,
    NegativeEigenvalue,
    NoDirichletNodes,
    NoDirichletPart,
    NotConvexDomain,
)
from .sphmesh import SphericalPolygon, SphereMesh, fan_mesh


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArcDomain:
    """Arc of S^1 with endpoint boundary conditions 'DD' or 'DN'."""
    length: float
    bc: str = "DD"


@dataclass(frozen=True)
class SphereDomain:
    """Convex region of S^2; constraints flagged True are Dirichlet."""
    region: SphericalPolygon
    dirichlet: tuple

    @staticmethod
    def build(normals, offsets=None, dirichlet=None):
        region = SphericalPolygon.from_halfspaces(normals, offsets)
        if dirichlet is None:
            dirichlet = tuple(False for _ in range(len(region.offsets)))
        return SphereDomain(region, tuple(bool(d) for d in dirichlet))

    def boundary_polyline(self, h=0.05):
        mesh = fan_mesh(self.region, h)
        ids = [v for v in sorted(mesh.boundary_planes)]
        return mesh.vertices[ids], [mesh.boundary_planes[v] for v in ids]


@dataclass
class MixedEigenResult:
    eigenvalue: float
    exponent: float
    dimension: int
    mesh_size: float = 0.0        # 0 marks a closed form
    eigenvector: np.ndarray | None = None
    bc_map: dict = field(default_factory=dict)
    iterations: int = 0
    residual: float = 0.0

    def check_invariants(self):
        lam, n = self.eigenvalue, self.dimension
        alpha = self.exponent
        assert abs(alpha * alpha + (n - 2) * alpha - lam) <= 1e-9 * max(1.0, lam)
        assert alpha >= 0


# ---------------------------------------------------------------------------
# closed forms and exponents
# ---------------------------------------------------------------------------

def arc_eigen(length, bc="DD") -> MixedEigenResult:
    """First eigenvalue of an arc: DD -> (pi/L)^2, DN -> (pi/2L)^2."""
    if not (0 < length <= 2 * math.pi):
        raise ValueError(f"arc length {length} outside (0, 2 pi]")
    bc = bc.upper()
    if bc not in ("DD", "DN", "ND"):
        raise NoDirichletPart("arc needs at least one Dirichlet endpoint; "
                              "use beta_exponent(lambda, inf, n) for the pure-Neumann convention")
    if bc == "DD":
        lam = (math.pi / length) ** 2
    else:
        lam = (math.pi / (2.0 * length)) ** 2
    return MixedEigenResult(eigenvalue=lam, exponent=math.sqrt(lam), dimension=2,
                            bc_map={"bc": bc, "length": length})


def char_exponent(lam, n):
    """Nonnegative root of alpha^2 + (n-2) alpha - lambda = 0."""
    if lam < 0:
        raise NegativeEigenvalue(f"lambda = {lam} < 0")
    half = 0.5 * (n - 2)
    return -half + math.sqrt(half * half + lam)


def beta_exponent(lam, A, n):
    """Positive root of beta^2 + (n-2)(1+A) beta - lambda = 0; beta=0 at A=inf."""
    if lam < 0:
        raise NegativeEigenvalue(f"lambda = {lam} < 0")
    if A == math.inf:
        return 0.0
    half = 0.5 * (n - 2) * (1.0 + A)
    return -half + math.sqrt(half * half + lam)


# ---------------------------------------------------------------------------
# FEM eigen-solve on S^2
# ---------------------------------------------------------------------------

def _make_preconditioner(K):
    """Multigrid preconditioner when pyamg is available, else Jacobi."""
    try:
        import pyamg
        ml = pyamg.smoothed_aggregation_solver(K.tocsr(), max_coarse=200)
        return ml.aspreconditioner(cycle="V")
    except Exception:
        diag = K.diagonal()
        return sparse.diags(1.0 / np.maximum(diag, 1e-300))


def _inverse_power(K, M, tol=1e-10, max_iter=400):
    """Smallest eigenpair of K v = lam M v by inverse iteration + CG solves."""
    n = K.shape[0]
    precond = _make_preconditioner(K)
    x = np.ones(n) / math.sqrt(n)
    lam = float(x @ (K @ x)) / float(x @ (M @ x))
    for it in range(1, max_iter + 1):
        rhs = M @ x
        y, info = _cg(K, rhs, x0=x / max(lam, 1e-12), rtol=tol, atol=0.0,
                      maxiter=20000, M=precond)
        if info != 0:
            raise MeshFailure(f"inner CG failed to converge (info={info})")
        nrm = math.sqrt(float(y @ (M @ y)))
        x_new = y / nrm
        lam_new = float(x_new @ (K @ x_new))
        if abs(lam_new - lam) <= 1e-12 * max(1.0, abs(lam_new)) and it >= 3:
            lam = lam_new
            x = x_new
            break
        lam, x = lam_new, x_new
    res = np.linalg.norm(K @ x - lam * (M @ x)) / max(np.linalg.norm(K @ x), 1e-300)
    return lam, x, it, res


def fem_mixed_eigen(domain: SphereDomain, h, tol=1e-10) -> MixedEigenResult:
    """Smallest mixed eigenvalue on a convex S^2 region at mesh size h.

    Dirichlet conditions are imposed by node elimination on vertices lying on
    the flagged constraint circles; the rest of the boundary is natural.
    """
    if not domain.region.is_geodesically_convex():
        raise NotConvexDomain("input region is not geodesically convex")
    dirichlet_ids = [i for i, d in enumerate(domain.dirichlet) if d]
    if not dirichlet_ids:
        raise NoDirichletPart("no Dirichlet constraint flagged; the mixed eigenvalue "
                              "is undefined (A = inf convention: beta = 0)")
    mesh = fan_mesh(domain.region, h)
    K, M = mesh.assemble()
    mask = mesh.dirichlet_mask(dirichlet_ids)
    if not mask.any():
        raise NoDirichletNodes("Dirichlet circles carry no mesh vertices")
    free = ~mask
    Kf = K[free][:, free].tocsr()
    Mf = M[free][:, free].tocsr()
    lam, xf, iters, res = _inverse_power(Kf, Mf, tol=tol)
    vec = np.zeros(mesh.n_vertices)
    vec[free] = xf
    if vec.sum() < 0:
        vec = -vec
    return MixedEigenResult(
        eigenvalue=lam, exponent=char_exponent(lam, 3), dimension=3,
        mesh_size=h, eigenvector=vec,
        bc_map={"dirichlet_planes": dirichlet_ids,
                "n_vertices": mesh.n_vertices,
                "n_dirichlet": int(mask.sum())},
        iterations=iters, residual=res)


def richardson_eigen(domain: SphereDomain, h, tol=1e-10):
    """Eigenvalue at h and h/2 with Richardson extrapolation (O(h^2) FEM).

    Returns (lambda_extrapolated, eps_mesh, results) where eps_mesh is the
    extrapolation increment |lambda_{h/2} - lambda_h| / 3, the standard error
    proxy for a second-order method.
    """
    r1 = fem_mixed_eigen(domain, h, tol=tol)
    r2 = fem_mixed_eigen(domain, h / 2.0, tol=tol)
    lam = r2.eigenvalue + (r2.eigenvalue - r1.eigenvalue) / 3.0
    eps = abs(r2.eigenvalue - r1.eigenvalue) / 3.0
    return lam, eps, (r1, r2)


# ---------------------------------------------------------------------------
# Friedland-Hayman sum check
# ---------------------------------------------------------------------------

@dataclass
class FhCheck:
    alpha_plus: float
    alpha_minus: float
    eps_mesh: float
    lambda_plus: float
    lambda_minus: float
    area_plus: float
    area_minus: float

    @property
    def alpha_sum(self):
        return self.alpha_plus + self.alpha_minus

    @property
    def passed(self):
        return self.alpha_sum >= 2.0 - self.eps_mesh


def partition_domains(region: SphericalPolygon, split_normal):
    """W+ and W- obtained by cutting with the geodesic {x . m = 0}."""
    m = np.asarray(split_normal, float)
    m = m / np.linalg.norm(m)
    k = len(region.offsets)
    plus = SphereDomain(region.refined(m, 0.0),
                        tuple([False] * k + [True]))
    minus = SphereDomain(region.refined(-m, 0.0),
                         tuple([False] * k + [True]))
    return plus, minus


def fh_sum_check(region: SphericalPolygon, split_normal, h=0.08, tol=1e-10) -> FhCheck:
    """alpha(W+) + alpha(W-) for a convex W split by a geodesic.

    Equality (sum = 2) occurs for regions whose boundary contains antipodal
    points split through them, e.g. the hemisphere/meridian pair.
    """
    if not region.is_geodesically_convex():
        raise NotConvexDomain("W must be geodesically convex")
    plus, minus = partition_domains(region, split_normal)
    lam_p, eps_p, _ = richardson_eigen(plus, h, tol=tol)
    lam_m, eps_m, _ = richardson_eigen(minus, h, tol=tol)
    a_p = char_exponent(max(lam_p, 0.0), 3)
    a_m = char_exponent(max(lam_m, 0.0), 3)
    # first-order sensitivity of alpha to lambda at the extrapolated values
    eps = (eps_p / (2 * a_p + 1.0) if a_p > 0 else eps_p) \
        + (eps_m / (2 * a_m + 1.0) if a_m > 0 else eps_m)
    return FhCheck(alpha_plus=a_p, alpha_minus=a_m, eps_mesh=eps,
                   lambda_plus=lam_p, lambda_minus=lam_m,
                   area_plus=plus.region.area(), area_minus=minus.region.area())


def random_convex_region(rng, pole=(0.0, 0.0, 1.0), n_halfspaces=None,
                         margin=0.25):
    """Random intersection of 3-8 hemispheres containing a fixed pole."""
    pole = np.asarray(pole, float)
    if n_halfspaces is None:
        n_halfspaces = int(rng.integers(3, 9))
    normals = []
    while len(normals) < n_halfspaces:
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        if v @ pole >= margin:
            normals.append(v)
    return SphericalPolygon.from_halfspaces(normals)


def random_partition_normal(rng, region: SphericalPolygon, max_tries=100):
    """Geodesic through two random boundary points that splits the region."""
    c = region.interior_center()
    from .sphmesh import _frame
    u, v = _frame(c)
    for _ in range(max_tries):
        phis = rng.uniform(0, 2 * math.pi, size=2)
        R, _ = region.boundary_radius(c, u, v, phis)
        pts = [math.cos(R[i]) * c + math.sin(R[i]) *
               (math.cos(phis[i]) * u + math.sin(phis[i]) * v) for i in range(2)]
        m = np.cross(pts[0], pts[1])
        nm = np.linalg.norm(m)
        if nm < 1e-8:
            continue
        m /= nm
        # both sides must keep an interior (the center strictly off the plane
        # by less than the region's inradius is fine either way; just test
        # that some boundary mass lies on each side)
        side = np.sign(m @ c)
        if side == 0:
            side = 1.0
        try:
            plus = region.refined(m, 0.0)
            minus = region.refined(-m, 0.0)
            plus.interior_center()
            minus.interior_center()
            return m
        except Exception:
            continue
    raise MeshFailure("could not find a splitting geodesic")


# ---------------------------------------------------------------------------
# domain perturbation (eigenvalue monotonicity under volume removal)
# ---------------------------------------------------------------------------

def eigen_domain_perturbation_arc(L, eps, bc="DN"):
    """Closed-form ratio mu(W)/mu(V) for arcs [0, L-eps] inside [0, L]."""
    if eps < 0 or eps >= L:
        raise BadNesting("need 0 <= eps < L")
    rV = arc_eigen(L, bc)
    rW = arc_eigen(L - eps, bc)
    ratio = rW.eigenvalue / rV.eigenvalue
    vol = eps
    c_emp = (ratio - 1.0) / vol if vol > 0 else 0.0
    return ratio, c_emp


def eigen_domain_perturbation_caps(cap_v, cap_w, h=0.05):
    """FEM ratio mu(W)/mu(V) for nested Dirichlet caps {x3 >= a}.

    cap_w >= cap_v >= 0 are the plane offsets; W = {x3 >= cap_w} sits inside
    V = {x3 >= cap_v}.
    """
    if cap_w < cap_v:
        raise BadNesting("W must be contained in V (cap_w >= cap_v)")
    dv = SphereDomain.build([[0.0, 0.0, 1.0]], [cap_v], [True])
    dw = SphereDomain.build([[0.0, 0.0, 1.0]], [cap_w], [True])
    lam_v, _, _ = richardson_eigen(dv, h)
    lam_w, _, _ = richardson_eigen(dw, h)
    vol = dv.region.area() - dw.region.area()
    ratio = lam_w / lam_v
    c_emp = (ratio - 1.0) / vol if vol > 0 else 0.0
    return ratio, c_emp, vol


# ---------------------------------------------------------------------------
# 1-D oracle: Dirichlet eigenvalue of a polar cap by Legendre shooting
# ---------------------------------------------------------------------------

def cap_dirichlet_eigenvalue_oracle(psi_max, lam_hint=None):
    """First Dirichlet eigenvalue of the cap {polar angle <= psi_max} on S^2.

    Radial ODE u'' + cot(psi) u' + lam u = 0, regular at 0, u(psi_max) = 0;
    solved by shooting with a bracketing search in lambda.  Independent of
    the FEM path (used as its test oracle).
    """
    from scipy.integrate import solve_ivp
    from scipy.optimize import brentq

    def end_value(lam):
        eps = 1e-6

        def rhs(t, y):
            return [y[1], -lam * y[0] - y[1] / math.tan(t)]

        # series start: u = 1 - lam t^2 / 4
        y0 = [1.0 - lam * eps * eps / 4.0, -lam * eps / 2.0]
        sol = solve_ivp(rhs, (eps, psi_max), y0, rtol=1e-11, atol=1e-13)
        return sol.y[0, -1]

    lo = 1e-3
    hi = lam_hint if lam_hint else max(8.0, 2.0 * (math.pi / psi_max) ** 2)
    # expand until a sign change brackets the first eigenvalue
    flo = end_value(lo)
    lam = None
    grid = np.linspace(lo, hi, 80)
    prev_l, prev_f = lo, flo
    for g in grid[1:]:
        fg = end_value(g)
        if prev_f * fg < 0:
            lam = brentq(lambda x: end_value(x), prev_l, g, xtol=1e-10)
            break
        prev_l, prev_f = g, fg
    if lam is None:
        raise RuntimeError("shooting bracket failed")
    return lam
