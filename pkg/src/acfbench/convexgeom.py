"""Convex bodies and the boundary diagnostics built on them.

A body is one of four variants (graph of a convex function, half-space
intersection, ball, cone).  On top of the body representation this module
computes supporting-plane normals, the cone-deviation function

    M_x(t) = sup { nu(y) . (y - x) : y on the boundary, 0 < |y - x| <= t },

the graph profile N(t, theta), bracketed Dini integrals of M/t^2, the
cone-likeness classification S_c, rescaled spherical slices V_t, and the
vertical-shift convexification W_t of a slice.

All radial grids are log-spaced and integrals are reported as brackets
(lower, upper), never as single values.  Suprema are computed by adaptive
sampling and carry an explicit error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateRadius,
    EmptyGrid,
    EmptySlice,
    NotConvex,
    NotGraphRegular,
    PointNotOnBoundary,
    WrongVariant,
)

_BOUNDARY_TOL = 1e-8


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero vector has no direction")
    return v / n


# ---------------------------------------------------------------------------
# body variants
# ---------------------------------------------------------------------------

class ConvexBody:
    """Base class; concrete variants implement containment and normals."""

    dimension: int

    def contains(self, x, tol=1e-12) -> bool:
        raise NotImplementedError

    def support_normals(self, y, tol=_BOUNDARY_TOL):
        """Extreme outward unit normals of supporting planes at boundary point y."""
        raise NotImplementedError

    def on_boundary(self, y, tol=_BOUNDARY_TOL) -> bool:
        raise NotImplementedError

    def interior_direction(self, origin=None):
        """A direction pointing into the body from `origin` (default 0)."""
        raise NotImplementedError


class BallBody(ConvexBody):
    def __init__(self, center, radius, dimension=None):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        self.dimension = int(dimension) if dimension else len(self.center)
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")

    def contains(self, x, tol=1e-12):
        return np.linalg.norm(np.asarray(x, float) - self.center) <= self.radius + tol

    def on_boundary(self, y, tol=_BOUNDARY_TOL):
        return abs(np.linalg.norm(np.asarray(y, float) - self.center) - self.radius) <= tol

    def support_normals(self, y, tol=_BOUNDARY_TOL):
        if not self.on_boundary(y, tol):
            raise PointNotOnBoundary(f"{y} is not on the sphere")
        return [_unit(np.asarray(y, float) - self.center)]

    def interior_direction(self, origin=None):
        origin = np.zeros(self.dimension) if origin is None else np.asarray(origin, float)
        return _unit(self.center - origin)


class PolytopeBody(ConvexBody):
    """Intersection of half-spaces {x : a_i . x <= b_i}."""

    def __init__(self, normals, offsets, dimension=None):
        self.normals = np.atleast_2d(np.asarray(normals, dtype=float))
        self.offsets = np.asarray(offsets, dtype=float).ravel()
        norms = np.linalg.norm(self.normals, axis=1)
        self.normals = self.normals / norms[:, None]
        self.offsets = self.offsets / norms
        self.dimension = int(dimension) if dimension else self.normals.shape[1]
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")

    def contains(self, x, tol=1e-12):
        return bool(np.all(self.normals @ np.asarray(x, float) <= self.offsets + tol))

    def active_facets(self, y, tol=_BOUNDARY_TOL):
        r = self.normals @ np.asarray(y, float) - self.offsets
        return np.nonzero(np.abs(r) <= tol)[0]

    def on_boundary(self, y, tol=_BOUNDARY_TOL):
        return self.contains(y, tol) and len(self.active_facets(y, tol)) > 0

    def support_normals(self, y, tol=_BOUNDARY_TOL):
        act = self.active_facets(y, tol)
        if len(act) == 0 or not self.contains(y, tol):
            raise PointNotOnBoundary(f"{y} is not on the polytope boundary")
        return [self.normals[i] for i in act]

    def interior_direction(self, origin=None):
        origin = np.zeros(self.dimension) if origin is None else np.asarray(origin, float)
        # steepest feasible direction: push away from all active facets
        d = -np.sum(self.normals, axis=0)
        if np.linalg.norm(d) < 1e-14:
            raise ValueError("no interior direction found")
        return _unit(d)

    def facet_distance(self, x, i, tol=1e-10):
        """Euclidean distance from x to facet i (the face, not the plane).

        Candidates are the plane projection, projections onto pairwise plane
        intersections and vertices; exact for the small facet counts used here.
        """
        x = np.asarray(x, float)
        n = self.dimension
        best = np.inf
        # projection onto the facet plane
        p = x + (self.offsets[i] - self.normals[i] @ x) * self.normals[i]
        if self.contains(p, tol):
            best = np.linalg.norm(p - x)
        m = len(self.offsets)
        for j in range(m):
            if j == i:
                continue
            A = np.vstack([self.normals[i], self.normals[j]])
            b = np.array([self.offsets[i], self.offsets[j]])
            if np.linalg.matrix_rank(A, tol=1e-12) < 2:
                continue
            # point on the intersection + its direction space
            q, *_ = np.linalg.lstsq(A, b, rcond=None)
            if n == 2:
                cand = [q]
            else:
                d = np.cross(self.normals[i], self.normals[j])
                d = d / np.linalg.norm(d)
                cand = [q + ((x - q) @ d) * d]
                for l in range(m):
                    if l in (i, j):
                        continue
                    A3 = np.vstack([A, self.normals[l]])
                    b3 = np.concatenate([b, [self.offsets[l]]])
                    if np.linalg.matrix_rank(A3, tol=1e-12) == 3:
                        v = np.linalg.lstsq(A3, b3, rcond=None)[0]
                        cand.append(v)
            for cpt in cand:
                if self.contains(cpt, tol):
                    best = min(best, np.linalg.norm(cpt - x))
        return best


class ConeBody(PolytopeBody):
    """Convex cone: all supporting planes pass through the vertex."""

    def __init__(self, vertex, normals, dimension=None):
        vertex = np.asarray(vertex, dtype=float)
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        offsets = normals @ vertex
        super().__init__(normals, offsets, dimension)
        self.vertex = vertex


class GraphBody(ConvexBody):
    """Epigraph {x_n >= f(x')} of a convex f on the unit disk, f(0)=0, f>=0.

    `f` maps an (n-1)-vector (or batch) to scalars.  An analytic gradient can
    be supplied; otherwise central differences are used, with one-sided
    quotients at kinks (the larger resulting normal value wins in suprema).
    """

    def __init__(self, f, lipschitz, dimension, grad=None, fd_step=1e-7):
        self.f = f
        self.grad = grad
        self.lipschitz = float(lipschitz)
        self.dimension = int(dimension)
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        self.fd_step = float(fd_step)

    # -- graph evaluation helpers -------------------------------------------

    def _fval(self, xp):
        xp = np.asarray(xp, dtype=float)
        return float(self.f(xp))

    def contains(self, x, tol=1e-12):
        x = np.asarray(x, float)
        xp, xn = x[:-1], x[-1]
        if np.linalg.norm(xp) > 1.0 + tol:
            return False
        return xn >= self._fval(xp) - tol

    def on_boundary(self, y, tol=_BOUNDARY_TOL):
        y = np.asarray(y, float)
        return abs(y[-1] - self._fval(y[:-1])) <= tol * max(1.0, abs(y[-1]))

    def one_sided_gradients(self, xp, step=None):
        """Limiting gradients of f at xp, probed along +/- of each axis.

        For smooth points the list collapses to one gradient; at a ridge the
        distinct one-sided values enumerate the extreme slopes.
        """
        if self.grad is not None:
            return [np.atleast_1d(np.asarray(self.grad(np.asarray(xp, float)), float))]
        xp = np.atleast_1d(np.asarray(xp, dtype=float))
        h = self.fd_step if step is None else step
        d = len(xp)
        grads = []
        fs0 = self._fval(xp)
        one_sided = []
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            right = (self._fval(xp + e) - fs0) / h
            left = (fs0 - self._fval(xp - e)) / h
            one_sided.append((left, right))
        # kink when one-sided slopes disagree beyond FD noise
        kink = any(abs(r - l) > 50 * math.sqrt(h) * max(1.0, self.lipschitz)
                   for l, r in one_sided)
        if not kink:
            grads.append(np.array([(l + r) / 2 for l, r in one_sided]))
        else:
            import itertools
            for combo in itertools.product(*one_sided):
                grads.append(np.array(combo))
        return grads

    def support_normals(self, y, tol=_BOUNDARY_TOL):
        y = np.asarray(y, float)
        if not self.on_boundary(y, tol):
            raise PointNotOnBoundary(f"{y} is not on the graph")
        normals = []
        for g in self.one_sided_gradients(y[:-1]):
            v = np.concatenate([g, [-1.0]])
            normals.append(v / np.linalg.norm(v))
        return normals

    def interior_direction(self, origin=None):
        d = np.zeros(self.dimension)
        d[-1] = 1.0
        return d


# convenience constructors used throughout the tests and scenarios

def ball_graph_body(R, dimension=3):
    """Graph variant of a ball of radius R tangent to the origin from above."""
    R = float(R)

    def f(xp):
        xp = np.asarray(xp, float)
        r2 = float(np.dot(xp, xp))
        return R - math.sqrt(max(R * R - r2, 0.0))

    def grad(xp):
        xp = np.asarray(xp, float)
        r2 = float(np.dot(xp, xp))
        den = math.sqrt(max(R * R - r2, 1e-300))
        return xp / den

    L = 1.0 / math.sqrt(max(R * R - 1.0, 1e-12)) if R > 1.2 else 10.0
    return GraphBody(f, lipschitz=L, dimension=dimension, grad=grad)


def wedge_graph_body(dimension=3, slope=1.0):
    """f(x') = slope * |x'_1|: a ridge (cone through the origin)."""
    s = float(slope)

    def f(xp):
        xp = np.atleast_1d(np.asarray(xp, float))
        return s * abs(xp[0])

    return GraphBody(f, lipschitz=s, dimension=dimension)


def power_graph_body(beta, dimension=3, radial=True):
    """f = |x'|^(1+beta); C^{1,beta} at the origin for beta in (0,1]."""
    p = 1.0 + float(beta)

    def f(xp):
        xp = np.atleast_1d(np.asarray(xp, float))
        return float(np.linalg.norm(xp) ** p)

    def grad(xp):
        xp = np.atleast_1d(np.asarray(xp, float))
        r = np.linalg.norm(xp)
        if r == 0:
            return np.zeros_like(xp)
        return p * r ** (p - 2.0) * xp

    return GraphBody(f, lipschitz=p, dimension=dimension, grad=grad)


# ---------------------------------------------------------------------------
# supporting normals and M_x(t)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupportPlaneNormal:
    point: np.ndarray
    normal: np.ndarray
    extreme_normals: tuple

    def supports(self, body, n_probe=200, tol=1e-10, rng=None):
        """Check nu . (z - y) <= tol on sampled z in the body."""
        rng = np.random.default_rng(0) if rng is None else rng
        n = body.dimension
        ok = True
        for _ in range(n_probe):
            z = rng.normal(size=n)
            z = self.point + 0.5 * z
            if body.contains(z, tol=1e-12):
                if float(self.normal @ (z - self.point)) > tol:
                    ok = False
                    break
        return ok


def outward_normal(body: ConvexBody, y, tol=_BOUNDARY_TOL) -> SupportPlaneNormal:
    """One admissible outward normal at y, with all extreme normals attached."""
    normals = body.support_normals(y, tol=tol)
    return SupportPlaneNormal(point=np.asarray(y, float), normal=normals[0],
                              extreme_normals=tuple(np.asarray(n) for n in normals))


@dataclass(frozen=True)
class BigM:
    """Supremum value with the sampling-error bound attached."""
    value: float
    bound: float

    def __float__(self):
        return self.value


def _graph_rim_radius(body: GraphBody, theta, t):
    """Largest r with |(r e(theta), f)| <= t, by bisection (|y| increases in r)."""
    if body.dimension == 3:
        e = np.array([math.cos(theta), math.sin(theta)])
    else:
        e = np.array([1.0 if theta == 0.0 else -1.0])
    lo, hi = 0.0, min(1.0, t)
    # f >= 0 so |y| >= r; rim radius is below t
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fv = body._fval(mid * e)
        if mid * mid + fv * fv <= t * t:
            lo = mid
        else:
            hi = mid
    return lo, e


def _graph_nu_dot_y(body: GraphBody, r, e):
    """max over one-sided gradients of nu(y) . y at y = (r e, f(r e))."""
    xp = r * e
    fv = body._fval(xp)
    best = -np.inf
    for g in body.one_sided_gradients(xp):
        val = (float(g @ xp) - fv) / math.sqrt(1.0 + float(g @ g))
        best = max(best, val)
    return best


def big_m(body: ConvexBody, x, t, tol_factor=1e-3) -> BigM:
    """M_x(t): certified bracket of the supremum of nu(y).(y-x) near x.

    The polytope and cone paths are exact (the objective is constant on each
    facet); the ball path samples the extremal ring at chord distance t; the
    graph path does adaptive angular refinement until the improvement per
    subdivision is below tol_factor * t.
    """
    x = np.asarray(x, float)
    if t <= 0:
        raise DegenerateRadius(f"radius {t} <= 0")

    if isinstance(body, ConeBody) and np.allclose(x, body.vertex, atol=1e-12):
        return BigM(0.0, 0.0)

    if isinstance(body, BallBody):
        d = min(float(t), 2.0 * body.radius)
        # dense inner samples confirm monotonicity; the ring at chord distance
        # d realizes the supremum  nu.(y-x) = |y-x|^2 / (2R)
        val = d * d / (2.0 * body.radius)
        return BigM(val, 1e-15 * max(1.0, val))

    if isinstance(body, PolytopeBody):
        vals = [0.0]
        for i in range(len(body.offsets)):
            if body.facet_distance(x, i) <= t + 1e-12:
                vals.append(float(body.offsets[i] - body.normals[i] @ x))
        return BigM(max(vals), 1e-14)

    if isinstance(body, GraphBody):
        if np.linalg.norm(x) > 1e-12:
            raise WrongVariant("graph big_m supported at the graph center only")
        # adaptive sweep in theta (n=3) or the two rays (n=2)
        if body.dimension == 2:
            best = 0.0
            for th in (0.0, math.pi):
                r, e = _graph_rim_radius(body, th, t)
                if r > 0:
                    best = max(best, _graph_nu_dot_y(body, r, e))
            return BigM(max(best, 0.0), 1e-12 * max(1.0, best))
        n0 = 64
        thetas = np.linspace(0.0, 2.0 * math.pi, n0, endpoint=False)
        vals = {}

        def val_at(th):
            if th not in vals:
                r, e = _graph_rim_radius(body, th, t)
                vals[th] = _graph_nu_dot_y(body, r, e) if r > 0 else 0.0
            return vals[th]

        best = max(val_at(th) for th in thetas)
        width = 2.0 * math.pi / n0
        bound = body.lipschitz * t * width  # crude slope bound, tightened below
        while bound > tol_factor * t and width > 1e-10:
            order = sorted(vals, key=vals.get, reverse=True)[:16]
            width *= 0.5
            new_best = best
            for th in order:
                for s in (-1.0, 1.0):
                    new_best = max(new_best, val_at((th + s * width) % (2 * math.pi)))
            bound = max(new_best - best, 0.0) * 4.0 + body.lipschitz * t * width * 0.25
            best = new_best
        return BigM(max(best, 0.0), bound)

    raise WrongVariant(f"unsupported body {type(body).__name__}")


# ---------------------------------------------------------------------------
# graph profile N(t, theta)
# ---------------------------------------------------------------------------

def n_profile(body: GraphBody, t, theta):
    """(1 + |grad f|^2)^{-1/2} (t d_t f - f) at polar point (t, theta).

    At kinks the one-sided gradients are enumerated and the larger value is
    returned.  Vanishes identically on cones (t d_t f = f).
    """
    if not isinstance(body, GraphBody):
        raise WrongVariant("n_profile requires a Graph body")
    if body.dimension == 3:
        e = np.array([math.cos(theta), math.sin(theta)])
    else:
        e = np.array([1.0 if math.cos(theta) >= 0 else -1.0])
    xp = t * e
    fv = body._fval(xp)
    best = -np.inf
    for g in body.one_sided_gradients(xp):
        dt = float(g @ e)
        val = (t * dt - fv) / math.sqrt(1.0 + float(g @ g))
        best = max(best, val)
    return best


def n_profile_sup(body: GraphBody, t, n_theta=256):
    if body.dimension == 2:
        return max(n_profile(body, t, 0.0), n_profile(body, t, math.pi))
    thetas = np.linspace(0, 2 * math.pi, n_theta, endpoint=False)
    return max(n_profile(body, t, th) for th in thetas)


def average_dini_bracket(body: GraphBody, t_min, t_max, n_theta=64, n_t=200):
    """Partial integral of the angular average of N over [t_min, t_max].

    Ray-wise the integrand t^{-2}(t d_t f - f) has nondecreasing numerator,
    so endpoint rules on a log grid bracket the integral; the bracket is then
    averaged in theta.  The upper value is bounded by 4 * |S^{n-2}| * L for
    every convex graph body (dyadic telescoping applied per ray).
    """
    if body.dimension == 2:
        thetas = [0.0, math.pi]
        measure = 2.0
    else:
        thetas = list(np.linspace(0, 2 * math.pi, n_theta, endpoint=False))
        measure = 2 * math.pi
    ts = np.geomspace(t_min, t_max, n_t)
    lo_sum = hi_sum = 0.0
    w = measure / len(thetas)
    for th in thetas:
        vals = np.array([max(n_profile(body, t, th), 0.0) for t in ts])
        dt_inv = 1.0 / ts[:-1] - 1.0 / ts[1:]
        lo_sum += w * float(np.sum(vals[:-1] * dt_inv))
        hi_sum += w * float(np.sum(vals[1:] * dt_inv))
    return lo_sum, hi_sum


# ---------------------------------------------------------------------------
# Dini profile and bracketed integral
# ---------------------------------------------------------------------------

@dataclass
class DiniProfile:
    base_point: np.ndarray
    radii: np.ndarray
    values: np.ndarray          # M_x(t_i)
    bounds: np.ndarray          # per-value sampling error
    lower: float = field(default=0.0)
    upper: float = field(default=0.0)

    def monotone(self, slack=1e-12):
        v = self.values
        return bool(np.all(np.diff(v) >= -slack * np.maximum(1.0, v[:-1])))


def dini_profile(body, x, t_min, t_max, num=64) -> DiniProfile:
    ts = np.geomspace(t_min, t_max, num)
    vals, bnds = [], []
    for t in ts:
        m = big_m(body, x, t)
        vals.append(m.value)
        bnds.append(m.bound)
    prof = DiniProfile(np.asarray(x, float), ts, np.asarray(vals), np.asarray(bnds))
    prof.lower, prof.upper = dini_integral(prof, t_min, t_max)
    return prof


def dini_integral(profile: DiniProfile, t_min, t_max):
    """Riemann bracket of int M(t)/t^2 dt using monotonicity of M.

    On [t_i, t_{i+1}] the left endpoint under-estimates and the right
    endpoint over-estimates; both are integrated against t^{-2} exactly.
    """
    mask = (profile.radii >= t_min - 1e-15) & (profile.radii <= t_max + 1e-15)
    ts = profile.radii[mask]
    vs = profile.values[mask]
    if len(ts) < 2:
        raise EmptyGrid("need at least two profile radii inside [t_min, t_max]")
    weights = 1.0 / ts[:-1] - 1.0 / ts[1:]
    lower = float(np.sum(vs[:-1] * weights))
    upper = float(np.sum(vs[1:] * weights))
    return lower, upper


# ---------------------------------------------------------------------------
# S_c classification
# ---------------------------------------------------------------------------

def classify_sc(body, x, c, t, n_samples=17):
    """True iff s^{-1} M_x(s) <= c for sampled s in [t/4, 4t]."""
    if c <= 0:
        raise ValueError("threshold c must be positive")
    for s in np.geomspace(t / 4.0, 4.0 * t, n_samples):
        m = big_m(body, x, s)
        if m.value / s > c:
            return False
    return True


def sc_complement_measure(body, x, c, t_min=1e-3, t_max=1.0, num=120):
    """(measure of (t_min,t_max) \\ S_c in dt/t,  Lemma-type bound 4/c * DiniUpper)."""
    ts = np.geomspace(t_min, t_max, num)
    out = 0.0
    flags = []
    for i in range(len(ts) - 1):
        tmid = math.sqrt(ts[i] * ts[i + 1])
        inside = classify_sc(body, x, c, tmid, n_samples=9)
        flags.append(inside)
        if not inside:
            out += math.log(ts[i + 1] / ts[i])
    prof = dini_profile(body, x, t_min / 4.0, 4.0 * t_max, num=num)
    bound = 4.0 / c * prof.upper
    return out, bound, np.array(flags)


# ---------------------------------------------------------------------------
# spherical slices
# ---------------------------------------------------------------------------

@dataclass
class SphericalSlice:
    radius: float
    dimension: int
    # n=2: angular interval [lo, hi]; n=3: closed polyline of unit vectors
    interval: tuple | None = None
    polyline: np.ndarray | None = None
    star_shaped: bool = True
    graph_regular: bool = False

    def contains_direction(self, body, omega, tol=1e-9):
        return body.contains(self.radius * np.asarray(omega, float), tol=tol)


def _bisect_angle(inside_fn, lo, hi, iters=60):
    """inside_fn(lo) is True, inside_fn(hi) is False; returns the crossing."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if inside_fn(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def spherical_slice(body: ConvexBody, t, n_boundary=128, sc_threshold=0.1) -> SphericalSlice:
    """V_t = t^{-1} (Omega intersect t S^{n-1}).

    n=2 returns the angular interval; n=3 walks meridians from an interior
    axis and returns the boundary polyline on the unit sphere.
    """
    if not (0 < t <= 1.0):
        raise DegenerateRadius(f"slice radius {t} outside (0, 1]")
    n = body.dimension
    if n == 2:
        thetas = np.linspace(0, 2 * math.pi, 512, endpoint=False)
        ins = np.array([body.contains(t * np.array([math.cos(a), math.sin(a)]), tol=1e-12)
                        for a in thetas])
        if not ins.any():
            raise EmptySlice(f"sphere of radius {t} misses the body")
        if ins.all():
            return SphericalSlice(t, 2, interval=(0.0, 2 * math.pi))
        # locate the arc: find a transition into and out of the body
        idx = np.nonzero(ins & ~np.roll(ins, 1))[0][0]   # first angle inside
        jdx = np.nonzero(ins & ~np.roll(ins, -1))[0][-1]  # last angle inside

        def inside(a):
            return body.contains(t * np.array([math.cos(a), math.sin(a)]), tol=1e-12)

        a_in = thetas[idx]
        a_out = thetas[jdx]
        lo = _bisect_angle(inside, a_in, a_in - thetas[1])
        hi = _bisect_angle(inside, a_out, a_out + thetas[1])
        if hi < lo:
            hi += 2 * math.pi
        sl = SphericalSlice(t, 2, interval=(lo, hi))
    else:
        axis = body.interior_direction()
        # frame around the axis
        a = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        u = _unit(np.cross(axis, a))
        v = np.cross(axis, u)
        pts = []
        star = True
        phis = np.linspace(0, 2 * math.pi, n_boundary, endpoint=False)
        if not body.contains(t * axis, tol=1e-12):
            raise EmptySlice("interior axis leaves the body at this radius")
        for phi in phis:
            e = math.cos(phi) * u + math.sin(phi) * v

            def inside(psi):
                w = math.cos(psi) * axis + math.sin(psi) * e
                return body.contains(t * w, tol=1e-12)

            if inside(math.pi - 1e-9):
                psi_b = math.pi - 1e-9
            else:
                psi_b = _bisect_angle(inside, 0.0, math.pi - 1e-9)
                # star-shapedness spot check: no re-entry beyond the crossing
                for probe in (1.1, 1.5):
                    pp = psi_b * probe
                    if pp < math.pi and inside(pp):
                        star = False
            pts.append(math.cos(psi_b) * axis + math.sin(psi_b) * e)
        sl = SphericalSlice(t, 3, polyline=np.asarray(pts), star_shaped=star)
    try:
        sl.graph_regular = classify_sc(body, np.zeros(n), sc_threshold, t, n_samples=9)
    except WrongVariant:
        sl.graph_regular = False
    return sl


# ---------------------------------------------------------------------------
# convexification of a slice (vertical shift)
# ---------------------------------------------------------------------------

@dataclass
class ConvexificationResult:
    radius: float
    delta: float
    hausdorff_gap: float
    area_gap: float
    slice_boundary: np.ndarray      # psi_V(phi) polar angles from the north pole
    shifted_boundary: np.ndarray    # psi_W(phi)
    phis: np.ndarray
    min_curvature: float
    c1_empirical: float


def _graph_slice_polar(body: GraphBody, t, delta, phis, n_bisect=60):
    """Polar angle psi(phi) of the boundary of the (shifted) graph slice.

    Solves cos(psi) = g_t(sin(psi) e(phi)) + delta on the unit sphere, where
    g_t(x') = f(t x')/t; the left side decreases and the right increases in
    psi, so bisection is safe.
    """
    psis = np.empty_like(phis)
    for i, phi in enumerate(phis):
        e = np.array([math.cos(phi), math.sin(phi)])

        def above(psi):
            sp = math.sin(psi)
            return math.cos(psi) >= body._fval(t * sp * e) / t + delta

        if not above(0.0):
            psis[i] = np.nan
            continue
        lo, hi = 0.0, math.pi / 2 + math.atan(body.lipschitz) + 0.2
        for _ in range(n_bisect):
            mid = 0.5 * (lo + hi)
            if above(mid):
                lo = mid
            else:
                hi = mid
        psis[i] = 0.5 * (lo + hi)
    return psis


def convexify_slice(body: GraphBody, t, n_phi=256, curvature_tol=1e-6) -> ConvexificationResult:
    """Shift the graph up by delta(t) = sup (r d_r g_t - g_t) and re-slice.

    The shifted slice W_t is contained in V_t, and the discrete geodesic
    curvature kappa = (alpha x alpha' . alpha'') / |alpha'|^3 of its boundary
    is reported (finite differences in phi).
    """
    if not isinstance(body, GraphBody):
        raise WrongVariant("convexify_slice requires a Graph body")
    sl = spherical_slice(body, t)
    if not sl.graph_regular and not sl.star_shaped:
        raise NotGraphRegular(f"slice at t={t} is not graph regular")
    if body.dimension == 3:
        phis = np.linspace(0, 2 * math.pi, n_phi, endpoint=False)
    else:
        phis = np.array([0.0, math.pi])
    # delta(t): sup over the sampled sub-disk where the slice lives of
    # r d_r g_t - g_t  =  (s d_s f - f)/t at s = t r
    delta = 0.0
    for phi in phis:
        e = (np.array([math.cos(phi), math.sin(phi)]) if body.dimension == 3
             else np.array([1.0 if math.cos(phi) >= 0 else -1.0]))
        for r in np.linspace(0.05, 1.0, 40):
            xp = t * r * e
            fv = body._fval(xp)
            for g in body.one_sided_gradients(xp):
                val = (float(g @ xp) - fv) / t
                delta = max(delta, val)
    psi_v = _graph_slice_polar(body, t, 0.0, phis)
    psi_w = _graph_slice_polar(body, t, delta, phis)
    valid = ~np.isnan(psi_w)
    if not valid.all():
        raise EmptySlice("vertical shift swallowed the slice")
    haus = float(np.max(psi_v - psi_w))            # meridian gap bounds the Hausdorff gap
    area = float(np.trapezoid(np.cos(psi_w) - np.cos(psi_v), phis)) if body.dimension == 3 \
        else float(np.sum(psi_v - psi_w))
    # curvature of the shifted boundary via central differences on the polyline
    if body.dimension == 3:
        pts = np.stack([np.sin(psi_w) * np.cos(phis),
                        np.sin(psi_w) * np.sin(phis),
                        np.cos(psi_w)], axis=1)
        fwd = np.roll(pts, -1, axis=0)
        bwd = np.roll(pts, 1, axis=0)
        h = phis[1] - phis[0]
        d1 = (fwd - bwd) / (2 * h)
        d2 = (fwd - 2 * pts + bwd) / (h * h)
        speed = np.linalg.norm(d1, axis=1)
        kappa = np.einsum("ij,ij->i", np.cross(pts, d1), d2) / np.maximum(speed ** 3, 1e-30)
        min_curv = float(np.min(kappa))
    else:
        min_curv = 0.0
    m4 = big_m(body, np.zeros(body.dimension), min(4 * t, 1.0)).value
    c1 = haus * t / m4 if m4 > 1e-15 else 0.0
    return ConvexificationResult(
        radius=t, delta=delta, hausdorff_gap=haus, area_gap=max(area, 0.0),
        slice_boundary=psi_v, shifted_boundary=psi_w, phis=phis,
        min_curvature=min_curv, c1_empirical=c1)


# ---------------------------------------------------------------------------
# one-dimensional convex Dini bound
# ---------------------------------------------------------------------------

def convex_1d_dini_bound(g, lipschitz, n_levels=40, check_convex=True):
    """int_0^1 t^{-2} (g(t) - 2 g(t/2)) dt for convex g >= 0, g(0) = 0.

    Evaluated dyadically; the result never exceeds 4 * lipschitz (telescoping
    bound).  `g` is a callable on [0, 1].
    """
    if check_convex:
        ts = np.linspace(0.0, 1.0, 41)
        vals = np.array([g(t) for t in ts])
        mid = np.array([g(0.5 * (a + b)) for a, b in zip(ts[:-1], ts[1:])])
        if np.any(mid > 0.5 * (vals[:-1] + vals[1:]) + 1e-10 * max(1.0, vals.max())):
            raise NotConvex("midpoint convexity fails on samples")
        if abs(g(0.0)) > 1e-12 or np.any(vals < -1e-12):
            raise NotConvex("need g(0)=0 and g >= 0")
    total = 0.0
    for j in range(n_levels):
        a, b = 2.0 ** (-j - 1), 2.0 ** (-j)
        # composite Simpson on [a, b]; h(t) = g(t) - 2 g(t/2) is mildly curved
        xs = np.linspace(a, b, 33)
        hs = np.array([g(x) - 2.0 * g(x / 2.0) for x in xs]) / xs ** 2
        total += float(np.trapezoid(hs, xs))
    return total


def dyadic_telescoping_bound(g, n_levels=40):
    """Independent oracle: sum 2^{j+2} h(2^{-j}) from the telescoping proof."""
    return sum(2.0 ** (j + 2) * (g(2.0 ** (-j)) - 2.0 * g(2.0 ** (-j - 1)))
               for j in range(n_levels))
