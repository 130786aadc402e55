"""The ACF product functional Phi(t), its boundary corrections A/B, and the
monotonicity scan tying them to the spectral data of the sphere slices.

Phi(t) = I+(t) * I-(t),  I+- = t^{-2} int_{B_t cap Omega} |grad u+-|^2 / |y-x|^{n-2}.

In polar form the kernel and volume element combine to a plain factor r for
both n = 2 and n = 3, so radial integration is exact per quadrature cell.
Discrete P1 fields are integrated exactly (per-triangle sign-split polygons
clipped against the disk); analytic fields use product quadrature with a
doubled-resolution error estimate.

The scan records, per radius: Phi, A+-, the first mixed eigenvalues of the
positive/negative trace arcs, the characteristic exponents alpha/beta, the
t^4 Phi monotonicity residuals, the S_c membership, and the dyadic interval
bookkeeping (J and its Phi-decreasing subset J_1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import convexgeom as cg
from .diskgeom import polygon_disk_area, split_triangle_by_sign
from .errors import BallOutsideField, DegenerateDenominator, EmptySlice
from .spectral import arc_eigen, beta_exponent, char_exponent


# ---------------------------------------------------------------------------
# field abstractions
# ---------------------------------------------------------------------------

class AnalyticField:
    """u given by callables; `value(x)` and `grad(x)` accept (..., n) arrays.

    `body` restricts the integration to the convex domain (None = free
    space).  u+ and u- are the positive and negative parts of u.
    """

    def __init__(self, value, grad, dimension, body=None):
        self.value = value
        self.grad = grad
        self.dimension = dimension
        self.body = body

    def inside(self, pts):
        if self.body is None:
            return np.ones(len(pts), dtype=bool)
        return np.array([self.body.contains(p, tol=1e-12) for p in pts])

    def grad_signed(self, pts, sign):
        pts = np.atleast_2d(pts)
        g = np.atleast_2d(self.grad(pts))
        v = np.atleast_1d(self.value(pts))
        mask = (v > 0) if sign > 0 else (v < 0)
        return g * mask[:, None]


class DiscreteField:
    """P1 field on a 2-D mesh (a solver PhaseField or raw mesh + values)."""

    def __init__(self, mesh, u, body=None):
        self.mesh = mesh
        self.u = np.asarray(u, float)
        self.body = body
        self.dimension = 2
        self._cent = mesh.points[mesh.triangles].mean(axis=1)
        self._tree = cKDTree(self._cent)
        self._grads = mesh.gradient_of(self.u)

    @staticmethod
    def from_phase_field(pf, body=None):
        return DiscreteField(pf.mesh, pf.u, body=body)

    def locate(self, pts, k=16):
        """Triangle index per point (-1 outside), by nearest-centroid probing."""
        pts = np.atleast_2d(pts)
        _, cand = self._tree.query(pts, k=min(k, len(self._cent)))
        cand = np.atleast_2d(cand)
        tri = self.mesh.triangles
        P = self.mesh.points
        out = np.full(len(pts), -1, dtype=int)
        for row, p in enumerate(pts):
            for c in cand[row]:
                a, b, cc = P[tri[c, 0]], P[tri[c, 1]], P[tri[c, 2]]
                d = (b[0] - a[0]) * (cc[1] - a[1]) - (b[1] - a[1]) * (cc[0] - a[0])
                l1 = ((b[0] - p[0]) * (cc[1] - p[1]) - (b[1] - p[1]) * (cc[0] - p[0])) / d
                l2 = ((cc[0] - p[0]) * (a[1] - p[1]) - (cc[1] - p[1]) * (a[0] - p[0])) / d
                l3 = 1.0 - l1 - l2
                if l1 >= -1e-12 and l2 >= -1e-12 and l3 >= -1e-12:
                    out[row] = c
                    break
        return out

    def value(self, pts):
        pts = np.atleast_2d(pts)
        ks = self.locate(pts)
        vals = np.zeros(len(pts))
        tri = self.mesh.triangles
        P = self.mesh.points
        for i, (p, k) in enumerate(zip(pts, ks)):
            if k < 0:
                vals[i] = np.nan
                continue
            a, b, c = P[tri[k, 0]], P[tri[k, 1]], P[tri[k, 2]]
            d = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            l1 = ((b[0] - p[0]) * (c[1] - p[1]) - (b[1] - p[1]) * (c[0] - p[0])) / d
            l2 = ((c[0] - p[0]) * (a[1] - p[1]) - (c[1] - p[1]) * (a[0] - p[0])) / d
            l3 = 1.0 - l1 - l2
            u = self.u[tri[k]]
            vals[i] = l1 * u[0] + l2 * u[1] + l3 * u[2]
        return vals

    def grad_at(self, pts):
        ks = self.locate(np.atleast_2d(pts))
        g = np.zeros((len(ks), 2))
        ok = ks >= 0
        g[ok] = self._grads[ks[ok]]
        return g


# ---------------------------------------------------------------------------
# Phi
# ---------------------------------------------------------------------------

@dataclass
class PhiValue:
    i_plus: float
    i_minus: float
    phi: float
    quad_error: float


def _phi_discrete(fld: DiscreteField, center, t):
    mesh = fld.mesh
    center = np.asarray(center, float)
    tri = mesh.triangles
    P = mesh.points
    # triangles possibly touching the disk
    d = np.linalg.norm(self_cent := fld._cent - center, axis=1)
    rad = np.max(np.linalg.norm(P[tri] - self_cent[:, None, :] - center, axis=2), axis=1)
    near = d <= t + rad + 1e-12
    i_p = i_m = 0.0
    for k in np.nonzero(near)[0]:
        pts = P[tri[k]]
        uu = fld.u[tri[k]]
        g2 = float(fld._grads[k] @ fld._grads[k])
        if g2 == 0.0:
            continue
        pos, neg = split_triangle_by_sign(pts, uu)
        if pos is not None:
            i_p += g2 * polygon_disk_area(pos, center, t)
        if neg is not None:
            i_m += g2 * polygon_disk_area(neg, center, t)
    return PhiValue(i_p / t ** 2, i_m / t ** 2, i_p * i_m / t ** 4, 1e-13)


def _phi_analytic(fld: AnalyticField, center, t, n_r=24, n_ang=256):
    """Product quadrature in (r, angle); radial weight is exactly r."""
    center = np.asarray(center, float)
    n = fld.dimension

    def eval_at(n_ang_eff):
        if n == 2:
            phis = (np.arange(n_ang_eff) + 0.5) * (2 * math.pi / n_ang_eff)
            omps = np.stack([np.cos(phis), np.sin(phis)], axis=1)
            w_ang = np.full(n_ang_eff, 2 * math.pi / n_ang_eff)
        else:
            n_phi = n_ang_eff
            n_mu = max(8, n_ang_eff // 8)
            mus, wmu = np.polynomial.legendre.leggauss(n_mu)
            phis = (np.arange(n_phi) + 0.5) * (2 * math.pi / n_phi)
            MU, PH = np.meshgrid(mus, phis, indexing="ij")
            s = np.sqrt(1 - MU ** 2)
            omps = np.stack([s * np.cos(PH), s * np.sin(PH), MU], axis=-1).reshape(-1, 3)
            w_ang = (np.outer(wmu, np.full(n_phi, 2 * math.pi / n_phi))).ravel()
        xs, ws = np.polynomial.legendre.leggauss(n_r)
        rr = 0.5 * t * (xs + 1.0)
        wr = 0.5 * t * ws
        i_p = i_m = 0.0
        for r, w in zip(rr, wr):
            pts = center + r * omps
            ins = fld.inside(pts)
            gp = fld.grad_signed(pts, +1)
            gm = fld.grad_signed(pts, -1)
            sp = float(np.sum(w_ang[ins] * np.einsum("ij,ij->i", gp[ins], gp[ins])))
            sm = float(np.sum(w_ang[ins] * np.einsum("ij,ij->i", gm[ins], gm[ins])))
            i_p += w * r * sp
            i_m += w * r * sm
        return i_p / t ** 2, i_m / t ** 2

    ip1, im1 = eval_at(n_ang)
    ip2, im2 = eval_at(2 * n_ang)
    err = abs(ip1 * im1 - ip2 * im2)
    return PhiValue(ip2, im2, ip2 * im2, err)


def phi(fld, center, t, n=None):
    """(I+, I-, Phi) at radius t around `center`, with a quadrature error."""
    if isinstance(fld, DiscreteField):
        pv = _phi_discrete(fld, center, t)
    else:
        pv = _phi_analytic(fld, center, t)
    if math.isnan(pv.phi):
        raise BallOutsideField(f"ball of radius {t} leaves the field support")
    return pv


# ---------------------------------------------------------------------------
# slice traces and boundary integrals (n = 2)
# ---------------------------------------------------------------------------

def _slice_angles(body, center, t, n_scan=1024):
    """Angles phi with center + t e(phi) inside the body (None = all)."""
    phis = (np.arange(n_scan) + 0.5) * (2 * math.pi / n_scan)
    if body is None:
        return phis, np.ones(n_scan, dtype=bool)
    pts = np.asarray(center) + t * np.stack([np.cos(phis), np.sin(phis)], axis=1)
    ins = np.array([body.contains(p, tol=1e-12) for p in pts])
    return phis, ins


def trace_arcs(fld, body, center, t, n_scan=1024):
    """Sign components of u on the slice circle: list of (length, bc, sign).

    bc is 'DD', 'DN', or 'NN' according to whether the component ends at
    zero crossings (Dirichlet) or at the domain boundary (Neumann).
    """
    phis, ins = _slice_angles(body, center, t, n_scan)
    pts = np.asarray(center) + t * np.stack([np.cos(phis), np.sin(phis)], axis=1)
    vals = np.full(n_scan, np.nan)
    vals[ins] = np.atleast_1d(fld.value(pts[ins]))
    if not ins.any():
        raise EmptySlice("slice circle misses the domain")
    dphi = 2 * math.pi / n_scan
    # walk components of constant sign
    arcs = []
    sign = np.zeros(n_scan, dtype=int)
    sign[ins & (vals > 0)] = 1
    sign[ins & (vals < 0)] = -1
    # find runs over the circle (wrap-around)
    start = 0
    if ins.all() and sign.min() == sign.max():
        s = int(sign[0])
        if s != 0:
            arcs.append((2 * math.pi, "NN", s))
        return arcs
    # rotate so position 0 is a boundary between runs
    brk = 0
    for i in range(n_scan):
        if sign[i] != sign[i - 1] or ins[i] != ins[i - 1]:
            brk = i
            break
    order = np.arange(brk, brk + n_scan) % n_scan
    runs = []
    cur_sign = sign[order[0]]
    cur_in = ins[order[0]]
    length = 1
    for idx in order[1:]:
        if sign[idx] == cur_sign and ins[idx] == cur_in:
            length += 1
        else:
            runs.append((cur_sign, cur_in, length))
            cur_sign, cur_in, length = sign[idx], ins[idx], 1
    runs.append((cur_sign, cur_in, length))
    for k, (s, inside, length) in enumerate(runs):
        if not inside or s == 0:
            continue
        prev_in = runs[(k - 1) % len(runs)][1]
        next_in = runs[(k + 1) % len(runs)][1]
        n_dir = (1 if prev_in else 0) + (1 if next_in else 0)
        bc = {2: "DD", 1: "DN", 0: "NN"}[n_dir]
        arcs.append((length * dphi, bc, s))
    return arcs


def slice_eigenvalue(arcs, sign):
    """Smallest mixed eigenvalue over the sign's components; 0 with no
    Dirichlet part (the A = infinity route of the beta convention)."""
    lams = []
    for length, bc, s in arcs:
        if s != sign:
            continue
        if bc == "NN":
            lams.append(0.0)
        else:
            lams.append(arc_eigen(length, bc).eigenvalue)
    if not lams:
        return None
    return min(lams)


def a_correction(body, fld, center, t, sign, n_bnd=600, n_scan=1024):
    """A+-(t): boundary-correction quotient of Definition-style integrals.

    Numerator: int_{B_t cap dOmega} (u+-)^2 nu.(y-c) / |y-c|^n ; denominator
    t^{-(n-1)} int_{dB_t cap Omega} (u+-)^2.  Returns 0 when the numerator
    vanishes and inf when only the denominator does.
    """
    center = np.asarray(center, float)
    n = 2
    # denominator
    phis, ins = _slice_angles(body, center, t, n_scan)
    pts = center + t * np.stack([np.cos(phis), np.sin(phis)], axis=1)
    vals = np.zeros(n_scan)
    vals[ins] = np.atleast_1d(fld.value(pts[ins]))
    up = np.maximum(vals if sign > 0 else -vals, 0.0)
    den = float(np.sum(up[ins] ** 2) * (2 * math.pi / n_scan) * t) / t ** (n - 1)
    if body is None:
        return 0.0, 0.0, den
    # numerator over the body boundary inside the ball, log-refined near c
    num = 0.0
    for y, w, nu in body_boundary_quadrature(body, center, t, n_bnd):
        uv = float(np.atleast_1d(fld.value(y[None, :]))[0])
        uv = max(uv if sign > 0 else -uv, 0.0)
        rel = y - center
        rho = float(np.linalg.norm(rel))
        if rho < 1e-14:
            continue
        num += w * uv * uv * float(nu @ rel) / rho ** n
    scale = max(np.max(up) ** 2, 1e-300)
    if abs(num) <= 1e-12 * scale:
        return 0.0, num, den
    if den <= 1e-14 * scale:
        return math.inf, num, den
    return num / den, num, den


def body_boundary_quadrature(body, center, t, n_pts=600):
    """(point, weight, normal) samples of dOmega cap B_t(center), n = 2.

    Each boundary branch is sampled on a log-spaced grid toward the center
    so the |y - c|^{-n} kernel is resolved.
    """
    center = np.asarray(center, float)
    out = []
    if isinstance(body, cg.PolytopeBody):
        for i in range(len(body.offsets)):
            nu = body.normals[i]
            tang = np.array([-nu[1], nu[0]])
            # project center onto the facet line, then clip the chord to B_t
            p0 = center + (body.offsets[i] - nu @ center) * nu
            half = t * t - float((p0 - center) @ (p0 - center))
            if half <= 0:
                continue
            half = math.sqrt(half)
            ss = _log_symmetric_grid(half, n_pts)
            for (s0, s1) in zip(ss[:-1], ss[1:]):
                y = p0 + 0.5 * (s0 + s1) * tang
                if body.on_boundary(y, tol=1e-9) and body.contains(y, tol=1e-9):
                    out.append((y, s1 - s0, nu))
    elif isinstance(body, cg.GraphBody) and body.dimension == 2:
        for direction in (+1.0, -1.0):
            smax = min(1.0, t)
            ss = np.geomspace(1e-9 * t, smax, n_pts // 2)
            for (s0, s1) in zip(ss[:-1], ss[1:]):
                s = 0.5 * (s0 + s1)
                xp = np.array([direction * s])
                fv = body._fval(xp)
                y = np.array([direction * s, fv])
                if np.linalg.norm(y - center) > t:
                    continue
                g = body.one_sided_gradients(xp)[0]
                nu = np.array([float(g[0]), -1.0])
                nu /= np.linalg.norm(nu)
                w = (s1 - s0) * math.sqrt(1.0 + float(g[0]) ** 2)
                out.append((y, w, nu))
    elif isinstance(body, cg.BallBody):
        c0, R = body.center, body.radius
        ang = np.linspace(0, 2 * math.pi, n_pts, endpoint=False)
        for a0, a1 in zip(ang, np.roll(ang, -1)):
            am = 0.5 * (a0 + a1) if a1 > a0 else 0.5 * (a0 + a1 + 2 * math.pi)
            y = c0 + R * np.array([math.cos(am), math.sin(am)])
            if np.linalg.norm(y - center) <= t:
                out.append((y, R * (2 * math.pi / n_pts), (y - c0) / R))
    else:
        raise NotImplementedError(f"no boundary quadrature for {type(body).__name__}")
    return out


def _log_symmetric_grid(half, n):
    a = np.geomspace(1e-9 * half, half, n // 2)
    return np.concatenate([-a[::-1], a])


def b_quotient(fld: AnalyticField, body, center, t, A, sign, n_ang=2048):
    """B+-(t): spherical-shell Rayleigh-type quotient of the + or - part."""
    center = np.asarray(center, float)
    n = fld.dimension
    if n == 2:
        phis, ins = _slice_angles(body, center, t, n_ang)
        omps = np.stack([np.cos(phis), np.sin(phis)], axis=1)
        w = np.full(n_ang, 2 * math.pi / n_ang) * t
    else:
        n_mu = 96
        mus, wmu = np.polynomial.legendre.leggauss(n_mu)
        phis = (np.arange(n_ang // 8) + 0.5) * (2 * math.pi / (n_ang // 8))
        MU, PH = np.meshgrid(mus, phis, indexing="ij")
        s = np.sqrt(1 - MU ** 2)
        omps = np.stack([s * np.cos(PH), s * np.sin(PH), MU], axis=-1).reshape(-1, 3)
        w = np.outer(wmu, np.full(len(phis), 2 * math.pi / len(phis))).ravel() * t * t
        if body is None:
            ins = np.ones(len(omps), dtype=bool)
        else:
            ins = np.array([body.contains(center + t * o, tol=1e-12) for o in omps])
    pts = center + t * omps
    vals = np.atleast_1d(fld.value(pts))
    grads = np.atleast_2d(fld.grad(pts))
    mask = ins & ((vals > 0) if sign > 0 else (vals < 0))
    u = np.where(mask, np.abs(vals), 0.0)
    g = grads * mask[:, None]
    d_rho = np.einsum("ij,ij->i", g, omps)
    g_tan = g - d_rho[:, None] * omps
    num = float(np.sum(w * (d_rho ** 2 + np.einsum("ij,ij->i", g_tan, g_tan))))
    den = float(np.sum(w * u * d_rho)) + 0.5 * (n - 2) * (1.0 + A) / t * float(np.sum(w * u * u))
    if abs(den) < 1e-14 * max(num, 1.0):
        raise DegenerateDenominator("B quotient denominator vanished")
    return num / den


# ---------------------------------------------------------------------------
# monotonicity scan
# ---------------------------------------------------------------------------

@dataclass
class ACFSample:
    t: float
    i_plus: float
    i_minus: float
    phi: float
    quad_error: float
    a_plus: float
    a_minus: float
    lambda_plus: float | None
    lambda_minus: float | None
    alpha_plus: float | None
    alpha_minus: float | None
    beta_plus: float | None
    beta_minus: float | None
    in_sc: bool
    dyadic_j: int
    in_j1: bool = False
    note: str = ""

    @property
    def t4phi(self):
        return self.t ** 4 * self.phi


@dataclass
class MonotonicityReport:
    samples: list
    violations: list
    max_violation_rel: float
    tolerance_rel: float
    phi_max: float
    deficiency_integral: float
    a_over_t_j1_plus: float
    a_over_t_j1_minus: float
    dyadic_j_set: list
    dyadic_j1_set: list

    @property
    def passed(self):
        return self.max_violation_rel <= self.tolerance_rel


def monotonicity_scan(body, fld, center, t_grid, sc_threshold=0.1,
                      tolerance_rel=None):
    """Sample Phi / A / eigen data over t_grid and check t^4 Phi monotonicity.

    `tolerance_rel` defaults to the field's quadrature error for analytic
    fields and to 2h for P1 fields (the O(h) discretization of the energy
    densities near the free boundary dominates there).
    """
    center = np.asarray(center, float)
    t_grid = np.sort(np.asarray(t_grid, float))
    if tolerance_rel is None:
        if isinstance(fld, DiscreteField):
            tolerance_rel = 2.0 * fld.mesh.h
        else:
            tolerance_rel = 1e-6
    samples = []
    for t in t_grid:
        pv = phi(fld, center, t)
        note = ""
        try:
            arcs = trace_arcs(fld, body, center, t)
        except EmptySlice:
            arcs, note = [], "empty slice"
        if body is not None:
            a_p, _, _ = a_correction(body, fld, center, t, +1)
            a_m, _, _ = a_correction(body, fld, center, t, -1)
        else:
            a_p = a_m = 0.0
        lam_p = slice_eigenvalue(arcs, +1)
        lam_m = slice_eigenvalue(arcs, -1)
        al_p = char_exponent(lam_p, 2) if lam_p is not None else None
        al_m = char_exponent(lam_m, 2) if lam_m is not None else None
        # components without Dirichlet part follow the A = inf convention
        be_p = beta_exponent(lam_p, a_p, 2) if lam_p not in (None, 0.0) else 0.0
        be_m = beta_exponent(lam_m, a_m, 2) if lam_m not in (None, 0.0) else 0.0
        in_sc = True
        if body is not None:
            in_sc = cg.classify_sc(body, center, sc_threshold, t, n_samples=9)
        samples.append(ACFSample(
            t=t, i_plus=pv.i_plus, i_minus=pv.i_minus, phi=pv.phi,
            quad_error=pv.quad_error, a_plus=a_p, a_minus=a_m,
            lambda_plus=lam_p, lambda_minus=lam_m,
            alpha_plus=al_p, alpha_minus=al_m,
            beta_plus=be_p, beta_minus=be_m,
            in_sc=in_sc, dyadic_j=int(math.floor(-math.log2(t))) if t < 1 else 0,
            note=note))
    # t^4 Phi monotonicity
    t4 = np.array([s.t4phi for s in samples])
    ref = max(float(np.max(t4)), 1e-300)
    viol = []
    worst = 0.0
    for i in range(len(samples) - 1):
        drop = (t4[i] - t4[i + 1]) / ref
        if drop > 0:
            worst = max(worst, drop)
            viol.append((samples[i].t, samples[i + 1].t, drop))
    # deficiency integral: trapezoid of [2 - alpha+ - alpha-]_+ against dt/t
    defic = 0.0
    for i in range(len(samples) - 1):
        vals = []
        for s in (samples[i], samples[i + 1]):
            ap = s.alpha_plus if s.alpha_plus is not None else 0.0
            am = s.alpha_minus if s.alpha_minus is not None else 0.0
            vals.append(max(2.0 - ap - am, 0.0))
        defic += 0.5 * sum(vals) * math.log(samples[i + 1].t / samples[i].t)
    # dyadic bookkeeping: I_j = [2^-j, 2^-j+1) cap S_c; J_1 where Phi decays
    j_set = sorted({s.dyadic_j for s in samples if s.in_sc})
    j1_set = []
    a_sum_p = a_sum_m = 0.0
    for j in j_set:
        js = [s for s in samples if s.dyadic_j == j and s.in_sc]
        if len(js) < 2:
            continue
        if js[0].phi >= js[-1].phi:
            j1_set.append(j)
            for s in js:
                s.in_j1 = True
            for s0, s1 in zip(js[:-1], js[1:]):
                w = math.log(s1.t / s0.t)
                ap0 = 0.0 if math.isinf(s0.a_plus) else s0.a_plus
                ap1 = 0.0 if math.isinf(s1.a_plus) else s1.a_plus
                am0 = 0.0 if math.isinf(s0.a_minus) else s0.a_minus
                am1 = 0.0 if math.isinf(s1.a_minus) else s1.a_minus
                a_sum_p += 0.5 * (ap0 + ap1) * w
                a_sum_m += 0.5 * (am0 + am1) * w
    return MonotonicityReport(
        samples=samples, violations=viol, max_violation_rel=worst,
        tolerance_rel=tolerance_rel, phi_max=float(np.max([s.phi for s in samples])),
        deficiency_integral=defic,
        a_over_t_j1_plus=a_sum_p, a_over_t_j1_minus=a_sum_m,
        dyadic_j_set=j_set, dyadic_j1_set=j1_set)


# convenience: the planar two-phase reference field u = a x1+ - b x1-

def planar_two_phase(alpha, beta, dimension=2, body=None):
    def value(p):
        p = np.atleast_2d(p)
        x = p[..., 0]
        return np.where(x > 0, alpha * x, beta * x)

    def grad(p):
        p = np.atleast_2d(p)
        g = np.zeros_like(p)
        g[..., 0] = np.where(p[..., 0] > 0, alpha, beta)
        return g

    return AnalyticField(value, grad, dimension, body=body)
