"""Geodesic meshing of convex regions on the unit sphere.

Regions are intersections of half-spaces {x . n_i >= a_i} with a_i >= 0
(great circles for a_i = 0, sub-hemisphere caps otherwise), so every region
is geodesically convex.  Meshing uses a geodesic polar fan around an
interior center: boundary nodes are placed exactly on the active constraint
circles, interior rings are graded toward the center, and rings are stitched
by an angular zig-zag.  Triangles are flat (vertices on the sphere), which
is the standard surface-FEM setup with O(h^2) eigenvalue error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import MeshFailure, NotConvexDomain


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _frame(c):
    a = np.array([1.0, 0.0, 0.0]) if abs(c[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = _unit(np.cross(c, a))
    v = np.cross(c, u)
    return u, v


@dataclass(frozen=True)
class SphericalPolygon:
    """Convex spherical region {x in S^2 : normals @ x >= offsets}."""

    normals: np.ndarray
    offsets: np.ndarray

    @staticmethod
    def from_halfspaces(normals, offsets=None):
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        normals = normals / np.linalg.norm(normals, axis=1)[:, None]
        if offsets is None:
            offsets = np.zeros(len(normals))
        offsets = np.asarray(offsets, dtype=float)
        if np.any(offsets < -1e-12):
            raise NotConvexDomain("offsets must be >= 0 for geodesic convexity")
        return SphericalPolygon(normals, offsets)

    def contains(self, x, tol=1e-10):
        return bool(np.all(self.normals @ np.asarray(x, float) >= self.offsets - tol))

    def refined(self, extra_normal, extra_offset=0.0):
        return SphericalPolygon(np.vstack([self.normals, _unit(extra_normal)]),
                                np.concatenate([self.offsets, [extra_offset]]))

    # -- geometry -------------------------------------------------------------

    def interior_center(self, iters=400):
        """Point maximizing the margin min_i (x . n_i - a_i), by subgradient ascent."""
        x = _unit(np.sum(self.normals, axis=0))
        best_x, best_m = x, float(np.min(self.normals @ x - self.offsets))
        step = 0.5
        for k in range(iters):
            m = self.normals @ x - self.offsets
            i = int(np.argmin(m))
            g = self.normals[i] - (self.normals[i] @ x) * x  # tangential ascent
            ng = np.linalg.norm(g)
            if ng < 1e-14:
                break
            x = _unit(x + step * g / ng)
            mm = float(np.min(self.normals @ x - self.offsets))
            if mm > best_m:
                best_m, best_x = mm, x
            step *= 0.99
        if best_m <= 1e-10:
            raise MeshFailure("region has empty interior")
        return best_x

    def vertices(self, tol=1e-10):
        """Corner points (intersections of two active constraint circles)."""
        m = len(self.offsets)
        out = []
        for i in range(m):
            for j in range(i + 1, m):
                n1, n2 = self.normals[i], self.normals[j]
                a1, a2 = self.offsets[i], self.offsets[j]
                cr = np.cross(n1, n2)
                n12 = float(n1 @ n2)
                det = 1.0 - n12 * n12
                if det < 1e-14:
                    continue
                lam = (a1 - a2 * n12) / det
                mu = (a2 - a1 * n12) / det
                base = lam * n1 + mu * n2
                w2 = 1.0 - float(base @ base)
                if w2 < -1e-14:
                    continue
                w = math.sqrt(max(w2, 0.0)) / np.linalg.norm(cr)
                for s in (+1.0, -1.0):
                    q = base + s * w * cr
                    if self.contains(q, tol=1e-9):
                        if not any(np.linalg.norm(q - p) < 1e-9 for p in out):
                            out.append(_unit(q))
        return out

    def boundary_radius(self, center, u, v, phi):
        """Geodesic distance from `center` to the boundary in direction phi.

        Along the geodesic x(r) = cos r * c + sin r * e(phi), each constraint
        x . n_i = a_i is A_i cos(r - psi_i) = a_i, so the first exit is at
        min_i (psi_i + arccos(a_i / A_i)).
        """
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        e = np.outer(np.cos(phi), u) + np.outer(np.sin(phi), v)
        a = self.normals @ center                       # (m,)
        b = e @ self.normals.T                           # (len(phi), m)
        A = np.hypot(a[None, :], b)
        psi = np.arctan2(b, a[None, :])
        ratio = np.clip(self.offsets[None, :] / np.maximum(A, 1e-300), -1.0, 1.0)
        r = psi + np.arccos(ratio)
        return np.min(r, axis=1), np.argmin(r, axis=1)

    def is_geodesically_convex(self):
        """Discrete check: all corner interior angles <= pi + tol.

        Regions built from half-spaces with nonnegative offsets are always
        convex; kept as an input validation hook.
        """
        return bool(np.all(self.offsets >= -1e-12))

    def area(self, n_phi=2048):
        """Area by the polar formula int (1 - cos R(phi)) dphi around the center."""
        c = self.interior_center()
        u, v = _frame(c)
        phi = (np.arange(n_phi) + 0.5) * (2 * math.pi / n_phi)
        R, _ = self.boundary_radius(c, u, v, phi)
        return float(np.sum(1.0 - np.cos(R)) * (2 * math.pi / n_phi))


@dataclass
class SphereMesh:
    vertices: np.ndarray                 # (N, 3) on the unit sphere
    triangles: np.ndarray                # (M, 3) int
    boundary_planes: dict = field(default_factory=dict)  # vertex -> set of plane ids
    h: float = 0.0

    @property
    def n_vertices(self):
        return len(self.vertices)

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)

    def assemble(self, lumped=False):
        """P1 stiffness and mass matrices on the flat triangles."""
        tri = self.triangles
        p = self.vertices[tri]
        e0 = p[:, 2] - p[:, 1]
        e1 = p[:, 0] - p[:, 2]
        e2 = p[:, 1] - p[:, 0]
        n = np.cross(e2, -e1)
        area2 = np.linalg.norm(n, axis=1)           # 2 * area
        if np.any(area2 <= 0):
            raise MeshFailure("degenerate triangle")
        # cotangent weights: K_local[i, j] = -cot(angle_k)/2 for edge (i, j)
        cot = np.empty((len(tri), 3))
        cot[:, 0] = np.einsum("ij,ij->i", e1, -e2) / area2 * 2.0 / 2.0
        cot[:, 1] = np.einsum("ij,ij->i", e2, -e0) / area2 * 2.0 / 2.0
        cot[:, 2] = np.einsum("ij,ij->i", e0, -e1) / area2 * 2.0 / 2.0
        rows, cols, vals = [], [], []
        pairs = [(1, 2, 0), (2, 0, 1), (0, 1, 2)]
        for i, j, k in pairs:
            w = 0.5 * cot[:, k] * 2.0 / 2.0
            rows += [tri[:, i], tri[:, j], tri[:, i], tri[:, j]]
            cols += [tri[:, j], tri[:, i], tri[:, i], tri[:, j]]
            vals += [-w, -w, w, w]
        K = sparse.coo_matrix((np.concatenate(vals),
                               (np.concatenate(rows), np.concatenate(cols))),
                              shape=(self.n_vertices, self.n_vertices)).tocsr()
        area = area2 / 2.0
        if lumped:
            Mdiag = np.zeros(self.n_vertices)
            for i in range(3):
                np.add.at(Mdiag, tri[:, i], area / 3.0)
            M = sparse.diags(Mdiag).tocsr()
        else:
            rows, cols, vals = [], [], []
            for i in range(3):
                for j in range(3):
                    rows.append(tri[:, i])
                    cols.append(tri[:, j])
                    vals.append(area * (1.0 / 6.0 if i == j else 1.0 / 12.0))
            M = sparse.coo_matrix((np.concatenate(vals),
                                   (np.concatenate(rows), np.concatenate(cols))),
                                  shape=(self.n_vertices, self.n_vertices)).tocsr()
        return K, M

    def dirichlet_mask(self, dirichlet_plane_ids):
        ids = set(int(i) for i in dirichlet_plane_ids)
        mask = np.zeros(self.n_vertices, dtype=bool)
        for v, planes in self.boundary_planes.items():
            if planes & ids:
                mask[v] = True
        return mask


def _zigzag(ring_a, phi_a, ring_b, phi_b):
    """Triangulate the band between two closed vertex rings ordered by angle."""
    na, nb = len(ring_a), len(ring_b)
    tris = []
    i = j = 0
    # rotate ring_b so it starts near ring_a's first angle
    start = int(np.argmin((phi_b - phi_a[0]) % (2 * math.pi)))
    order_b = [(start + k) % nb for k in range(nb)]
    pb = [(phi_b[k] - phi_a[0]) % (2 * math.pi) for k in order_b]
    pa = [(phi_a[k] - phi_a[0]) % (2 * math.pi) for k in range(na)]
    ia = ib = 0
    while ia < na or ib < nb:
        a_next = pa[(ia + 1) % na] if ia + 1 < na else 2 * math.pi
        b_next = pb[(ib + 1) % nb] if ib + 1 < nb else 2 * math.pi
        if ia < na and (a_next <= b_next or ib >= nb):
            tris.append((ring_a[ia % na], ring_b[order_b[ib % nb]],
                         ring_a[(ia + 1) % na]))
            ia += 1
        else:
            tris.append((ring_a[ia % na], ring_b[order_b[ib % nb]],
                         ring_b[order_b[(ib + 1) % nb]]))
            ib += 1
    return tris


def fan_mesh(region: SphericalPolygon, h: float) -> SphereMesh:
    """Geodesic polar fan mesh of a convex spherical region.

    Boundary vertices lie exactly on their constraint circles (corners on
    both adjacent circles) and carry the circle ids for boundary-condition
    tagging.  Interior ring i sits at fraction i/m of the local boundary
    radius R(phi).
    """
    c = region.interior_center()
    u, v = _frame(c)

    corners = region.vertices()
    corner_phis = []
    for q in corners:
        e = q - (q @ c) * c
        ne = np.linalg.norm(e)
        if ne < 1e-14:
            continue
        corner_phis.append(math.atan2(e @ v, e @ u) % (2 * math.pi))
    order = np.argsort(corner_phis)
    corners = [corners[i] for i in order]
    corner_phis = [corner_phis[i] for i in order]

    # ---- boundary polyline with plane labels --------------------------------
    bnd_pts, bnd_phis, bnd_planes = [], [], []

    def _radius_dir(phi):
        R, idx = region.boundary_radius(c, u, v, [phi])
        e = math.cos(phi) * u + math.sin(phi) * v
        return math.cos(R[0]) * c + math.sin(R[0]) * e, int(idx[0])

    if corners:
        ncor = len(corners)
        for a in range(ncor):
            q0, q1 = corners[a], corners[(a + 1) % ncor]
            phi0 = corner_phis[a]
            phi1 = corner_phis[(a + 1) % ncor]
            span = (phi1 - phi0) % (2 * math.pi)
            if span == 0.0:
                span = 2 * math.pi
            midphi = (phi0 + 0.5 * span) % (2 * math.pi)
            midpt, plane = _radius_dir(midphi)
            # points on the active circle between the two corners
            n_i, a_i = region.normals[plane], region.offsets[plane]
            rad = math.sqrt(max(1.0 - a_i * a_i, 0.0))
            ctr = a_i * n_i
            p_ax, q_ax = _frame(n_i)
            t0 = math.atan2((q0 - ctr) @ q_ax, (q0 - ctr) @ p_ax)
            t1 = math.atan2((q1 - ctr) @ q_ax, (q1 - ctr) @ p_ax)
            tm = math.atan2((midpt - ctr) @ q_ax, (midpt - ctr) @ p_ax)
            # choose the arc direction passing through the midpoint
            d_fwd = (t1 - t0) % (2 * math.pi)
            on_fwd = (tm - t0) % (2 * math.pi) <= d_fwd + 1e-12
            sweep = d_fwd if on_fwd else d_fwd - 2 * math.pi
            arclen = abs(sweep) * rad
            nseg = max(1, int(math.ceil(arclen / h)))
            for s in range(nseg):
                tt = t0 + sweep * s / nseg
                pt = ctr + rad * (math.cos(tt) * p_ax + math.sin(tt) * q_ax)
                pt = _unit(pt)
                e = pt - (pt @ c) * c
                bnd_pts.append(pt)
                bnd_phis.append(math.atan2(e @ v, e @ u) % (2 * math.pi))
                planes = {plane}
                if s == 0:
                    # corner vertex: also on the previous arc's plane
                    prevphi = (phi0 - 1e-6) % (2 * math.pi)
                    planes.add(_radius_dir(prevphi)[1])
                bnd_planes.append(planes)
    else:
        # smooth boundary (single circle)
        Rtyp, _ = region.boundary_radius(c, u, v, [0.0])
        perim = 2 * math.pi * math.sin(Rtyp[0])
        nseg = max(8, int(math.ceil(perim / h)))
        for s in range(nseg):
            phi = 2 * math.pi * s / nseg
            pt, plane = _radius_dir(phi)
            bnd_pts.append(pt)
            bnd_phis.append(phi)
            bnd_planes.append({plane})

    bnd_pts = np.asarray(bnd_pts)
    bnd_phis = np.asarray(bnd_phis)
    order = np.argsort(bnd_phis)
    bnd_pts = bnd_pts[order]
    bnd_phis = bnd_phis[order]
    bnd_planes = [bnd_planes[i] for i in order]
    nb = len(bnd_pts)

    R_all = np.arccos(np.clip(bnd_pts @ c, -1.0, 1.0))
    R_max = float(np.max(R_all))
    m_rings = max(2, int(round(R_max / h)))

    vertices = [c]
    planes_of = {}
    rings = [[0]]
    ring_phis = [np.array([0.0])]
    for i in range(1, m_rings):
        frac = i / m_rings
        n_i = max(6, int(round(nb * frac)))
        phis = (np.arange(n_i) + 0.5 * (i % 2)) * (2 * math.pi / n_i)
        R_i, _ = region.boundary_radius(c, u, v, phis)
        r = frac * R_i
        e = np.outer(np.cos(phis), u) + np.outer(np.sin(phis), v)
        pts = np.cos(r)[:, None] * c + np.sin(r)[:, None] * e
        idx = list(range(len(vertices), len(vertices) + n_i))
        vertices.extend(pts)
        rings.append(idx)
        ring_phis.append(phis)
    bidx = list(range(len(vertices), len(vertices) + nb))
    vertices.extend(bnd_pts)
    for k, planes in zip(bidx, bnd_planes):
        planes_of[k] = planes
    rings.append(bidx)
    ring_phis.append(bnd_phis)

    triangles = []
    # center fan
    first = rings[1]
    for j in range(len(first)):
        triangles.append((0, first[j], first[(j + 1) % len(first)]))
    for i in range(1, len(rings) - 1):
        triangles.extend(_zigzag(rings[i], ring_phis[i], rings[i + 1], ring_phis[i + 1]))

    mesh = SphereMesh(np.asarray(vertices), np.asarray(triangles, dtype=int),
                      planes_of, h=h)
    # orient consistently (outward normals along the position vector)
    p = mesh.vertices[mesh.triangles]
    nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = np.einsum("ij,ij->i", nrm, p.mean(axis=1)) < 0
    t = mesh.triangles.copy()
    t[flip] = t[flip][:, [0, 2, 1]]
    mesh.triangles = t
    areas = mesh.triangle_areas()
    if np.any(areas < 1e-16):
        raise MeshFailure("zero-area triangle in fan mesh")
    return mesh
