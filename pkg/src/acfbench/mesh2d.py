"""P1 triangulations of convex polygons with tagged Dirichlet segments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.spatial import Delaunay

from .errors import MeshFailure, NotConvex


def polygon_is_convex(vertices, tol=1e-12):
    v = np.asarray(vertices, float)
    n = len(v)
    sign = 0
    for i in range(n):
        a, b, c = v[i], v[(i + 1) % n], v[(i + 2) % n]
        cr = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(cr) <= tol:
            continue
        s = 1 if cr > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def polygon_area(vertices):
    v = np.asarray(vertices, float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass
class TriMesh2D:
    points: np.ndarray        # (N, 2)
    triangles: np.ndarray     # (M, 3)
    h: float
    areas: np.ndarray = field(default=None)
    grads: np.ndarray = field(default=None)   # (M, 3, 2): gradients of hats

    def __post_init__(self):
        p = self.points[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        flip = det < 0
        if flip.any():
            t = self.triangles.copy()
            t[flip] = t[flip][:, [0, 2, 1]]
            self.triangles = t
            p = self.points[self.triangles]
            d1 = p[:, 1] - p[:, 0]
            d2 = p[:, 2] - p[:, 0]
            det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.areas = 0.5 * det
        if np.any(self.areas <= 1e-14 * self.h * self.h):
            raise MeshFailure("degenerate triangle in mesh")
        # grad of hat i on triangle = rotated opposite edge / (2 area)
        e0 = p[:, 2] - p[:, 1]
        e1 = p[:, 0] - p[:, 2]
        e2 = p[:, 1] - p[:, 0]
        rot = lambda e: np.stack([-e[:, 1], e[:, 0]], axis=1)
        g = np.stack([rot(e0), rot(e1), rot(e2)], axis=1)
        self.grads = g / (2.0 * self.areas)[:, None, None]

    @property
    def n_points(self):
        return len(self.points)

    def stiffness(self):
        tri = self.triangles
        rows, cols, vals = [], [], []
        for i in range(3):
            for j in range(3):
                rows.append(tri[:, i])
                cols.append(tri[:, j])
                vals.append(self.areas * np.einsum("kd,kd->k",
                                                   self.grads[:, i], self.grads[:, j]))
        K = sparse.coo_matrix((np.concatenate(vals),
                               (np.concatenate(rows), np.concatenate(cols))),
                              shape=(self.n_points, self.n_points))
        return K.tocsr()

    def lumped_mass(self):
        m = np.zeros(self.n_points)
        for i in range(3):
            np.add.at(m, self.triangles[:, i], self.areas / 3.0)
        return m

    def gradient_of(self, u):
        """Constant per-triangle gradient of a P1 function, shape (M, 2)."""
        return np.einsum("kid,ki->kd", self.grads, u[self.triangles])

    def nodes_on_segment(self, p0, p1, tol=None):
        p0 = np.asarray(p0, float)
        p1 = np.asarray(p1, float)
        tol = 1e-9 if tol is None else tol
        d = p1 - p0
        L = np.linalg.norm(d)
        d = d / L
        rel = self.points - p0
        along = rel @ d
        perp = np.abs(rel @ np.array([-d[1], d[0]]))
        return np.nonzero((perp <= tol) & (along >= -tol) & (along <= L + tol))[0]

    def node_adjacency(self):
        tri = self.triangles
        rows = np.concatenate([tri[:, 0], tri[:, 1], tri[:, 2],
                               tri[:, 1], tri[:, 2], tri[:, 0]])
        cols = np.concatenate([tri[:, 1], tri[:, 2], tri[:, 0],
                               tri[:, 0], tri[:, 1], tri[:, 2]])
        data = np.ones(len(rows), dtype=np.int8)
        return sparse.coo_matrix((data, (rows, cols)),
                                 shape=(self.n_points, self.n_points)).tocsr()

    def triangles_of_node(self):
        out = [[] for _ in range(self.n_points)]
        for k, t in enumerate(self.triangles):
            for v in t:
                out[v].append(k)
        return out


def triangulate_convex_polygon(vertices, h) -> TriMesh2D:
    """Lattice + boundary-point Delaunay mesh of a convex polygon.

    For an axis-aligned rectangle whose sides are multiples of h, this
    produces the structured 2 * (a/h) * (b/h) triangle mesh.
    """
    v = np.asarray(vertices, float)
    if not polygon_is_convex(v):
        raise NotConvex("polygon must be convex")
    if polygon_area(v) < 0:
        v = v[::-1]
    pts = []
    n = len(v)
    # boundary points, corners included once
    for i in range(n):
        p0, p1 = v[i], v[(i + 1) % n]
        L = np.linalg.norm(p1 - p0)
        nseg = max(1, int(round(L / h)))
        for s in range(nseg):
            pts.append(p0 + (p1 - p0) * (s / nseg))
    bnd_count = len(pts)
    # interior lattice
    xmin, ymin = v.min(axis=0)
    xmax, ymax = v.max(axis=0)
    xs = np.arange(xmin, xmax + 0.5 * h, h)
    ys = np.arange(ymin, ymax + 0.5 * h, h)
    # edge inward normals for clearance tests
    edges = [(v[i], v[(i + 1) % n]) for i in range(n)]
    inward = []
    for p0, p1 in edges:
        t = (p1 - p0) / np.linalg.norm(p1 - p0)
        nvec = np.array([-t[1], t[0]])
        inward.append((p0, nvec))
    for x in xs:
        for y in ys:
            p = np.array([x, y])
            ds = [float((p - p0) @ nv) for p0, nv in inward]
            if min(ds) > 0.35 * h:
                pts.append(p)
    pts = np.asarray(pts)
    tri = Delaunay(pts)
    simplices = tri.simplices
    # drop slivers outside the polygon (none for convex hull == polygon)
    mesh = TriMesh2D(points=pts, triangles=simplices, h=h)
    return mesh
