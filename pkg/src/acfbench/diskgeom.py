"""Exact area of (convex polygon) intersect (disk), by Green's theorem.

Each directed polygon edge contributes the signed area of the circular
triangle (origin, a, b) clipped to the disk: straight pieces inside the
circle contribute cross products, pieces outside contribute circular
sectors.  Exact up to roundoff; used to integrate piecewise-constant
quantities over B_t exactly on P1 meshes.
"""

from __future__ import annotations

import math

import numpy as np


def _segment_circle_params(a, b, r):
    """Intersection parameters t in (0,1) of segment a + t(b-a) with |x| = r."""
    d = b - a
    A = float(d @ d)
    B = 2.0 * float(a @ d)
    C = float(a @ a) - r * r
    disc = B * B - 4 * A * C
    if disc <= 0 or A == 0.0:
        return []
    s = math.sqrt(disc)
    out = [(-B - s) / (2 * A), (-B + s) / (2 * A)]
    return [t for t in out if 1e-14 < t < 1 - 1e-14]


def _tri_contrib(a, b, r):
    """Signed area of triangle(0, a, b) intersect disk(0, r)."""
    pts = [a] + [a + t * (b - a) for t in _segment_circle_params(a, b, r)] + [b]
    total = 0.0
    for p, q in zip(pts[:-1], pts[1:]):
        m = 0.5 * (p + q)
        if float(m @ m) <= r * r:
            total += 0.5 * float(p[0] * q[1] - p[1] * q[0])
        else:
            ang = math.atan2(q[1], q[0]) - math.atan2(p[1], p[0])
            while ang > math.pi:
                ang -= 2 * math.pi
            while ang < -math.pi:
                ang += 2 * math.pi
            total += 0.5 * r * r * ang
    return total


def polygon_disk_area(vertices, center, radius):
    """Exact area of a convex polygon intersect a disk."""
    v = np.asarray(vertices, float) - np.asarray(center, float)
    n = len(v)
    total = 0.0
    for i in range(n):
        total += _tri_contrib(v[i], v[(i + 1) % n], radius)
    return abs(total)


def triangle_disk_areas(points, triangles, center, radius):
    """polygon_disk_area for each mesh triangle (loop; exact per element)."""
    out = np.empty(len(triangles))
    for k, t in enumerate(triangles):
        out[k] = polygon_disk_area(points[t], center, radius)
    return out


def split_triangle_by_sign(pts, u):
    """Split a triangle into (positive-part polygon, negative-part polygon)
    by the zero line of the linear interpolant u (either may be empty)."""
    pos, neg = [], []
    for i in range(3):
        j = (i + 1) % 3
        pi, ui = pts[i], u[i]
        pj, uj = pts[j], u[j]
        (pos if ui > 0 else neg).append(pi)
        if (ui > 0) != (uj > 0):
            t = ui / (ui - uj)
            x = pi + t * (pj - pi)
            pos.append(x)
            neg.append(x)
    return (np.asarray(pos) if len(pos) >= 3 else None,
            np.asarray(neg) if len(neg) >= 3 else None)
