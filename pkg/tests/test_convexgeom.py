"""Convex geometry: normals, M_x(t), N(t,theta), Dini brackets, slices."""

import math

import numpy as np
import pytest

from acfbench import convexgeom as cg
from acfbench.errors import DegenerateRadius, EmptyGrid, NotConvex, PointNotOnBoundary


def test_ball_normal_at_origin():
    body = cg.BallBody((0.0, 1.0), 1.0)
    sn = cg.outward_normal(body, (0.0, 0.0))
    assert np.allclose(sn.normal, [0.0, -1.0], atol=1e-12)
    assert abs(np.linalg.norm(sn.normal) - 1.0) < 1e-12


def test_halfplane_normal():
    body = cg.PolytopeBody([[0.0, -1.0]], [0.0])  # x2 >= 0
    sn = cg.outward_normal(body, (0.3, 0.0))
    assert np.allclose(sn.normal, [0.0, -1.0], atol=1e-12)


def test_graph_kink_extreme_normals_support():
    body = cg.wedge_graph_body(dimension=2)
    sn = cg.outward_normal(body, (0.0, 0.0))
    exp = {tuple(np.round(v, 9)) for v in
           (np.array([1.0, -1.0]) / math.sqrt(2), np.array([-1.0, -1.0]) / math.sqrt(2))}
    got = {tuple(np.round(np.asarray(v), 9)) for v in sn.extreme_normals}
    assert got == exp
    # dense sampled verification of the supporting-plane property
    rng = np.random.default_rng(7)
    for nu in sn.extreme_normals:
        zs = rng.uniform(-0.8, 0.8, size=(400, 2))
        zs[:, 1] = np.abs(zs[:, 0]) + np.abs(zs[:, 1])  # inside the wedge
        assert np.max(zs @ np.asarray(nu)) <= 1e-10


def test_outward_normal_requires_boundary_point():
    body = cg.BallBody((0.0, 1.0), 1.0)
    with pytest.raises(PointNotOnBoundary):
        cg.outward_normal(body, (0.0, 1.0))


def test_big_m_cone_is_zero():
    cone = cg.ConeBody((0.0, 0.0), [[-1.0, -1.0], [1.0, -1.0]])
    for t in (0.1, 0.5, 2.0):
        assert cg.big_m(cone, (0.0, 0.0), t).value == 0.0


def test_big_m_halfplane_zero():
    body = cg.PolytopeBody([[0.0, -1.0]], [0.0])
    assert cg.big_m(body, (0.0, 0.0), 0.7).value == 0.0


def test_big_m_ball_closed_form():
    R = 2.0
    body = cg.BallBody((0.0, R), R)
    for t in (0.1, 0.5, 1.0, 3.9):
        m = cg.big_m(body, (0.0, 0.0), t)
        assert m.value == pytest.approx(min(t, 2 * R) ** 2 / (2 * R), rel=1e-12)


def test_big_m_graph_ball_matches_closed_form():
    R = 2.0
    body = cg.ball_graph_body(R, dimension=3)
    for t in (0.1, 0.3, 0.6):
        m = cg.big_m(body, np.zeros(3), t)
        assert m.value == pytest.approx(t * t / (2 * R), rel=2e-3)
        assert m.value <= t * t / (2 * R) + m.bound


def test_big_m_monotone_and_linear_bound():
    body = cg.power_graph_body(0.5, dimension=3)
    ts = np.geomspace(0.05, 0.8, 12)
    vals = [cg.big_m(body, np.zeros(3), t).value for t in ts]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    Lp = body.lipschitz
    assert all(v <= Lp * t + 1e-9 for v, t in zip(vals, ts))


def test_big_m_degenerate_radius():
    body = cg.BallBody((0.0, 1.0), 1.0)
    with pytest.raises(DegenerateRadius):
        cg.big_m(body, (0.0, 0.0), 0.0)


def test_n_profile_cone_zero():
    body = cg.wedge_graph_body(dimension=3)
    for t in (0.1, 0.5):
        for th in (0.3, 1.2, 2.0):
            assert abs(cg.n_profile(body, t, th)) < 1e-6


def test_n_profile_quadratic_symbolic():
    # f(r) = r^2 radially: N = (1 + 4 t^2)^{-1/2} t^2
    body = cg.power_graph_body(1.0, dimension=3)
    for t in (0.1, 0.4, 0.8):
        got = cg.n_profile(body, t, 0.7)
        assert got == pytest.approx(t * t / math.sqrt(1 + 4 * t * t), rel=1e-9)


def test_n_profile_power_dini_integrand():
    # f = r^{1+beta}: integrand N/t^2 ~ beta * t^{beta-1}, integrable
    beta = 0.5
    body = cg.power_graph_body(beta, dimension=3)
    ts = np.geomspace(1e-4, 0.5, 50)
    vals = np.array([cg.n_profile(body, t, 0.0) / t ** 2 for t in ts])
    # integrand scales like beta * t^(beta - 1): singular but integrable
    assert np.all(vals * ts ** (1.0 - beta) < 2.0 * beta)
    prof = cg.dini_profile(body, np.zeros(3), 1e-4, 0.5, num=60)
    assert prof.upper < 10.0 * body.lipschitz


def test_n_profile_sandwich():
    # M(t) <= sup_theta N(t, theta) <= M(C t); report empirical C
    body = cg.power_graph_body(0.5, dimension=3)
    for t in (0.05, 0.2):
        m_t = cg.big_m(body, np.zeros(3), t).value
        sup_n = cg.n_profile_sup(body, t, n_theta=64)
        assert sup_n >= m_t - 1e-6 - 2e-3 * m_t
        # find the smallest dyadic C with sup_n <= M(C t)
        for C in (1.0, 2.0, 4.0):
            if sup_n <= cg.big_m(body, np.zeros(3), C * t).value + 1e-9:
                break
        assert C <= 4.0


def test_dini_integral_ball_bracket():
    R, t0 = 1.0, 0.05
    body = cg.BallBody((0.0, 0.0, R), R)
    prof = cg.dini_profile(body, np.zeros(3), t0, 1.0, num=300)
    lower, upper = prof.lower, prof.upper
    exact = (1.0 - t0) / (2.0 * R)  # int t^2/(2R) / t^2 dt
    assert lower <= exact <= upper
    assert upper - lower < 0.05 * exact
    assert prof.monotone()


def test_dini_integral_cone_zero():
    cone = cg.ConeBody((0.0, 0.0), [[-1.0, -1.0], [1.0, -1.0]])
    prof = cg.dini_profile(cone, (0.0, 0.0), 1e-3, 1.0, num=40)
    assert prof.lower == 0.0 and prof.upper == 0.0


def test_dini_integral_needs_grid():
    prof = cg.DiniProfile(np.zeros(2), np.array([0.5]), np.array([0.1]), np.array([0.0]))
    with pytest.raises(EmptyGrid):
        cg.dini_integral(prof, 0.1, 1.0)


def test_dini_2d_graph_finite():
    # every 2-D convex graph satisfies the Dini condition
    body = cg.wedge_graph_body(dimension=2, slope=1.0)
    prof = cg.dini_profile(body, np.zeros(2), 1e-6, 1.0, num=80)
    assert np.isfinite(prof.upper)
    assert prof.upper <= 8.0 * body.lipschitz  # 4 C_g per ray


def test_classify_sc_cone_and_ball():
    cone = cg.ConeBody((0.0, 0.0), [[-1.0, -1.0], [1.0, -1.0]])
    assert cg.classify_sc(cone, (0.0, 0.0), 0.01, 0.3)
    R = 1.0
    body = cg.BallBody((0.0, R), R)
    # s^{-1} M = s/(2R) <= c on [t/4, 4t] iff 2t/R <= c
    c = 0.1
    t_ok = 0.9 * c * R / 2.0
    t_bad = 1.2 * c * R / 2.0
    assert cg.classify_sc(body, (0.0, 0.0), c, t_ok)
    assert not cg.classify_sc(body, (0.0, 0.0), c, t_bad)


def test_sc_measure_bound():
    R = 1.0
    c = 0.15
    for body in (cg.BallBody((0.0, R), R),
                 cg.PolytopeBody([[0.0, -1.0], [1.0, 0.0]], [0.0, 1.0]),
                 cg.wedge_graph_body(dimension=2)):
        if isinstance(body, cg.GraphBody):
            x = np.zeros(2)
        else:
            x = np.zeros(2)
        measure, bound, _ = cg.sc_complement_measure(body, x, c, 1e-3, 1.0, num=60)
        assert measure <= bound + 1e-9


def test_spherical_slice_halfspace_hemisphere():
    body = cg.PolytopeBody([[0.0, 0.0, -1.0]], [0.0])  # x3 >= 0
    for t in (0.3, 0.9):
        sl = cg.spherical_slice(body, t)
        # boundary polyline should sit on the equator
        assert np.allclose(sl.polyline[:, 2], 0.0, atol=1e-8)


def test_spherical_slice_ball_cap():
    body = cg.BallBody((0.0, 0.0, 1.0), 1.0)
    t = 0.6
    sl = cg.spherical_slice(body, t)
    # V_t = {x3 >= t/2}: boundary at polar height t/2
    assert np.allclose(sl.polyline[:, 2], t / 2.0, atol=1e-7)
    assert np.allclose(np.linalg.norm(sl.polyline, axis=1), 1.0, atol=1e-12)


def test_spherical_slice_nesting():
    body = cg.BallBody((0.0, 0.0, 1.0), 1.0)
    s1 = cg.spherical_slice(body, 0.25)
    s2 = cg.spherical_slice(body, 0.5)
    # V_{0.5} subset V_{0.25}: every direction of the smaller slice's boundary
    # is inside the larger slice
    for w in s2.polyline:
        assert s1.contains_direction(body, w)


def test_spherical_slice_2d_arc():
    body = cg.BallBody((0.0, 1.0), 1.0)
    sl = cg.spherical_slice(body, 0.8)
    lo, hi = sl.interval
    # arc {theta: sin(theta) >= t/2}
    width_exact = math.pi - 2 * math.asin(0.4)
    assert (hi - lo) == pytest.approx(width_exact, abs=1e-6)


def test_convexify_cone_delta_zero():
    body = cg.wedge_graph_body(dimension=3)
    res = cg.convexify_slice(body, 0.4, n_phi=128)
    assert res.delta == pytest.approx(0.0, abs=1e-9)
    assert res.hausdorff_gap <= 1e-6
    assert res.min_curvature >= -1e-4


def test_convexify_ball_delta():
    # closed form for the spherical cap: the rescaled graph g_t = f(t x')/t
    # gives  sup r d_r g_t - g_t  =  R(R - sqrt(R^2 - t^2)) / (t sqrt(R^2 - t^2))
    # = t/(2R) * (1 + O(t^2))
    R = 2.0
    body = cg.ball_graph_body(R, dimension=3)
    for t in (0.1, 0.2):
        res = cg.convexify_slice(body, t, n_phi=64)
        exact = R * (R - math.sqrt(R * R - t * t)) / (t * math.sqrt(R * R - t * t))
        assert res.delta == pytest.approx(exact, rel=0.02)
        assert res.delta == pytest.approx(t / (2 * R), rel=0.05)
        assert res.min_curvature >= -1e-6
        assert np.all(res.shifted_boundary <= res.slice_boundary + 1e-12)


def test_convexify_wedge_strictly_inside():
    body = cg.GraphBody(lambda xp: abs(float(np.atleast_1d(xp)[0])) +
                        0.3 * float(np.atleast_1d(xp)[0]) ** 2 +
                        0.3 * float(np.atleast_1d(xp)[1]) ** 2,
                        lipschitz=1.8, dimension=3)
    res = cg.convexify_slice(body, 0.3, n_phi=128)
    assert res.delta > 0
    assert res.min_curvature >= -1e-3
    assert res.area_gap >= 0.0


def test_convex_1d_dini_linear_zero():
    assert cg.convex_1d_dini_bound(lambda t: t, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_convex_1d_dini_quadratic():
    # g = t^2: h = t^2/2, integral = 1/2 <= 4 * 2
    val = cg.convex_1d_dini_bound(lambda t: t * t, 2.0)
    assert val == pytest.approx(0.5, rel=1e-3)
    assert val <= 8.0


def test_convex_1d_dini_rejects_nonconvex():
    with pytest.raises(NotConvex):
        cg.convex_1d_dini_bound(lambda t: math.sqrt(t), 10.0)


def test_convex_1d_dini_random_piecewise_linear():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        k = rng.integers(2, 6)
        knots = np.sort(rng.uniform(0.05, 0.95, size=k))
        knots = np.concatenate([[0.0], knots, [1.0]])
        slopes = np.cumsum(rng.uniform(0.0, 1.0, size=len(knots) - 1))
        vals = np.concatenate([[0.0], np.cumsum(slopes * np.diff(knots))])
        cg_lip = slopes[-1]

        def g(t, knots=knots, vals=vals):
            return float(np.interp(t, knots, vals))

        quad = cg.convex_1d_dini_bound(g, cg_lip, n_levels=24, check_convex=False)
        oracle = cg.dyadic_telescoping_bound(g, n_levels=24)
        assert quad <= oracle + 1e-8 + 1e-6 * abs(oracle)
        assert quad <= 4.0 * cg_lip + 1e-9


def test_average_dini_bounded_for_graph_bodies():
    bodies = [cg.power_graph_body(0.5, dimension=3),
              cg.wedge_graph_body(dimension=3),
              cg.ball_graph_body(2.0, dimension=3)]
    for body in bodies:
        lo, hi = cg.average_dini_bracket(body, 1e-4, 0.9, n_theta=32, n_t=120)
        assert lo <= hi
        assert hi <= 4.0 * 2 * math.pi * body.lipschitz


def test_midpoint_convexity_of_test_bodies():
    rng = np.random.default_rng(3)
    for body in (cg.power_graph_body(0.7, dimension=3), cg.ball_graph_body(3.0, 3)):
        for _ in range(200):
            a = rng.uniform(-0.5, 0.5, size=2)
            b = rng.uniform(-0.5, 0.5, size=2)
            fa, fb = body._fval(a), body._fval(b)
            fm = body._fval(0.5 * (a + b))
            assert fm <= 0.5 * (fa + fb) + 1e-12
