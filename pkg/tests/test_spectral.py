"""Arc eigenvalues, exponents, and the S^2 mixed FEM solver."""

import math

import numpy as np
import pytest

from acfbench import spectral as sp
from acfbench.errors import (
    BadNesting,
    NegativeEigenvalue,
    NoDirichletPart,
    NotConvexDomain,
)
from acfbench.sphmesh import SphericalPolygon


# -- arcs and exponents -------------------------------------------------------

def test_arc_dd_half_circle():
    r = sp.arc_eigen(math.pi, "DD")
    assert r.eigenvalue == pytest.approx(1.0)
    assert r.exponent == pytest.approx(1.0)


def test_arc_dn_quarter_and_half():
    r = sp.arc_eigen(math.pi / 2, "DN")
    assert r.eigenvalue == pytest.approx(1.0)
    assert r.exponent == pytest.approx(1.0)
    r = sp.arc_eigen(math.pi, "DN")
    assert r.eigenvalue == pytest.approx(0.25)
    assert r.exponent == pytest.approx(0.5)


def test_arc_needs_dirichlet():
    with pytest.raises(NoDirichletPart):
        sp.arc_eigen(1.0, "NN")


def test_char_exponent_basics():
    assert sp.char_exponent(2.0, 3) == pytest.approx(1.0)
    assert sp.char_exponent(1.0, 2) == pytest.approx(1.0)
    assert sp.char_exponent(0.0, 3) == 0.0
    with pytest.raises(NegativeEigenvalue):
        sp.char_exponent(-1.0, 3)


def test_char_exponent_monotone_in_lambda():
    lams = np.linspace(0, 10, 30)
    alphas = [sp.char_exponent(l, 3) for l in lams]
    assert all(b > a for a, b in zip(alphas, alphas[1:]))


def test_beta_exponent_conventions():
    # A = inf -> 0, A = 0 -> alpha, nonincreasing in A
    assert sp.beta_exponent(2.0, math.inf, 3) == 0.0
    assert sp.beta_exponent(2.0, 0.0, 3) == pytest.approx(sp.char_exponent(2.0, 3))
    As = np.geomspace(1e-4, 1e4, 40)
    betas = [sp.beta_exponent(2.0, A, 3) for A in As]
    assert all(b <= a + 1e-14 for a, b in zip(betas, betas[1:]))


def test_beta_exponent_n2_independent_of_A():
    for A in (0.0, 0.5, 7.0, 1e6):
        assert sp.beta_exponent(1.44, A, 2) == pytest.approx(1.2)


def test_alpha_beta_gap_linear_in_A():
    # |alpha - beta| <= C A with one global C over a grid
    C = 0.0
    for lam in (0.5, 2.0, 6.0):
        alpha = sp.char_exponent(lam, 3)
        for A in np.geomspace(1e-6, 10.0, 30):
            beta = sp.beta_exponent(lam, A, 3)
            assert beta <= alpha + 1e-14
            C = max(C, (alpha - beta) / A)
    assert np.isfinite(C)
    # consistency: the constant does not explode on a refined grid
    C2 = 0.0
    for lam in (0.5, 2.0, 6.0):
        alpha = sp.char_exponent(lam, 3)
        for A in np.geomspace(1e-8, 10.0, 90):
            C2 = max(C2, (alpha - sp.beta_exponent(lam, A, 3)) / A)
    assert C2 <= 1.05 * C + 1e-9


def test_arc_exponent_increasing_in_inverse_length():
    Ls = np.linspace(0.4, 2 * math.pi, 25)[::-1]  # decreasing L
    alphas = [sp.arc_eigen(L, "DD").exponent for L in Ls]
    assert all(b > a for a, b in zip(alphas, alphas[1:]))


# -- FEM on S^2 ---------------------------------------------------------------

def test_fem_requires_dirichlet_flag():
    dom = sp.SphereDomain.build([[0, 0, 1]], dirichlet=[False])
    with pytest.raises(NoDirichletPart):
        sp.fem_mixed_eigen(dom, 0.1)


def test_fem_quarter_sphere_hemisphere_anchor():
    dom = sp.SphereDomain.build([[0, 0, 1], [1, 0, 0]], dirichlet=[False, True])
    lam, eps, (r1, r2) = sp.richardson_eigen(dom, 0.08)
    assert lam == pytest.approx(2.0, rel=5e-3)
    assert r1.eigenvalue >= r2.eigenvalue - 1e-9  # monotone from above for P1
    r1.check_invariants()
    r2.check_invariants()
    vec = r2.eigenvector
    assert vec.min() >= -1e-8 * vec.max()  # nonnegative after sign fix


def test_fem_convergence_order():
    dom = sp.SphereDomain.build([[0, 0, 1], [1, 0, 0]], dirichlet=[False, True])
    errs = []
    for h in (0.16, 0.08, 0.04):
        r = sp.fem_mixed_eigen(dom, h)
        errs.append(abs(r.eigenvalue - 2.0))
    order1 = math.log(errs[0] / errs[1]) / math.log(2.0)
    order2 = math.log(errs[1] / errs[2]) / math.log(2.0)
    assert 0.5 * (order1 + order2) >= 1.8


def test_fem_full_dirichlet_cap_vs_shooting_oracle():
    # cap of polar radius pi/3: Dirichlet circle at offset cos(pi/3) = 0.5
    psi = math.pi / 3.0
    dom = sp.SphereDomain.build([[0, 0, 1]], [math.cos(psi)], [True])
    lam, eps, _ = sp.richardson_eigen(dom, 0.05)
    oracle = sp.cap_dirichlet_eigenvalue_oracle(psi)
    assert lam == pytest.approx(oracle, rel=5e-3)


def test_fem_hemisphere_dirichlet_equator():
    # full sphere split into hemispheres along the equator: each gives 2
    dom = sp.SphereDomain.build([[0, 0, 1]], [0.0], [True])
    lam, eps, _ = sp.richardson_eigen(dom, 0.08)
    assert lam == pytest.approx(2.0, rel=5e-3)


def test_fem_cap_monotonicity_in_area():
    # shrinking Dirichlet caps: eigenvalue increases as the area decreases
    lams = []
    for off in (0.0, 0.3, 0.6):
        dom = sp.SphereDomain.build([[0, 0, 1]], [off], [True])
        lams.append(sp.fem_mixed_eigen(dom, 0.07).eigenvalue)
    assert lams[0] < lams[1] < lams[2]


# -- FH sum checks -------------------------------------------------------------

def test_fh_hemisphere_meridian_equality():
    hemi = SphericalPolygon.from_halfspaces([[0, 0, 1]])
    chk = sp.fh_sum_check(hemi, [1, 0, 0], h=0.08)
    assert chk.alpha_sum == pytest.approx(2.0, abs=5e-3)
    assert chk.passed


def test_fh_cap_split_strict():
    # cap of radius pi/3 split by a diameter: no antipodal boundary points,
    # so the sum should be strictly above 2
    cap = SphericalPolygon.from_halfspaces([[0, 0, 1]], [math.cos(math.pi / 3)])
    chk = sp.fh_sum_check(cap, [1, 0, 0], h=0.06)
    assert chk.alpha_sum > 2.2
    assert chk.passed


def test_fh_tiny_plus_side():
    # W+ tiny -> large exponent -> sum far above 2
    hemi = SphericalPolygon.from_halfspaces([[0, 0, 1], [1, 0, 0]])
    # move the cut close to one edge: plane nearly parallel to x1 = 0
    m = np.array([math.cos(0.12), 0.0, -math.sin(0.12)])
    chk = sp.fh_sum_check(hemi, m, h=0.07)
    assert chk.alpha_sum > 2.5


def test_fh_random_small_suite():
    rng = np.random.default_rng(2024)
    for _ in range(10):
        reg = sp.random_convex_region(rng)
        m = sp.random_partition_normal(rng, reg)
        chk = sp.fh_sum_check(reg, m, h=0.1)
        assert chk.passed, f"FH violated: {chk}"


def test_fh_rejects_nonconvex():
    with pytest.raises(NotConvexDomain):
        SphericalPolygon.from_halfspaces([[0, 0, 1]], [-0.3])


# -- domain perturbation --------------------------------------------------------

def test_perturbation_identity():
    ratio, c = sp.eigen_domain_perturbation_arc(1.0, 0.0)
    assert ratio == pytest.approx(1.0)


def test_perturbation_arc_linear():
    L = 1.0
    for eps in (0.01, 0.02):
        ratio, c = sp.eigen_domain_perturbation_arc(L, eps, bc="DN")
        assert ratio == pytest.approx((L / (L - eps)) ** 2, rel=1e-12)
        assert c == pytest.approx(2.0 / L, rel=0.05)


def test_perturbation_arc_bad_nesting():
    with pytest.raises(BadNesting):
        sp.eigen_domain_perturbation_arc(1.0, -0.1)


def test_perturbation_caps():
    ratio, c_emp, vol = sp.eigen_domain_perturbation_caps(0.0, 0.02, h=0.08)
    assert ratio >= 1.0
    assert vol == pytest.approx(0.02 * 2 * math.pi, rel=1e-2)
    assert c_emp <= 1.0 / (0.01 * 4 * math.pi) * 0.01 * 40  # finite, sane scale
    # refinement stability: same ratio at a finer mesh within 1%
    ratio2, _, _ = sp.eigen_domain_perturbation_caps(0.0, 0.02, h=0.04)
    assert ratio2 == pytest.approx(ratio, rel=1e-2)
