"""Nice smoothings: exactness, rank structure, family verification."""

import numpy as np
import pytest

from toricray.generators import PLConvex
from toricray.polytope import make_polytope
from toricray.smoothing import (SmoothingError, build_nice_smoothing,
                                default_check_samples, verify_nice_family)
from toricray.testconfig import decompose, thickening_membership


def cp2(N=3):
    return make_polytope([[1, 0], [0, 1], [-1, -1]], [0, 0, -N])


def wall_setup():
    P = cp2()
    f = PLConvex([((0, 0), 0), ((1, 0), -1)])
    return P, f, decompose(f, P)


def corner_setup():
    P = cp2()
    f = PLConvex([((0, 0), 0), ((1, 0), -1), ((0, 1), -1)])
    return P, f, decompose(f, P)


def _rank(H):
    eigs = np.linalg.eigvalsh(H)
    return int(np.sum(eigs > 1e-8 * max(eigs.max(), 1.0)))


def test_single_wall_depends_on_transverse_only():
    P, f, dec = wall_setup()
    gen = build_nice_smoothing(f, P, dec, 0.1)
    for x2 in (0.3, 0.9, 1.7):
        line = np.array([[1.0 + t, x2] for t in (-0.05, 0.0, 0.06)])
        ref = gen.value(np.array([[1.0 - 0.05, 0.5],
                                  [1.0, 0.5], [1.0 + 0.06, 0.5]]))
        assert np.max(np.abs(gen.value(line) - ref)) < 1e-14


def test_equals_f_outside_slab_exactly():
    P, f, dec = wall_setup()
    gen = build_nice_smoothing(f, P, dec, 0.1)
    rng = np.random.default_rng(10)
    pts = rng.uniform(0, 3, size=(500, 2))
    pts = pts[P.contains(pts, tol=-1e-9)]
    outside = np.abs(pts[:, 0] - 1.0) >= 0.1
    assert np.all(gen.value(pts[outside]) == f.value(pts[outside]))


def test_wall_rank_and_transverse_positivity():
    P, f, dec = wall_setup()
    gen = build_nice_smoothing(f, P, dec, 0.1)
    for x2 in (0.2, 1.0, 1.8):
        H = gen.hessian(np.array([1.0, x2]))
        assert _rank(H) == 1
        assert H[0, 0] > 1.0 and abs(H[0, 1]) < 1e-14


def test_derivatives_match_finite_differences():
    P, f, dec = corner_setup()
    gen = build_nice_smoothing(f, P, dec, 0.05)
    h = 1e-6
    for p in ([1.01, 0.78], [0.99, 0.99], [1.24, 1.21], [1.0, 1.02]):
        x0 = np.array(p)
        fd_g = np.array([(gen.value(x0 + h * e) - gen.value(x0 - h * e))
                         / (2 * h) for e in np.eye(2)])
        assert np.max(np.abs(fd_g - gen.gradient(x0))) < 1e-6
        fd_h = np.vstack([(gen.gradient(x0 + h * e) - gen.gradient(x0 - h * e))
                          / (2 * h) for e in np.eye(2)])
        assert np.max(np.abs(fd_h - gen.hessian(x0))) < 1e-5


def test_corner_rank_structure():
    P, f, dec = corner_setup()
    gen = build_nice_smoothing(f, P, dec, 0.05)
    assert _rank(gen.hessian(np.array([1.0, 1.0]))) == 2
    assert _rank(gen.hessian(np.array([1.0, 0.5]))) == 1
    assert _rank(gen.hessian(np.array([0.5, 1.0]))) == 1
    assert _rank(gen.hessian(np.array([1.3, 1.3]))) == 1
    assert np.all(gen.hessian(np.array([0.5, 0.5])) == 0.0)


def test_corner_convexity_sampled():
    P, f, dec = corner_setup()
    gen = build_nice_smoothing(f, P, dec, 0.05)
    samples = default_check_samples(dec, 0.05)
    eigs = np.linalg.eigvalsh(gen.hessian(samples))
    assert eigs.min() >= -1e-10


def test_line_mollifier_against_quadrature_oracle():
    # closed-form directional convolution vs direct numerical convolution
    from scipy.integrate import quad
    from toricray.kernels import get_kernel
    from toricray.smoothing import LineMollifier
    f = PLConvex([((0, 0), 0), ((1, 0), -1), ((0, 1), -1),
                  ((2, 1), "-7/2")])
    kern = get_kernel("cosine")
    w = np.array([2.0, 1.0])
    delta = 0.08
    moll = LineMollifier(f, w, delta, kern)
    rng = np.random.default_rng(13)
    for _ in range(12):
        x = rng.uniform(0.5, 2.0, size=2)

        def integrand(y):
            return float(kern.density(np.array([y / delta]))[0]) / delta * \
                float(f.value(x - y * w))

        oracle, _ = quad(integrand, -delta, delta, limit=200)
        val, grad, hess = moll.eval_point(x)
        assert val == pytest.approx(oracle, abs=1e-9)
        h = 1e-6
        fd = [(moll.eval_point(x + h * e)[0] - moll.eval_point(x - h * e)[0])
              / (2 * h) for e in np.eye(2)]
        assert np.max(np.abs(np.array(fd) - grad)) < 1e-6
        fd_h = np.vstack([
            (moll.eval_point(x + h * e)[1] - moll.eval_point(x - h * e)[1])
            / (2 * h) for e in np.eye(2)])
        assert np.max(np.abs(fd_h - hess)) < 1e-5


def test_iterated_mollifier_against_double_quadrature():
    from scipy.integrate import dblquad
    from toricray.kernels import get_kernel
    from toricray.smoothing import IteratedMollifier
    f = PLConvex([((0, 0), 0), ((1, 0), -1), ((0, 1), -1)])
    kern = get_kernel("cosine")
    dirs = [np.array([2.0, 1.0]), np.array([0.0, 1.0])]
    radii = [0.06, 0.06]
    moll = IteratedMollifier(f, dirs, radii, kern)
    x = np.array([1.02, 0.97])

    def integrand(y2, y1):
        p = x - y1 * dirs[0] - y2 * dirs[1]
        th1 = float(kern.density(np.array([y1 / radii[0]]))[0]) / radii[0]
        th2 = float(kern.density(np.array([y2 / radii[1]]))[0]) / radii[1]
        return th1 * th2 * float(f.value(p))

    oracle, _ = dblquad(integrand, -radii[0], radii[0],
                        lambda _: -radii[1], lambda _: radii[1],
                        epsabs=1e-12)
    val, grad, hess = moll.eval_point(x)
    assert val == pytest.approx(oracle, abs=1e-8)
    h = 1e-5
    fd = [(moll.eval_point(x + h * e)[0] - moll.eval_point(x - h * e)[0])
          / (2 * h) for e in np.eye(2)]
    assert np.max(np.abs(np.array(fd) - grad)) < 1e-6
    fd_h = np.vstack([
        (moll.eval_point(x + h * e)[1] - moll.eval_point(x - h * e)[1])
        / (2 * h) for e in np.eye(2)])
    assert np.max(np.abs(fd_h - hess)) < 1e-5


def test_family_passes_and_nests():
    P, f, dec = wall_setup()
    fam = {e: build_nice_smoothing(f, P, dec, e) for e in (0.05, 0.1, 0.2)}
    rep = verify_nice_family(f, fam)
    assert rep.passed, rep.as_text()
    # generators agree (with f) outside the larger thickening
    rng = np.random.default_rng(11)
    pts = rng.uniform(0, 3, size=(300, 2))
    pts = pts[P.contains(pts, tol=-1e-9)]
    outside = np.array([not thickening_membership(dec, 0.2, p)[0]
                        for p in pts])
    v_small = fam[0.05].value(pts[outside])
    v_big = fam[0.2].value(pts[outside])
    assert np.all(v_small == v_big)


def test_strict_control_fails_only_rank_condition():
    P, f, dec = wall_setup()
    fam = {e: build_nice_smoothing(f, P, dec, e, variant="strict")
           for e in (0.05, 0.1, 0.2)}
    rep = verify_nice_family(f, fam)
    assert not rep.passed
    assert not rep.conditions["e"].passed
    for key in "abcd":
        assert rep.conditions[key].passed, rep.as_text()


def test_strict_needs_parallel_direction():
    P = make_polytope([[1], [-1]], [0, -2])
    f = PLConvex([((0,), 0), ((1,), -1)])
    dec = decompose(f, P)
    with pytest.raises((SmoothingError, NotImplementedError)):
        build_nice_smoothing(f, P, dec, 0.1, variant="strict")


def test_corner_family_verification():
    P, f, dec = corner_setup()
    fam = {e: build_nice_smoothing(f, P, dec, e) for e in (0.02, 0.04, 0.06)}
    rep = verify_nice_family(f, fam)
    assert rep.passed, rep.as_text()


def test_one_dimensional_pl_smoothing():
    P = make_polytope([[1], [-1]], [0, -2])
    f = PLConvex([((0,), 0), ((1,), -1)])
    dec = decompose(f, P)
    gen = build_nice_smoothing(f, P, dec, 0.1)
    xs = np.array([[0.5], [0.95], [1.0], [1.05], [1.5]])
    vals = gen.value(xs)
    assert vals[0] == 0.0 and vals[-1] == 0.5
    assert vals[2] > 0.0
    assert gen.hessian(np.array([1.0]))[0, 0] > 0


def test_affine_pl_rejected():
    P = cp2()
    f = PLConvex([((1, 0), 0)])
    dec = decompose(f, P)
    with pytest.raises(SmoothingError):
        build_nice_smoothing(f, P, dec, 0.1)


def test_eps_guard_for_disjoint_walls():
    # two parallel walls 1 apart: eps = 0.3 collides, eps = 0.1 is fine
    P = make_polytope([[1, 0], [0, 1], [-1, -1]], [0, 0, -4])
    f = PLConvex([((0, 0), 0), ((1, 0), -1), ((2, 0), -3)])
    dec = decompose(f, P)
    assert len(dec.faces_of_codim(1)) == 2
    with pytest.raises(SmoothingError):
        build_nice_smoothing(f, P, dec, 0.3)
    gen = build_nice_smoothing(f, P, dec, 0.1)
    assert gen.value(np.array([0.5, 0.5])) == f.value(np.array([0.5, 0.5]))
