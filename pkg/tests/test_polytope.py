"""Facet-exact polytope geometry."""

from fractions import Fraction

import numpy as np
import pytest

from toricray._exact import SaturationError, det_exact
from toricray.polytope import (DelzantError, PolytopeError, ell_values,
                               face_frame, integral_points, make_polytope,
                               parse_polytope)


def segment(N=2):
    return make_polytope([[1], [-1]], [0, -N])


def simplex(N=3):
    return make_polytope([[1, 0], [0, 1], [-1, -1]], [0, 0, -N])


def test_parse_segment():
    P = parse_polytope({"dim": 1, "normals": [[1], [-1]], "offsets": ["0", "-2"]})
    assert set(P.vertices) == {(Fraction(0),), (Fraction(2),)}


def test_parse_corrected_segment():
    P = parse_polytope({"dim": 1, "normals": [[1], [-1]],
                        "offsets": ["-1/2", "-5/2"], "corrected": True})
    assert set(P.vertices) == {(Fraction(-1, 2),), (Fraction(5, 2),)}


def test_corrected_flag_requires_half_integers():
    with pytest.raises(PolytopeError):
        make_polytope([[1], [-1]], [0, -2], corrected=True)


def test_simplex_vertices():
    P = simplex(3)
    assert set(P.vertices) == {(Fraction(0), Fraction(0)),
                               (Fraction(3), Fraction(0)),
                               (Fraction(0), Fraction(3))}


def test_non_primitive_normal_rejected():
    with pytest.raises(PolytopeError):
        make_polytope([[2], [-1]], [0, -2])


def test_unbounded_and_empty_rejected():
    with pytest.raises(PolytopeError):
        make_polytope([[1], [1]], [0, -1])
    with pytest.raises(PolytopeError):
        make_polytope([[1], [-1]], [2, -1])


def test_delzant_failure_reports_vertex():
    with pytest.raises(DelzantError) as err:
        make_polytope([[1, 0], [0, 1], [-1, -2]], [0, 0, -2])
    assert "determinant" in str(err.value)


def test_ell_values_examples():
    P = segment()
    assert np.allclose(ell_values(P, np.array([1.0])), [1.0, 1.0])
    assert np.allclose(ell_values(P, np.array([0.0])), [0.0, 2.0])
    assert np.allclose(ell_values(simplex(), np.array([1.0, 1.0])),
                       [1.0, 1.0, 1.0])


def test_ell_values_affine_property():
    rng = np.random.default_rng(0)
    P = simplex()
    for _ in range(50):
        x, y = rng.uniform(0, 1, size=(2, 2))
        a = rng.uniform()
        lhs = ell_values(P, a * x + (1 - a) * y)
        rhs = a * ell_values(P, x) + (1 - a) * ell_values(P, y)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_integral_points_counts():
    assert integral_points(segment(2)) == [(0,), (1,), (2,)]
    Pc = make_polytope([[1], [-1]], ["-1/2", "-5/2"], corrected=True)
    assert integral_points(Pc) == [(0,), (1,), (2,)]
    for N in (1, 2, 3, 4):
        assert len(integral_points(simplex(N))) == (N + 1) * (N + 2) // 2


def test_integral_points_match_float_scan():
    P = simplex(3)
    lo, hi = P.bbox()
    brute = []
    for i in range(int(np.floor(lo[0])), int(np.ceil(hi[0])) + 1):
        for j in range(int(np.floor(lo[1])), int(np.ceil(hi[1])) + 1):
            if np.all(P.ell(np.array([float(i), float(j)])) >= -1e-12):
                brute.append((i, j))
    assert sorted(brute) == P.integral_points()


def test_face_frame_axis_wall():
    fr = face_frame(simplex(), [[1, 0]], [1])
    assert abs(det_exact(fr.matrix)) == 1
    x = np.array([1.0, 0.7])
    xt = fr.to_frame(x)
    assert xt[-1] == pytest.approx(1.0)  # transverse coordinate is x1
    assert np.allclose(fr.from_frame(xt), x)


def test_face_frame_diagonal_wall():
    fr = face_frame(simplex(), [[1, 1]], [1])
    assert abs(det_exact(fr.matrix)) == 1
    for x in ([0.3, 0.7], [0.9, 0.1]):
        assert fr.to_frame(np.array(x))[-1] == pytest.approx(sum(x))


def test_face_frame_rejects_non_primitive_and_non_saturated():
    with pytest.raises(PolytopeError):
        face_frame(simplex(), [[2, 0]], [1])
    with pytest.raises(SaturationError):
        face_frame(simplex(), [[1, 1], [1, -1]], [1, 0])


def test_volume_and_diameter():
    assert segment(2).volume_exact() == 2
    assert simplex(3).volume_exact() == Fraction(9, 2)
    assert simplex(3).diameter() == pytest.approx(3 * np.sqrt(2))


def test_delzant_holds_at_every_vertex():
    for P in (segment(), simplex(1), simplex(4)):
        for v in P.vertices:
            active = [j for j in range(len(P.normals))
                      if P.ell_exact(v, j) == 0]
            assert len(active) == P.dim
            assert abs(det_exact([P.normals[j] for j in active])) == 1
