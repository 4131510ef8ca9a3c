"""Hull construction, face lattice, volumes, and the area measure."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixvol.errors import DegenerateInputError, InputError
from mixvol.generators import cube, diamond, segment, simplex
from mixvol.polytope import (Polytope, area_measure_atoms, hull_from_points,
                             lattice_report, minkowski_sum,
                             polytope_from_json, polytope_to_json,
                             scaled_sum, sum_volume)
from mixvol.util import kappa, multinomial, random_rotation


def box(sides) -> Polytope:
    sides = np.asarray(sides, dtype=float)
    d = len(sides)
    corners = np.array([[(i >> b) & 1 for b in range(d)]
                        for i in range(2 ** d)], dtype=float)
    return Polytope.hull(corners * sides)


def test_generator_volumes():
    assert cube(2).volume() == pytest.approx(1.0)
    assert cube(3).volume() == pytest.approx(1.0)
    assert diamond(2).volume() == pytest.approx(2.0)
    assert diamond(3).volume() == pytest.approx(4.0 / 3.0)
    assert simplex(2).volume() == pytest.approx(0.5)
    assert simplex(3).volume() == pytest.approx(1.0 / 6.0)


def test_cube_face_counts():
    c = cube(3)
    assert len(c.faces(0)) == 8
    assert len(c.faces(1)) == 12
    assert len(c.faces(2)) == 6
    assert all(f.measure == pytest.approx(1.0) for f in c.faces(1))
    assert all(f.measure == pytest.approx(1.0) for f in c.faces(2))


def test_face_frames_and_cones_are_consistent():
    for p in (cube(3), diamond(3), simplex(3)):
        for j in (0, 1, 2):
            for f in p.faces(j):
                assert f.dim == j
                assert f.frame.dim == j
                cone = f.normal_cone
                assert cone.dim == p.dim - j
                # the cone span is the orthogonal complement of the face span
                if j:
                    prod = cone.span.T @ f.frame.frame
                    np.testing.assert_allclose(prod, 0.0, atol=1e-9)


def test_normal_cone_supports_face():
    p = simplex(3)
    for f in p.faces(2):
        u = f.normal_cone.generators.sum(axis=0)
        vals = p.vertices @ u
        on = vals[list(f.vertex_ids)]
        assert np.max(vals) == pytest.approx(np.max(on))


def test_minkowski_sum_square_diamond_area():
    s = minkowski_sum(cube(2), diamond(2))
    # 1 + 2*2 + 2: the middle term is twice the mixed area
    assert s.volume() == pytest.approx(7.0)


def test_scaled_sum_matches_direct_scaling():
    s = scaled_sum([2.0, 0.5], [cube(2), diamond(2)])
    t = minkowski_sum(cube(2).transform(2.0 * np.eye(2)),
                      diamond(2).transform(0.5 * np.eye(2)))
    assert s.volume() == pytest.approx(t.volume())


def test_sum_volume_is_polynomial_in_scales():
    # vol(a K + b L) = a^2 vol K + 2 a b V(K, L) + b^2 vol L in the plane
    K, L = cube(2), diamond(2)
    for a, b in ((1.0, 1.0), (2.0, 1.0), (0.5, 1.5)):
        want = a * a * 1.0 + 2.0 * a * b * 2.0 + b * b * 2.0
        assert sum_volume([a, b], [K, L]) == pytest.approx(want)


def test_box_intrinsic_volumes():
    b2 = box((2.0, 3.0))
    assert b2.intrinsic_volume(2) == pytest.approx(6.0)
    assert b2.intrinsic_volume(1) == pytest.approx(5.0)     # semiperimeter
    b3 = box((1.0, 2.0, 3.0))
    assert b3.intrinsic_volume(3) == pytest.approx(6.0)
    assert b3.intrinsic_volume(2) == pytest.approx(11.0)    # ab+bc+ca
    assert b3.intrinsic_volume(1) == pytest.approx(6.0)     # a+b+c


def test_intrinsic_volume_zero_is_euler():
    assert cube(2).intrinsic_volume(0, rng=0) == pytest.approx(1.0, abs=0.02)


def test_segment_is_lower_dimensional():
    s = segment(3, 1)
    assert s.dim == 3
    assert s.intrinsic_dim == 1
    assert s.volume() == 0.0
    assert s.intrinsic_volume(1) == pytest.approx(1.0)
    with pytest.raises(InputError):
        s.halfspaces()


def test_hull_rejects_degenerate_without_flag():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(DegenerateInputError) as exc:
        Polytope.hull(pts)
    assert exc.value.intrinsic_dim == 1
    p = Polytope.hull(pts, allow_degenerate=True)
    assert p.intrinsic_dim == 1


def test_translation_invariance():
    p = cube(3)
    q = p.translate([5.0, -1.0, 2.5])
    assert q.volume() == pytest.approx(p.volume())
    assert len(q.faces(1)) == len(p.faces(1))
    assert q.intrinsic_volume(1) == pytest.approx(p.intrinsic_volume(1))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_rotation_preserves_volume_and_lattice(seed):
    rng = np.random.default_rng(seed)
    p = diamond(3)
    q = p.transform(random_rotation(3, rng))
    assert q.volume() == pytest.approx(p.volume())
    assert len(q.faces(2)) == len(p.faces(2))
    assert q.intrinsic_volume(1) == pytest.approx(p.intrinsic_volume(1))


def _rows_sorted(a):
    a = np.asarray(a)
    return a[np.lexsort(a.T)]


def test_negate_reflects_vertices():
    p = simplex(2)
    q = p.negate()
    assert q.volume() == pytest.approx(p.volume())
    np.testing.assert_allclose(_rows_sorted(-q.vertices),
                               _rows_sorted(p.vertices), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_hull_volume_matches_scipy(seed):
    from scipy.spatial import ConvexHull

    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((12, 3))
    p = hull_from_points(pts)
    assert p.volume() == pytest.approx(ConvexHull(pts).volume)


def test_json_roundtrip():
    p = diamond(3)
    q = polytope_from_json(polytope_to_json(p))
    assert q.volume() == pytest.approx(p.volume())
    assert q.name == p.name
    with pytest.raises(InputError):
        polytope_from_json("{not json")
    with pytest.raises(InputError):
        polytope_from_json(json.dumps({"name": "x", "dim": 2}))


def test_lattice_report_shape():
    rep = lattice_report(cube(2))
    assert rep["n_vertices"] == 4
    assert len(rep["faces"]["1"]) == 4


def test_area_measure_total_mass():
    # total mass = constant * V_n
    am = area_measure_atoms(cube(2), 1)
    assert am.constant == pytest.approx(2.0 * kappa(1) / multinomial(2, (1, 1)))
    got = am.total_mass(rng=0)
    assert got.value == pytest.approx(am.constant * 2.0, abs=1e-9)
    am3 = area_measure_atoms(cube(3), 1)
    got3 = am3.total_mass(rng=0)
    assert abs(got3.value - am3.constant * 3.0) <= 3.0 * got3.std_error + 1e-9
