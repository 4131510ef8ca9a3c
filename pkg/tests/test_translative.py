"""Translative integrals: cone-quadrature functionals, the sampled
translation integral, and the scaling decomposition.

Hand-computed anchors for the unit square Q and the diamond D = conv{+-e_i}:
vol(Q + (-D)) = 7, so the j=0 translation integral of the pair is 7; the
j=1 integral for Q against itself is 4 (perimeter term); the curvature
functional V_{1,1}(Q,D) = 4 pairs each Q edge with the two non-parallel
D normals.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixvol.errors import DivergenceError, EstimationError, InputError
from mixvol.generators import cube, diamond, rotated_cube, segment
from mixvol.translative import (TranslativeTable, curvature_mixed_functional,
                                decompose_homogeneous, duality_check,
                                translative_integral_mc)


def test_curvature_square_diamond():
    assert curvature_mixed_functional([cube(2), diamond(2)], (1, 1)) == \
        pytest.approx(4.0, abs=1e-10)


def test_curvature_square_square():
    # parallel edge pairs drop out by the bracket; the four perpendicular
    # pairs each contribute 1/2
    assert curvature_mixed_functional([cube(2), cube(2)], (1, 1)) == \
        pytest.approx(2.0, abs=1e-10)


def test_curvature_segments():
    v = curvature_mixed_functional([segment(2, 0), segment(2, 1)], (1, 1))
    assert v == pytest.approx(1.0, abs=1e-10)


def test_curvature_swap_symmetry():
    K, L = cube(2), diamond(2)
    a = curvature_mixed_functional([K, L], (1, 1))
    b = curvature_mixed_functional([L, K], (1, 1))
    assert a == pytest.approx(b, abs=1e-10)


def test_curvature_homogeneity():
    K, L = cube(2), diamond(2)
    base = curvature_mixed_functional([K, L], (1, 1))
    scaled = curvature_mixed_functional(
        [K.transform(2.0 * np.eye(2)), L], (1, 1))
    assert scaled == pytest.approx(2.0 * base, abs=1e-9)


def test_curvature_3d_value_matches_duality():
    K, L = cube(3), diamond(3)
    lhs, rhs = duality_check(K, L, 1)
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_curvature_degree_validation():
    with pytest.raises(InputError):
        curvature_mixed_functional([cube(2), diamond(2)], (1, 2))
    with pytest.raises(InputError):
        curvature_mixed_functional([cube(2), diamond(2)], (1, 0))
    with pytest.raises(InputError):
        curvature_mixed_functional([cube(3), diamond(3)], (1, 1))


def test_curvature_degenerate_tuples_drop_cleanly():
    # whenever normal picks can capture 0, they are linearly dependent, so
    # the span bracket vanishes and the tuple drops before quadrature; the
    # cube pair is full of such tuples yet V_{1,2} = 3 vol(cube) exactly
    v = curvature_mixed_functional([cube(3), cube(3)], (1, 2))
    assert v == pytest.approx(3.0, abs=1e-8)
    # cutoff variants: zero once eps exceeds every tuple distance (sqrt 1/2
    # here), the full value below it
    assert curvature_mixed_functional([cube(3), cube(3)], (1, 2), eps=0.8) \
        == pytest.approx(0.0, abs=1e-12)
    assert curvature_mixed_functional([cube(3), cube(3)], (1, 2), eps=0.5) \
        == pytest.approx(3.0, abs=1e-8)


def test_duality_pairs():
    cases = [
        ((cube(2), diamond(2)), 4.0),
        ((cube(2), cube(2)), 2.0),
        ((segment(2, 0), segment(2, 1)), 1.0),
    ]
    for (K, L), want in cases:
        lhs, rhs = duality_check(K, L, 1)
        assert lhs == pytest.approx(want, abs=1e-8)
        assert abs(lhs - rhs) <= 1e-6


def test_translation_integral_j0_anchor():
    est = translative_integral_mc([cube(2), diamond(2)], 0, rng=3,
                                  samples=60000)
    assert abs(est.value - 7.0) <= 3.0 * est.std_error
    assert est.std_error <= 0.05


def test_translation_integral_j0_is_difference_body_volume():
    est = translative_integral_mc([cube(2), cube(2)], 0, rng=3,
                                  samples=40000)
    # the sampling box equals the difference body, so every draw hits and
    # only hull-volume rounding remains
    assert abs(est.value - 4.0) <= 3.0 * est.std_error + 1e-6


def test_translation_integral_j1_square_pair():
    est = translative_integral_mc([cube(2), cube(2)], 1, rng=5,
                                  samples=60000)
    assert abs(est.value - 4.0) <= 3.0 * est.std_error


def test_translation_integral_j1_square_diamond():
    # boundary-length term: integral = 2 sqrt(2) + 4
    est = translative_integral_mc([cube(2), diamond(2)], 1, rng=5,
                                  samples=60000)
    assert abs(est.value - (2.0 * math.sqrt(2.0) + 4.0)) <= \
        3.0 * est.std_error


def test_translation_integral_three_bodies():
    # iterated pair sums: vol(Q + (-Q) + (-Q)) = 9 for unit squares
    est = translative_integral_mc([cube(2), cube(2), cube(2)], 0, rng=7,
                                  samples=30000)
    assert abs(est.value - 9.0) <= 3.0 * est.std_error


def test_translation_integral_3d_cube_pair():
    for j, want in ((0, 8.0), (1, 12.0), (2, 6.0)):
        est = translative_integral_mc([cube(3), cube(3)], j, rng=11,
                                      samples=3000 if j else 30000)
        assert abs(est.value - want) <= 3.0 * est.std_error + 1e-6, (j, est)


def test_translative_validation():
    with pytest.raises(InputError):
        translative_integral_mc([cube(2)], 0, rng=0)
    with pytest.raises(InputError):
        translative_integral_mc([cube(2), diamond(2)], 2, rng=0)
    with pytest.raises(InputError):
        translative_integral_mc([cube(2), diamond(3)], 0, rng=0)


def test_translative_seed_reproducible():
    a = translative_integral_mc([cube(2), diamond(2)], 1, rng=9,
                                samples=5000)
    b = translative_integral_mc([cube(2), diamond(2)], 1, rng=9,
                                samples=5000)
    assert a.value == b.value and a.std_error == b.std_error


def test_decompose_square_pair_j1():
    table = decompose_homogeneous([cube(2), cube(2)], 1, rng=13,
                                  samples=8000)
    assert set(table.entries) == {(1, 2), (2, 1)}
    # V_{1,2}(Q,Q) = V_{2,1}(Q,Q) = 2 by the polarized perimeter formula
    for r in table.entries:
        err = table.std_error(r)
        assert abs(table.value(r) - 2.0) <= 3.0 * err + 0.02
    tot = table.total()
    assert abs(tot.value - 4.0) <= 3.0 * tot.std_error + 0.02


def test_decompose_j0_recovers_volumes():
    table = decompose_homogeneous([cube(2), diamond(2)], 0, rng=17,
                                  samples=20000)
    # degree (2,0) and (0,2) entries are the plain volumes
    assert abs(table.value((2, 0)) - 1.0) <= 3.0 * table.std_error((2, 0)) \
        + 0.02
    assert abs(table.value((0, 2)) - 2.0) <= 3.0 * table.std_error((0, 2)) \
        + 0.02
    assert abs(table.value((1, 1)) - 4.0) <= 3.0 * table.std_error((1, 1)) \
        + 0.05


def test_decompose_matches_curvature_entry():
    # the diagonal-degree coefficient equals the cone-quadrature functional
    table = decompose_homogeneous([cube(2), diamond(2)], 0, rng=19,
                                  samples=20000)
    exact = curvature_mixed_functional([cube(2), diamond(2)], (1, 1))
    assert abs(table.value((1, 1)) - exact) <= \
        3.0 * table.std_error((1, 1)) + 0.05


def test_table_api():
    table = TranslativeTable(2, 1, {(1, 2): 2.0}, "test", {(1, 2): 0.1}, {})
    assert table.k == 2
    assert table.value((1, 2)) == 2.0
    assert table.std_error((1, 2)) == 0.1
    with pytest.raises(InputError):
        table.value((2, 2))


def test_duality_input_validation():
    with pytest.raises(InputError):
        duality_check(cube(2), diamond(2), 2)
    with pytest.raises(InputError):
        duality_check(cube(2), diamond(3), 1)