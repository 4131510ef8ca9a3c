"""Normal cones on the sphere: measures, sampling, intersection probes."""

import math

import numpy as np
import pytest

from mixvol.cones import (ShiftedCone, cone_sphere_samples, cones_intersect,
                          external_angle, general_position,
                          random_admissible, random_direction_tuple,
                          spherical_measure)
from mixvol.errors import InputError
from mixvol.generators import cube, diamond, simplex


def test_square_vertex_angle_is_quarter():
    p = cube(2)
    for v in p.faces(0):
        assert external_angle(p, v).value == pytest.approx(0.25)
    for e in p.faces(1):
        assert external_angle(p, e).value == pytest.approx(0.5)
    assert sum(external_angle(p, v).value for v in p.faces(0)) == \
        pytest.approx(1.0)


def test_cube3_vertex_measure_is_octant(rng):
    p = cube(3)
    m = spherical_measure(p.faces(0)[0].normal_cone, rng=rng, samples=60000)
    octant = 4.0 * math.pi / 8.0
    assert abs(m.value - octant) <= 3.0 * m.std_error + 1e-9


def test_cube3_edge_cone_is_quarter_arc():
    p = cube(3)
    m = spherical_measure(p.faces(1)[0].normal_cone)
    assert m.value == pytest.approx(math.pi / 2.0)
    assert m.std_error == 0.0


def test_external_angles_sum_to_euler():
    # Gram relation at the vertex level: sum over vertices of gamma = 1
    for p in (diamond(2), simplex(2)):
        total = sum(external_angle(p, v).value for v in p.faces(0))
        assert total == pytest.approx(1.0)


def test_cone_sphere_samples_lie_in_cone(rng):
    p = diamond(3)
    cone = p.faces(0)[0].normal_cone
    us, mass = cone_sphere_samples(cone, 500, rng)
    np.testing.assert_allclose(np.linalg.norm(us, axis=1), 1.0, atol=1e-9)
    assert np.all(cone.member_mask(us))
    assert mass.value > 0.0


def test_cones_intersect_shifted():
    p = cube(2)
    cones = [f.normal_cone for f in p.faces(1)[:2]]
    # unshifted cones always meet at the origin
    assert cones_intersect([ShiftedCone(c, np.zeros(2)) for c in cones])


def test_random_direction_tuple_lives_on_perp_sphere(rng):
    for d, k in ((2, 2), (3, 2), (2, 3)):
        x = random_direction_tuple(d, k, rng)
        assert x.shape == (k, d)
        np.testing.assert_allclose(x.sum(axis=0), 0.0, atol=1e-9)
        assert np.linalg.norm(x) == pytest.approx(1.0)


def test_random_admissible_on_perp_sphere(rng):
    x = random_admissible([cube(2), diamond(2)], (1, 1), rng, verify=True)
    assert x.shape == (2, 2)
    np.testing.assert_allclose(x.sum(axis=0), 0.0, atol=1e-9)
    assert np.linalg.norm(x) == pytest.approx(1.0)


def test_general_position_flags_parallel_squares():
    Q = cube(2)
    assert not general_position([Q, Q.translate([3.0, 0.0])], (1, 1),
                                "mixed-volume")
    assert general_position([Q, diamond(2)], (1, 1), "mixed-volume")


def test_general_position_translative_mode():
    Q = cube(2)
    assert not general_position([Q, Q], (1, 1), "translative")
    assert general_position([Q, diamond(2)], (1, 1), "translative")
    with pytest.raises(InputError):
        general_position([Q, Q], (1, 1), "bogus")
