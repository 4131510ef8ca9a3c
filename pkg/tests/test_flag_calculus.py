"""Grassmann-weighted measures on polytope flags and the multiplier kernels.

The structural facts under test: the atom set of a polytope has total mass
equal to the intrinsic volume; its normal-direction marginal is the area
measure up to the documented constant; the two reproducing kernels recover
wedge norms of frames; and the resulting mixed-volume estimates agree with
the exact oracle.
"""

import json
import math

import numpy as np
import pytest

from mixvol.errors import DivergenceError, InputError
from mixvol.estimates import MCEstimate
from mixvol.exterior import Subspace
from mixvol.flag_calculus import (DMatrix, c_const, closed_d_matrix,
                                  d_matrix, estimate_d_matrix,
                                  flag_mixed_functional, flag_mixed_volume,
                                  gamma_const, phi_kernel, phi_multiplier,
                                  polytope_flag_atoms, psi_kernel,
                                  verify_multiplier_identity)
from mixvol.generators import cube, diamond, rotated_cube
from mixvol.mixed_volume import oracle_mixed_volumes
from mixvol.translative import curvature_mixed_functional
from mixvol.util import omega


def test_gamma_constants():
    assert gamma_const(2, 1) == pytest.approx(0.5)
    assert gamma_const(3, 1) == pytest.approx(2.0 / omega(2))
    assert gamma_const(3, 2) == pytest.approx(1.0 / omega(1))
    assert c_const(3, (1, 2)) == pytest.approx(
        gamma_const(3, 1) * gamma_const(3, 2))


def test_closed_d_matrix_values():
    trivial = closed_d_matrix(2, 1)
    np.testing.assert_allclose(trivial.entries, np.eye(1))
    m = closed_d_matrix(3, 1)
    np.testing.assert_allclose(
        m.entries, np.array([[3.0, 1.0], [1.0, 3.0]]) / 8.0)
    np.testing.assert_allclose(m.a, [3.0, -1.0], atol=1e-12)
    assert m.unit_row_residual() <= 1e-12
    assert closed_d_matrix(4, 1) is None


def test_d_matrix_json_roundtrip():
    m = closed_d_matrix(3, 1)
    back = DMatrix.from_json(m.to_json())
    np.testing.assert_allclose(back.entries, m.entries)
    assert back.d == m.d and back.j == m.j
    assert m.to_json()["schema"] == 1


def test_estimate_d_matrix_close_to_closed():
    est = estimate_d_matrix(3, 1, rng=2, budget=120000)
    closed = closed_d_matrix(3, 1)
    dev = np.abs(est.entries - closed.entries) / np.maximum(est.sigma, 1e-12)
    assert float(dev.max()) <= 4.0
    assert est.unit_row_residual() <= 0.05
    assert est.condition < 10.0


def test_d_matrix_cache_roundtrip(tmp_path):
    path = str(tmp_path / "dmat.json")
    first = d_matrix(4, 1, rng=3, cache_path=path, budget=20000)
    assert first.source == "mc"
    second = d_matrix(4, 1, rng=None, cache_path=path, budget=20000)
    np.testing.assert_allclose(second.entries, first.entries)
    # closed-form cases never touch the cache
    closed = d_matrix(3, 1, cache_path=str(tmp_path / "missing.json"))
    assert closed.source == "closed"
    assert not (tmp_path / "missing.json").exists()


def test_phi_kernel_2d_is_squared_sine():
    # with one-dimensional hosts the Grassmann average collapses and the
    # kernel equals the squared wedge of the two lines
    for theta in (0.3, 0.9, 1.4):
        us = [np.array([1.0, 0.0]), np.array([math.cos(theta),
                                              math.sin(theta)])]
        subs = [Subspace(np.array([[0.0], [1.0]])),
                Subspace(np.array([[-math.sin(theta)], [math.cos(theta)]]))]
        got = phi_kernel(us, subs)
        assert got == pytest.approx(math.sin(theta) ** 2, abs=1e-12)


def test_phi_kernel_rejects_bad_slots():
    us = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    subs = [Subspace(np.array([[1.0], [0.0]])),     # not inside u^perp
            Subspace(np.array([[1.0], [0.0]]))]
    with pytest.raises(InputError):
        phi_kernel(us, subs)


def test_multiplier_identity_exact_in_2d():
    for ident in ("subspace", "interleaved"):
        rep = verify_multiplier_identity(2, (1, 1), ident, rng=0, trials=4,
                                         samples=64)
        assert rep["max_abs_residual"] <= 1e-10
        assert rep["identity"] == ident
        assert len(rep["trials"]) == 4


def test_multiplier_identity_3d_mc():
    rep = verify_multiplier_identity(3, (1, 2), "subspace", rng=1, trials=3,
                                     samples=20000)
    assert rep["max_std_residual"] <= 4.0
    rep = verify_multiplier_identity(3, (2, 2), "interleaved", rng=2,
                                     trials=3, samples=20000)
    assert rep["max_std_residual"] <= 4.0


def test_psi_kernel_j0_matches_phi_convention(rng):
    # k = 2, r = (1, 1), d = 2: interleaved frames span everything, so the
    # kernel equals the squared wedge of [A1 u1 A2 u2]
    theta = 0.7
    us = [np.array([1.0, 0.0]), np.array([math.cos(theta),
                                          math.sin(theta)])]
    subs = [Subspace.zero(2), Subspace.zero(2)]
    got = psi_kernel(us, subs)
    want = math.sin(theta) ** 2
    assert got == pytest.approx(want, abs=1e-12)


def test_atoms_total_mass_is_intrinsic_volume(rng):
    for p, n, want in ((cube(2), 1, 2.0), (cube(3), 1, 3.0),
                       (cube(3), 2, 3.0), (diamond(2), 1,
                                           2.0 * math.sqrt(2.0))):
        atoms = polytope_flag_atoms(p, n, rng=rng)
        got = atoms.total_mass()
        assert abs(got.value - want) <= 3.0 * got.std_error + 1e-9


def test_atoms_integrate_constant_recovers_mass(rng):
    atoms = polytope_flag_atoms(cube(3), 1, rng=rng)
    got = atoms.integrate(lambda u, v: 1.0, rng, samples_per_atom=400)
    want = atoms.total_mass()
    sig = math.hypot(got.std_error, want.std_error)
    assert abs(got.value - want.value) <= 3.0 * sig + 1e-9


def test_atoms_marginal_matches_area_measure(rng):
    # integrating g(u) = <u, e1>^2: hand value 1 for the unit cube at n=1,
    # in both two and three dimensions
    for d in (2, 3):
        atoms = polytope_flag_atoms(cube(d), 1, rng=rng)
        got = atoms.integrate(lambda u, v: float(u[0] ** 2), rng,
                              samples_per_atom=2500)
        assert abs(got.value - 1.0) <= 3.0 * got.std_error + 1e-9


def test_flag_volume_square_diamond_exact():
    est = flag_mixed_volume([cube(2), diamond(2)], (1, 1), rng=0)
    assert est.std_error <= 1e-12
    assert est.value == pytest.approx(2.0, abs=1e-9)


def test_flag_volume_needs_general_position():
    with pytest.raises(DivergenceError):
        flag_mixed_volume([cube(2), cube(2)], (1, 1), rng=0)
    est = flag_mixed_volume([cube(2), cube(2)], (1, 1), rng=0, eps=0.5,
                            samples=500)
    assert np.isfinite(est.value)


def test_flag_volume_eps_sequence_monotone():
    vals = []
    for eps in (0.8, 0.3):
        est = flag_mixed_volume([cube(2), diamond(2)], (1, 1), rng=4,
                                eps=eps, samples=1500)
        vals.append(est.value)
    assert vals[0] <= vals[1] + 1e-9


def test_flag_volume_3d_matches_oracle():
    bodies = [cube(3), rotated_cube(3, seed=42)]
    want = oracle_mixed_volumes(bodies).value((1, 2))
    est = flag_mixed_volume(bodies, (1, 2), rng=6, samples=2500)
    assert abs(est.value - want) <= 3.0 * est.std_error + 1e-9


def test_flag_functional_square_diamond():
    est = flag_mixed_functional([cube(2), diamond(2)], (1, 1), rng=0)
    assert est.value == pytest.approx(4.0, abs=1e-9)


def test_flag_functional_3d_matches_curvature():
    bodies = [cube(3), diamond(3)]
    want = curvature_mixed_functional(bodies, (2, 2))
    est = flag_mixed_functional(bodies, (2, 2), rng=8, samples=2500)
    assert abs(est.value - want) <= 3.0 * est.std_error + 1e-9


def test_flag_degree_validation():
    with pytest.raises(InputError):
        flag_mixed_volume([cube(2), diamond(2)], (1, 2), rng=0)
    with pytest.raises(InputError):
        flag_mixed_functional([cube(2), diamond(2)], (0, 2), rng=0)
    with pytest.raises(InputError):
        flag_mixed_functional([cube(3), diamond(3)], (1, 1), rng=0)


def test_flag_routes_seed_reproducible():
    bodies = [cube(3), diamond(3)]
    a = flag_mixed_volume(bodies, (1, 2), rng=31, samples=600)
    b = flag_mixed_volume(bodies, (1, 2), rng=31, samples=600)
    assert a.value == b.value and a.std_error == b.std_error
    assert isinstance(a, MCEstimate)