"""Flag measures of polytopes and the Grassmannian multiplier route.

A flag measure of degree n lives on pairs (u, V) of a unit normal and a
(d-1-n)-subspace of u^perp.  For polytopes it is atomic over the n-faces:
each face F carries gamma(d,n) * H^n(F) times the normal-cone sphere measure,
with the Grassmann coordinate weighted by <V, T(F,u)>^2 against the Haar
measure, T(F,u) = u^perp cap lin(F)^perp.

Mixed volumes and mixed translative functionals are then integrals of a
direction kernel (F_n or G_r) times a multiplier function (phi_n or psi_r)
against a product of flag measures.  The multipliers are finite sums of
squared determinants with coefficients taken from the inverses of small
Grassmannian moment matrices (DMatrix below); their defining property is
reproducing wedge squares:

    int Phi(U_1..U_k) prod <U_i, A_i>^2 dU  = ||A_1 ^ .. ^ A_k||^2
    int Psi(U_1..U_k) prod <U_i, A_i>^2 dU  = ||A_1 ^ u_1 ^ .. ^ A_k ^ u_k||^2

with Haar-probability integration, which verify_multiplier_identity checks
numerically.  Conventions: flag_mixed_volume divides the multinomial
coefficient out (it returns the mixed volume, matching the other routes);
flag_mixed_functional does not (V_r carries no such factor).
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .cones import cone_sphere_samples, general_position, spherical_measure
from .errors import DivergenceError, EstimationError, InputError
from .estimates import (MCEstimate, combine_product, combine_sum, exact,
                        from_samples)
from .exterior import (Subspace, UnitVector, graded_index_sets,
                       graded_scalar_product, subspace_determinant,
                       tangent_subspace, wedge_norm_sq)
from .kernels import KernelSpec, kernel_values
from .mixed_volume import _split_budget
from .polytope import Face, NormalCone, Polytope
from .util import (as_rng, multinomial, omega, parallel_map,
                   random_unit_vectors, spawn_rngs)

_MASS_SAMPLES = 40000


def gamma_const(d: int, n: int) -> float:
    """gamma(d, n) = binom(d-1, n) / omega_{d-n}: flag-measure normalization."""
    if not 0 <= n <= d - 1:
        raise InputError(f"degree n={n} out of range for d={d}")
    return math.comb(d - 1, n) / omega(d - n)


def c_const(d: int, degrees) -> float:
    """Product of the per-body gamma constants; divides Phi/Psi into phi/psi."""
    return math.prod(gamma_const(d, n) for n in degrees)


# ---------------------------------------------------------------------------
# D-matrices


@dataclass(frozen=True)
class DMatrix:
    """Moment matrix d^{d-1,j}_{p,q} of graded Grassmann products.

    Defined by E_U[<U,B>^2_p <U,A>^2] = sum_q entries[p,q] <A,B>^2_q for
    U Haar on G(d-1, j) and A, B j-subspaces of R^{d-1}.  `a` solves
    a @ entries = e_0 and carries the multiplier coefficients.
    """

    d: int
    j: int
    entries: np.ndarray
    sigma: np.ndarray
    source: str
    seed: int | None = None

    @property
    def grades(self) -> int:
        return self.entries.shape[0]

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.entries))

    @property
    def a(self) -> np.ndarray:
        coeffs = np.linalg.solve(self.entries.T, np.eye(self.grades)[0])
        return coeffs

    def unit_row_residual(self) -> float:
        res = self.a @ self.entries - np.eye(self.grades)[0]
        return float(np.max(np.abs(res)))

    def to_json(self) -> dict:
        return {"schema": 1, "d": self.d, "j": self.j,
                "entries": [float(x) for x in self.entries.reshape(-1)],
                "sigma": [float(x) for x in self.sigma.reshape(-1)],
                "seed": self.seed, "source": self.source}

    @staticmethod
    def from_json(payload: dict) -> "DMatrix":
        g = int(round(math.sqrt(len(payload["entries"]))))
        return DMatrix(int(payload["d"]), int(payload["j"]),
                       np.array(payload["entries"]).reshape(g, g),
                       np.array(payload["sigma"]).reshape(g, g),
                       payload.get("source", "cache"), payload.get("seed"))


def closed_d_matrix(d: int, j: int) -> DMatrix | None:
    """Known closed forms: any degenerate grading, and the planar case."""
    m = d - 1
    if not 0 <= j <= m:
        raise InputError(f"j={j} out of range for host dimension {m}")
    g = min(j, m - j) + 1
    if g == 1:
        return DMatrix(d, j, np.eye(1), np.zeros((1, 1)), "closed")
    if m == 2 and j == 1:
        entries = np.array([[3.0 / 8.0, 1.0 / 8.0], [1.0 / 8.0, 3.0 / 8.0]])
        return DMatrix(d, j, entries, np.zeros((2, 2)), "closed")
    return None


def _haar_frames(m: int, j: int, n: int, rng) -> np.ndarray:
    g = rng.standard_normal((n, m, j))
    return np.linalg.qr(g, mode="reduced")[0]


def _graded_products(us: np.ndarray, B: np.ndarray, p: int) -> np.ndarray:
    """<U, span B[:, :j]>^2_p batched over U frames (N, m, j); B is (m, m)
    with the subspace in the leading columns and its complement behind."""
    j = us.shape[2]
    total = np.zeros(us.shape[0])
    for idx in graded_index_sets(B.shape[0], j, p):
        dets = np.linalg.det(np.swapaxes(us, 1, 2) @ B[:, list(idx)])
        total += dets * dets
    return total


def estimate_d_matrix(d: int, j: int, rng=None, budget: int = 200000,
                      pairs: int | None = None) -> DMatrix:
    """Monte Carlo reconstruction of the moment matrix.

    For random subspace pairs (A, B) the left side E_U[<U,B>^2_p <U,A>^2]
    is estimated over Haar U and regressed on the features <A,B>^2_q; each
    row is an independent least-squares solve.  Errors are the propagated
    per-pair standard errors; an ill-conditioned feature matrix (pairs not
    spreading the principal angles) raises an estimation failure.
    """
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = as_rng(rng)
    m = d - 1
    closed = closed_d_matrix(d, j)
    if closed is not None and closed.grades == 1:
        return closed
    g = min(j, m - j) + 1
    npairs = pairs if pairs is not None else max(8, 4 * g * g)
    per_pair = max(1000, budget // npairs)
    feats = np.empty((npairs, g))
    lhs = np.empty((npairs, g))
    se = np.empty((npairs, g))
    for row in range(npairs):
        a_frame = _haar_frames(m, j, 1, rng)[0]
        b_frame = _haar_frames(m, j, 1, rng)[0]
        b_full = np.hstack([b_frame, Subspace(b_frame).complement().frame])
        A, B = Subspace(a_frame), Subspace(b_frame)
        feats[row] = [graded_scalar_product(A, B, q) for q in range(g)]
        us = _haar_frames(m, j, per_pair, rng)
        plain = np.linalg.det(np.swapaxes(us, 1, 2) @ a_frame) ** 2
        for p in range(g):
            vals = _graded_products(us, b_full, p) * plain
            lhs[row, p] = vals.mean()
            se[row, p] = vals.std(ddof=1) / math.sqrt(per_pair)
    cond = float(np.linalg.cond(feats))
    if cond > 1e6:
        raise EstimationError(
            f"D-matrix feature system ill-conditioned (cond={cond:.3e}); "
            "increase the pair count")
    pinv = np.linalg.pinv(feats)
    entries = np.empty((g, g))
    sigma = np.empty((g, g))
    for p in range(g):
        entries[p] = pinv @ lhs[:, p]
        sigma[p] = np.abs(pinv) @ se[:, p]
    return DMatrix(d, j, entries, sigma, "mc", seed)


def d_matrix(d: int, j: int, rng=None, cache_path: str | None = None,
             budget: int = 200000) -> DMatrix:
    """Closed form when available, else the (optionally cached) MC estimate."""
    closed = closed_d_matrix(d, j)
    if closed is not None:
        return closed
    if cache_path is not None and os.path.exists(cache_path):
        with open(cache_path, "r", encoding="utf-8") as fh:
            stored = DMatrix.from_json(json.load(fh))
        if stored.d == d and stored.j == j:
            return stored
    est = estimate_d_matrix(d, j, rng=rng, budget=budget)
    if cache_path is not None:
        with open(cache_path, "w", encoding="utf-8") as fh:
            json.dump(est.to_json(), fh, sort_keys=True)
    return est


# ---------------------------------------------------------------------------
# multiplier kernels (batched core)


def _batched_complement(mats: np.ndarray, d: int) -> np.ndarray:
    """Orthonormal complements of (N, d, m) frames, shape (N, d, d-m)."""
    n, _, m = mats.shape
    if m == 0:
        return np.broadcast_to(np.eye(d), (n, d, d)).copy()
    if m == d:
        return np.empty((n, d, 0))
    q = np.linalg.qr(mats, mode="complete")[0]
    return q[:, :, m:]


def _batched_uniform_in(host: np.ndarray, m: int, rng) -> np.ndarray:
    """Haar m-subspace frames inside per-sample host frames (N, d, h)."""
    n, d, h = host.shape
    if m == 0:
        return np.empty((n, d, 0))
    g = rng.standard_normal((n, h, m))
    return np.linalg.qr(host @ g, mode="reduced")[0]


def _slot_selections(primary: np.ndarray, secondary: np.ndarray, p: int):
    """All column picks taking (dim - p) from the primary frame and p from
    the secondary one; each pick is (N, d, dim)."""
    a, b = primary.shape[2], secondary.shape[2]
    picks = []
    for keep in itertools.combinations(range(a), a - p):
        for add in itertools.combinations(range(b), p):
            cols = [primary[:, :, i] for i in keep] + [secondary[:, :, i] for i in add]
            if cols:
                picks.append(np.stack(cols, axis=2))
            else:
                picks.append(np.empty((primary.shape[0], primary.shape[1], 0)))
    return picks


def _graded_det_sum(slots, a_vectors, extra: np.ndarray | None,
                    n_samples: int) -> np.ndarray:
    """Sum over gradings p and index picks of (prod a_p) det^2 of the
    horizontally assembled square matrices; slots may append a fixed column
    (the u_i of the interleaved kernel)."""
    total = np.zeros(n_samples)
    for p_combo in itertools.product(*[range(len(a)) for a in a_vectors]):
        coeff = math.prod(a_vectors[i][p] for i, p in enumerate(p_combo))
        if coeff == 0.0:
            continue
        pick_lists = [slots[i]["picks"][p] for i, p in enumerate(p_combo)]
        for choice in itertools.product(*pick_lists):
            cols = []
            for i, picked in enumerate(choice):
                cols.append(picked)
                if slots[i]["append"] is not None:
                    cols.append(slots[i]["append"])
            if extra is not None:
                cols.append(extra)
            dets = np.linalg.det(np.concatenate(cols, axis=2))
            total += coeff * dets * dets
    return total


def _phi_values(d: int, degrees, us_list, w_list, a_vectors) -> np.ndarray:
    """Batched Phi: us_list[i] is (N, d), w_list[i] is (N, d, n_i) inside
    u_i^perp, sum n_i = d."""
    n_samples = us_list[0].shape[0]
    slots = []
    for i, n_i in enumerate(degrees):
        stacked = np.concatenate([us_list[i][:, :, None], w_list[i]], axis=2)
        comp = _batched_complement(stacked, d)
        picks = {p: _slot_selections(w_list[i], comp, p)
                 for p in range(len(a_vectors[i]))}
        slots.append({"picks": picks, "append": None})
    return _graded_det_sum(slots, a_vectors, None, n_samples)


def _psi_values(d: int, degrees, us_list, u_frames_list, a_vectors,
                rng=None) -> np.ndarray:
    """Batched Psi: subspace frames of dim d-1-r_i with the u_i columns
    interleaved; for j > 0 one fused uniform (u', U') draw per sample
    closes the wedge to a square determinant, scaled by binom(d, j)."""
    n_samples = us_list[0].shape[0]
    j = sum(degrees) - (len(degrees) - 1) * d
    slots = []
    for i, r_i in enumerate(degrees):
        frame = u_frames_list[i]
        stacked = np.concatenate([us_list[i][:, :, None], frame], axis=2)
        comp = _batched_complement(stacked, d)
        picks = {p: _slot_selections(frame, comp, p)
                 for p in range(len(a_vectors[i]))}
        slots.append({"picks": picks, "append": us_list[i][:, :, None]})
    extra = None
    scale = 1.0
    if j > 0:
        rng = as_rng(rng)
        u_extra = random_unit_vectors(d, n_samples, rng)
        host = _batched_complement(u_extra[:, :, None], d)
        frame_extra = _batched_uniform_in(host, j - 1, rng)
        extra = np.concatenate([frame_extra, u_extra[:, :, None]], axis=2)
        scale = float(math.comb(d, j))
    return scale * _graded_det_sum(slots, a_vectors, extra, n_samples)


def _as_unit_array(u) -> np.ndarray:
    if isinstance(u, UnitVector):
        return u.coords
    return UnitVector(np.asarray(u, dtype=float)).coords


def _as_frame(s, d: int) -> np.ndarray:
    f = s.frame if isinstance(s, Subspace) else np.asarray(s, dtype=float)
    if f.ndim == 1:
        f = f.reshape(-1, 1)
    if f.shape[0] != d:
        raise InputError("subspace frame has wrong ambient dimension")
    return Subspace(f).frame


def _check_slots(us, frames, dims_wanted, d: int):
    for u, f, want in zip(us, frames, dims_wanted):
        if f.shape[1] != want:
            raise InputError(f"subspace dimension {f.shape[1]}, expected {want}")
        if f.shape[1] and np.max(np.abs(u @ f)) > 1e-8:
            raise InputError("subspace is not contained in u^perp")


def _phi_coefficients(d: int, degrees, rng=None, cache_path=None):
    return [d_matrix(d, n_i, rng=rng, cache_path=cache_path).a for n_i in degrees]


def phi_kernel(us, subspaces, rng=None, dmatrix_cache=None) -> float:
    """Phi at one configuration: U_i of dimension n_i inside u_i^perp with
    the n_i summing to the ambient dimension."""
    us = [_as_unit_array(u) for u in us]
    d = us[0].shape[0]
    frames = [_as_frame(s, d) for s in subspaces]
    degrees = tuple(f.shape[1] for f in frames)
    if sum(degrees) != d:
        raise InputError("subspace dimensions must sum to the ambient dimension")
    _check_slots(us, frames, degrees, d)
    a_vecs = _phi_coefficients(d, degrees, rng=rng, cache_path=dmatrix_cache)
    vals = _phi_values(d, degrees, [u.reshape(1, -1) for u in us],
                       [f[None] for f in frames], a_vecs)
    return float(vals[0])


def phi_multiplier(us, flag_subspaces, rng=None, dmatrix_cache=None) -> float:
    """phi_n at flag coordinates: V_i of dimension d-1-n_i inside u_i^perp.

    Evaluates Phi at the complements of the V_i within u_i^perp and divides
    by the gamma-constant product c(d, n)."""
    us = [_as_unit_array(u) for u in us]
    d = us[0].shape[0]
    frames = [_as_frame(s, d) for s in flag_subspaces]
    degrees = tuple(d - 1 - f.shape[1] for f in frames)
    if sum(degrees) != d:
        raise InputError("flag dimensions incompatible with a mixed volume")
    _check_slots(us, frames, tuple(d - 1 - n for n in degrees), d)
    comps = [_batched_complement(
        np.concatenate([u.reshape(1, -1, 1), f[None]], axis=2), d)[0]
        for u, f in zip(us, frames)]
    a_vecs = _phi_coefficients(d, degrees, rng=rng, cache_path=dmatrix_cache)
    vals = _phi_values(d, degrees, [u.reshape(1, -1) for u in us],
                       [c[None] for c in comps], a_vecs)
    return float(vals[0]) / c_const(d, degrees)


def psi_kernel(us, subspaces, rng=None, samples: int = 512,
               dmatrix_cache=None) -> float:
    """Psi at one configuration: U_i of dimension d-1-r_i inside u_i^perp.

    Deterministic for j = 0; for j > 0 the fused-average construction is
    integrated by `samples` Monte Carlo draws."""
    us = [_as_unit_array(u) for u in us]
    d = us[0].shape[0]
    frames = [_as_frame(s, d) for s in subspaces]
    degrees = tuple(d - 1 - f.shape[1] for f in frames)
    if any(not 1 <= r <= d - 1 for r in degrees) or \
            sum(degrees) < (len(degrees) - 1) * d:
        raise InputError("subspace dimensions incompatible with a "
                         "translative multidegree")
    _check_slots(us, frames, tuple(d - 1 - r for r in degrees), d)
    j = sum(degrees) - (len(degrees) - 1) * d
    a_vecs = [d_matrix(d, d - 1 - r, rng=rng, cache_path=dmatrix_cache).a
              for r in degrees]
    reps = samples if j > 0 else 1
    vals = _psi_values(d, degrees,
                       [np.repeat(u.reshape(1, -1), reps, axis=0) for u in us],
                       [np.repeat(f[None], reps, axis=0) for f in frames],
                       a_vecs, rng=as_rng(rng))
    return float(vals.mean())


def psi_multiplier(us, flag_subspaces, rng=None, samples: int = 512,
                   dmatrix_cache=None) -> float:
    """psi_r at flag coordinates (the flag subspaces are Psi's arguments
    directly); Psi divided by the gamma-constant product."""
    us_arr = [_as_unit_array(u) for u in us]
    d = us_arr[0].shape[0]
    frames = [_as_frame(s, d) for s in flag_subspaces]
    degrees = tuple(d - 1 - f.shape[1] for f in frames)
    value = psi_kernel(us, flag_subspaces, rng=rng, samples=samples,
                       dmatrix_cache=dmatrix_cache)
    return value / c_const(d, degrees)


def verify_multiplier_identity(d: int, degrees, identity: str = "subspace",
                               rng=None, trials: int = 20,
                               samples: int = 20000,
                               dmatrix_cache=None) -> dict:
    """Numerical check of the reproducing property on random configurations.

    identity "subspace": integrates Phi against prod <U_i, A_i>^2 and
    compares with ||A_1 ^ .. ^ A_k||^2 (dim A_i = n_i, sum = d).
    identity "interleaved": integrates Psi and compares with
    ||A_1 ^ u_1 ^ .. ^ A_k ^ u_k||^2 (dim A_i = d-1-r_i).
    Returns per-trial targets, estimates and standardized residuals; in
    degenerate Grassmannians (d = 2) the integrals collapse and residuals
    are exact.
    """
    if identity not in ("subspace", "interleaved"):
        raise InputError('identity must be "subspace" or "interleaved"')
    degrees = tuple(int(x) for x in degrees)
    k = len(degrees)
    if identity == "subspace":
        if sum(degrees) != d or any(not 0 <= n <= d - 1 for n in degrees):
            raise InputError("subspace identity needs mixed-volume degrees")
        slot_dims = degrees
    else:
        if any(not 1 <= r <= d - 1 for r in degrees) or \
                sum(degrees) < (k - 1) * d:
            raise InputError("interleaved identity needs translative degrees")
        slot_dims = tuple(d - 1 - r for r in degrees)
    rng = as_rng(rng)
    a_vecs = [d_matrix(d, s, rng=rng, cache_path=dmatrix_cache).a
              for s in slot_dims]
    rows = []
    for _ in range(trials):
        us = random_unit_vectors(d, k, rng)
        hosts = [_batched_complement(us[i].reshape(1, -1, 1), d)
                 for i in range(k)]
        targets_frames = [_batched_uniform_in(hosts[i], slot_dims[i], rng)[0]
                          for i in range(k)]
        if identity == "subspace":
            target = wedge_norm_sq(np.concatenate(targets_frames, axis=1).T)
        else:
            cols = []
            for i in range(k):
                cols.append(targets_frames[i])
                cols.append(us[i].reshape(-1, 1))
            target = wedge_norm_sq(np.concatenate(cols, axis=1).T)
        us_b = [np.repeat(us[i].reshape(1, -1), samples, axis=0)
                for i in range(k)]
        drawn = [_batched_uniform_in(np.repeat(hosts[i], samples, axis=0),
                                     slot_dims[i], rng) for i in range(k)]
        weight = np.ones(samples)
        for i in range(k):
            if slot_dims[i]:
                dets = np.linalg.det(
                    np.swapaxes(drawn[i], 1, 2) @ targets_frames[i])
                weight *= dets * dets
        if identity == "subspace":
            kern = _phi_values(d, degrees, us_b, drawn, a_vecs)
        else:
            kern = _psi_values(d, degrees, us_b, drawn, a_vecs, rng=rng)
        est = from_samples(kern * weight)
        resid = est.value - target
        # degenerate configurations are exact; don't standardize by pure
        # float jitter
        floor = 1e-12 * max(1.0, abs(target))
        std_resid = resid / max(est.std_error, floor)
        rows.append({"target": float(target), "estimate": est.value,
                     "std_error": est.std_error,
                     "residual": float(resid),
                     "std_residual": float(std_resid)})
    return {"identity": identity, "d": d, "degrees": list(degrees),
            "trials": rows,
            "max_std_residual": max(abs(r["std_residual"]) for r in rows),
            "max_abs_residual": max(abs(r["residual"]) for r in rows)}


# ---------------------------------------------------------------------------
# flag atoms


@dataclass(frozen=True)
class FlagAtom:
    """One n-face's contribution to the flag measure."""

    face: Face
    cone: NormalCone
    hausdorff: float
    cone_mass: MCEstimate

    def tangent(self, u) -> Subspace:
        return tangent_subspace(u, self.face.frame)


@dataclass(frozen=True)
class FlagAtomSet:
    """Atomic representation of the degree-n flag measure of one polytope."""

    d: int
    n: int
    atoms: tuple
    meta: dict = field(default_factory=dict)

    @property
    def gamma(self) -> float:
        return gamma_const(self.d, self.n)

    def total_mass(self) -> MCEstimate:
        """Mass of the flag measure; equals the n-th intrinsic volume (the
        Haar average of <V,T>^2 contributes exactly 1/binom(d-1,n))."""
        scale = self.gamma / math.comb(self.d - 1, self.n)
        parts = [a.cone_mass.scaled(scale * a.hausdorff) for a in self.atoms]
        return combine_sum(parts) if parts else exact(0.0)

    def integrate(self, g, rng, samples_per_atom: int = 2000) -> MCEstimate:
        """MC integral of g(u, V) against the flag measure; g maps a unit
        normal (array) and a Subspace to a float."""
        rng = as_rng(rng)
        parts = []
        m = self.d - 1 - self.n
        for atom in self.atoms:
            if atom.cone.dim == 0:
                continue
            us, mass = cone_sphere_samples(atom.cone, samples_per_atom, rng)
            hosts = _batched_complement(us[:, :, None], self.d)
            vs = _batched_uniform_in(hosts, m, rng)
            vals = np.empty(us.shape[0])
            for s in range(us.shape[0]):
                v = Subspace(vs[s]) if m else Subspace.zero(self.d)
                if m:
                    det = np.linalg.det(vs[s].T @ atom.tangent(us[s]).frame)
                    w = det * det
                else:
                    w = 1.0
                vals[s] = g(us[s], v) * w
            parts.append(combine_product([from_samples(vals), mass])
                         .scaled(self.gamma * atom.hausdorff))
        return combine_sum(parts) if parts else exact(0.0)


def polytope_flag_atoms(P: Polytope, n: int, rng=None,
                        cone_samples: int = _MASS_SAMPLES) -> FlagAtomSet:
    """Atoms of the degree-n flag measure of a polytope.

    Each n-face contributes its Hausdorff measure, its normal cone, and the
    cone's spherical mass (exact below linear dimension 3, rejection MC
    above, hence the rng)."""
    d = P.dim
    if not 0 <= n <= d - 1:
        raise InputError(f"flag degree n={n} out of range for d={d}")
    rng = as_rng(rng)
    atoms = []
    for face in P.faces(n):
        mass = spherical_measure(face.normal_cone, rng=rng,
                                 samples=cone_samples)
        atoms.append(FlagAtom(face, face.normal_cone, face.measure, mass))
    return FlagAtomSet(d, n, tuple(atoms), meta={"name": P.name})


# ---------------------------------------------------------------------------
# flag representations


def _flag_tuple_estimate(d, degrees, atom_tuple, spec, a_vecs, face_frames,
                         rng, n_draws, use_complement: bool):
    """E over one face tuple of kernel * multiplier * prod <V_i, T_i>^2,
    times the atom weights (gamma, Hausdorff, cone mass)."""
    k = len(degrees)
    us_list, masses = [], []
    for atom in atom_tuple:
        us, mass = cone_sphere_samples(atom.cone, n_draws, rng)
        us_list.append(us)
        masses.append(mass)
    # flag coordinate dimension is d-1-degree for both representations
    flag_dims = [d - 1 - deg for deg in degrees]
    hosts = [_batched_complement(u[:, :, None], d) for u in us_list]
    vs = [_batched_uniform_in(hosts[i], flag_dims[i], rng) for i in range(k)]
    weight = np.ones(n_draws)
    for i in range(k):
        if flag_dims[i] == 0:
            continue
        f = face_frames[i]
        t = np.linalg.qr(np.concatenate(
            [us_list[i][:, :, None], np.repeat(f[None], n_draws, axis=0)],
            axis=2), mode="complete")[0][:, :, 1 + f.shape[1]:]
        dets = np.linalg.det(np.swapaxes(vs[i], 1, 2) @ t)
        weight *= dets * dets
    if use_complement:
        args = [_batched_complement(
            np.concatenate([us_list[i][:, :, None], vs[i]], axis=2), d)
            for i in range(k)]
        mult = _phi_values(d, degrees, us_list, args, a_vecs)
    else:
        mult = _psi_values(d, degrees, us_list, vs, a_vecs, rng=rng)
    kern = kernel_values(spec, np.stack(us_list, axis=1), rng=rng)
    core = from_samples(kern * mult * weight)
    # atom gammas cancel against the 1/c constant of the multiplier exactly
    hs = math.prod(a.hausdorff for a in atom_tuple)
    return combine_product([core] + masses).scaled(hs)


def _flag_sum(polytopes, degrees, mode, rng, eps, samples, threads,
              dmatrix_cache):
    d = polytopes[0].dim
    k = len(polytopes)
    rng = as_rng(rng)
    atom_sets = [polytope_flag_atoms(p, deg, rng=rng)
                 for p, deg in zip(polytopes, degrees)]
    slot_dims = degrees if mode == "n" else tuple(d - 1 - r for r in degrees)
    a_vecs = [d_matrix(d, s, rng=rng, cache_path=dmatrix_cache).a
              for s in slot_dims]
    spec = KernelSpec(d, degrees, mode, epsilon=eps)
    tuples = [t for t in itertools.product(*[s.atoms for s in atom_sets])
              if all(a.cone.dim >= 1 for a in t)]
    weights = []
    kept = []
    for t in tuples:
        span_frames = [a.face.frame for a in t] if mode == "n" else \
                      [a.cone.span for a in t]
        br = subspace_determinant(span_frames)
        if br <= 1e-12:
            continue
        kept.append(t)
        weights.append(math.prod(a.hausdorff * max(a.cone_mass.value, 1e-12)
                                 for a in t))
    if not kept:
        return exact(0.0)
    budgets = _split_budget(np.array(weights), samples)
    streams = spawn_rngs(rng, len(kept))

    def one(i: int) -> MCEstimate:
        t = kept[i]
        face_frames = [a.face.frame.frame for a in t]
        return _flag_tuple_estimate(d, degrees, t, spec, a_vecs,
                                    face_frames, streams[i], budgets[i],
                                    use_complement=(mode == "n"))

    return combine_sum(parallel_map(one, range(len(kept)), threads=threads))


def flag_mixed_volume(polytopes, n, rng=None, eps: float = 0.0,
                      samples: int = 40000, threads: int = 1,
                      dmatrix_cache=None) -> MCEstimate:
    """Mixed volume V(K_1[n_1], .., K_k[n_k]) from flag measures.

    Sums E[F_n * phi_n * prod <V_i,T_i>^2] over face tuples of dimensions
    n_i weighted by the atom masses, divided by the multinomial coefficient
    (the flag identity carries it on the left).  Tuples with linearly
    dependent face spans integrate to zero and are skipped.  With eps = 0
    the direction kernel is unbounded unless the bodies are in general
    position, which is checked up front; eps > 0 evaluates the cutoff
    kernel F^(eps) instead and always converges (monotone in eps).
    """
    if len(polytopes) < 2:
        raise InputError("need at least two bodies")
    d = polytopes[0].dim
    if any(p.dim != d for p in polytopes):
        raise InputError("ambient dimension mismatch")
    n = tuple(int(x) for x in n)
    if len(n) != len(polytopes):
        raise InputError("one degree per body required")
    if sum(n) != d:
        raise InputError("degrees must sum to the dimension")
    if eps < 0:
        raise InputError("eps must be nonnegative")
    if eps == 0.0 and not general_position(polytopes, n, "mixed-volume"):
        raise DivergenceError(
            "bodies are not in general position for these degrees; the "
            "direction kernel is unbounded on the flag support (use eps > 0)")
    est = _flag_sum(polytopes, n, "n", rng, eps, samples, threads,
                    dmatrix_cache)
    return est.scaled(1.0 / multinomial(d, n))


def flag_mixed_functional(polytopes, r, rng=None, eps: float = 0.0,
                          samples: int = 40000, threads: int = 1,
                          dmatrix_cache=None) -> MCEstimate:
    """Mixed translative functional V_r from flag measures.

    Sums E[G_r * psi_r * prod <U_i,T_i>^2] over face tuples of dimensions
    r_i; no multinomial factor applies.  General (r)-position (no choice of
    cone normals capturing 0 in its hull) is required for eps = 0.
    """
    if len(polytopes) < 2:
        raise InputError("need at least two bodies")
    d = polytopes[0].dim
    if any(p.dim != d for p in polytopes):
        raise InputError("ambient dimension mismatch")
    r = tuple(int(x) for x in r)
    if len(r) != len(polytopes):
        raise InputError("one degree per body required")
    if any(not 1 <= ri <= d - 1 for ri in r):
        raise InputError(f"degrees must lie in [1, {d - 1}]")
    if sum(r) < (len(r) - 1) * d:
        raise InputError("degree sum below (k-1)*d")
    if eps < 0:
        raise InputError("eps must be nonnegative")
    if eps == 0.0 and not general_position(polytopes, r, "translative"):
        raise DivergenceError(
            "bodies are not in general (r)-position for these degrees; the "
            "hull-distance kernel is unbounded on the flag support "
            "(use eps > 0)")
    return _flag_sum(polytopes, r, "r", rng, eps, samples, threads,
                     dmatrix_cache)
