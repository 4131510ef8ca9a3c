"""Mixed volumes of convex polytopes by mutually independent routes.

Routes
------
oracle_mixed_volumes    polynomial expansion of vol(t_1 K_1 + ... + t_k K_k)
schneider_mixed_volume  random-shift face selection rule (exact up to LP tol)
angle_mixed_volume      normal-cone quadrature of the spread kernel F_n
epsilon_mixed_volume    same with the cutoff kernel F_n^(eps), always finite

Every route returns the mixed volume itself: the expansion identities carry
binom(d; n_1..n_k) on their left-hand sides, and that multinomial factor is
divided out here before returning.  Keep the two bookkeepings straight when
editing; the cross-route tests will catch factor drift immediately.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cones import (ShiftedCone, _probe_common_ray, _ray_points,
                    cone_sphere_samples, cones_intersect, random_admissible,
                    random_direction_tuple)
from .errors import DivergenceError, InputError
from .estimates import MCEstimate, combine_product, combine_sum, from_indicator, from_samples
from .exterior import subspace_determinant
from .kernels import KernelSpec, kernel_values
from .polytope import Polytope, sum_volume
from .util import as_rng, multinomial, parallel_map, spawn_rngs

_BRACKET_TOL = 1e-12
_PROBE_TOL = 1e-9


@dataclass(frozen=True)
class MixedVolumeTable:
    """All mixed volumes of a fixed body list, keyed by multidegree.

    entries[(n_1..n_k)] = V(K_1[n_1], ..., K_k[n_k]); symmetric under any
    simultaneous permutation of bodies and degrees, with (d,0,...,0) equal
    to vol(K_1).  `errors` carries per-entry standard errors (empty for the
    deterministic oracle); `meta` carries fit diagnostics.
    """

    d: int
    entries: dict
    route: str
    errors: dict = field(default_factory=dict)
    seeds: tuple | None = None
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(next(iter(self.entries)))

    def value(self, degrees) -> float:
        key = tuple(int(n) for n in degrees)
        if key not in self.entries:
            raise InputError(f"no entry for multidegree {key}")
        return self.entries[key]

    def std_error(self, degrees) -> float:
        return self.errors.get(tuple(int(n) for n in degrees), 0.0)


def _check_bodies(polytopes, degrees):
    if len(polytopes) < 2:
        raise InputError("need at least two bodies")
    d = polytopes[0].dim
    if any(p.dim != d for p in polytopes):
        raise InputError("ambient dimension mismatch")
    degrees = tuple(int(n) for n in degrees)
    if len(degrees) != len(polytopes):
        raise InputError("one degree per body required")
    if any(n < 0 or n > d for n in degrees):
        raise InputError(f"degrees {degrees} out of range for d={d}")
    if sum(degrees) != d:
        raise InputError(f"degrees {degrees} must sum to d={d}")
    return d, degrees


def _compositions(total: int, k: int):
    if k == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, k - 1):
            yield (head,) + rest


# ---------------------------------------------------------------------------
# route 1: polynomial expansion


def oracle_mixed_volumes(polytopes, rtol: float = 1e-8) -> MixedVolumeTable:
    """Fit the degree-d polynomial t -> vol(t_1 K_1 + ... + t_k K_k).

    vol equals sum over |alpha| = d of binom(d; alpha) V(K[alpha]) t^alpha.
    The volume is evaluated on the grid {1..d+1}^k / (d+1) and the
    Vandermonde system solved by least squares; the multinomial weights are
    then stripped so entries are mixed volumes.  Max relative fit residual
    and the grid condition number are reported in `meta`.
    """
    if not polytopes:
        raise InputError("need at least one body")
    d = polytopes[0].dim
    if any(p.dim != d for p in polytopes):
        raise InputError("ambient dimension mismatch")
    k = len(polytopes)
    alphas = list(_compositions(d, k))
    grid = [np.array(t, dtype=float) / (d + 1)
            for t in itertools.product(range(1, d + 2), repeat=k)]
    a = np.array([[float(np.prod(t ** np.array(al))) for al in alphas]
                  for t in grid])
    y = np.array([sum_volume(t, polytopes) for t in grid])
    cond = float(np.linalg.cond(a))
    if cond > 1e10:
        raise InputError(f"expansion grid ill-conditioned (cond={cond:.3e})")
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = float(np.max(np.abs(a @ coef - y))) / max(1.0, float(np.max(np.abs(y))))
    entries = {al: float(c) / multinomial(d, al) for al, c in zip(alphas, coef)}
    return MixedVolumeTable(d, entries, "oracle",
                            meta={"residual": resid, "cond": cond, "rtol": rtol})


# ---------------------------------------------------------------------------
# route 2: random-shift selection rule


def schneider_mixed_volume(polytopes, degrees, rng=None, shifts=None) -> float:
    """Selection-rule sum over face tuples, exact up to LP/hull tolerance.

    binom(d; n) V = sum* of [F_1,..,F_k] prod_i H^{n_i}(F_i), the star
    keeping tuples whose shifted normal cones N(P_i, F_i) - x_i share a
    point for one admissible x in L^perp cap S^{kd-1}.  Almost every draw
    is admissible and the sum does not depend on the draw; pass `shifts`
    to pin x.  Returns the mixed volume (multinomial divided out).
    """
    d, degrees = _check_bodies(polytopes, degrees)
    k = len(polytopes)
    if shifts is None:
        shifts = random_admissible(polytopes, degrees, as_rng(rng))
    x = np.asarray(shifts, dtype=float)
    if x.shape != (k, d):
        raise InputError(f"shifts must have shape {(k, d)}")
    total = 0.0
    for tup in itertools.product(*[p.faces(n) for p, n in zip(polytopes, degrees)]):
        br = subspace_determinant([f.frame for f in tup])
        if br <= _BRACKET_TOL:
            continue
        shifted = [ShiftedCone(f.normal_cone, xi) for f, xi in zip(tup, x)]
        if cones_intersect(shifted):
            total += br * math.prod(f.measure for f in tup)
    return total / multinomial(d, degrees)


# ---------------------------------------------------------------------------
# route 3: mixed exterior angles and the cone-quadrature sum


def _finite_cone_combos(cones):
    # product of ray atoms; only valid when every cone has dim <= 1
    pts = [_ray_points(c) for c in cones]
    return np.array(list(itertools.product(*pts)))


def mixed_exterior_angle(faces, polytopes, degrees, rng=None,
                         route: str = "cone-quadrature",
                         samples: int | None = None) -> MCEstimate:
    """beta(F_1..F_k) in [0, 1], the k-body generalization of the external angle.

    cone-quadrature: [F_1..F_k] times the integral of F_n over the product
    of normal-cone spheres; cones that are finite point sets are enumerated
    exactly, curved ones are sampled uniformly with measure weights.

    admissible-mc: the fraction of uniform draws x in L^perp cap S^{kd-1}
    for which the shifted cones N(P_i,F_i) - x_i share a point.  Both
    routes estimate the same number (the sphere-section identity behind
    the selection rule); cross-checking them is the point of having two.
    """
    d, degrees = _check_bodies(polytopes, degrees)
    k = len(polytopes)
    if len(faces) != k:
        raise InputError("one face per body required")
    for f, n in zip(faces, degrees):
        if f.dim != n:
            raise InputError(f"face of dimension {f.dim} does not match degree {n}")
    rng = as_rng(rng)

    if route == "admissible-mc":
        n_draws = samples or 2000
        hits = 0
        for _ in range(n_draws):
            x = random_direction_tuple(d, k, rng)
            shifted = [ShiftedCone(f.normal_cone, xi) for f, xi in zip(faces, x)]
            if cones_intersect(shifted):
                hits += 1
        return from_indicator(hits, n_draws)
    if route != "cone-quadrature":
        raise InputError(f"unknown route {route!r}")

    cones = [f.normal_cone for f in faces]
    # probe before the bracket shortcut: a shared ray forces bracket 0 when
    # the degrees sum to d, but the kernel integral itself still diverges
    if _probe_common_ray(cones, d, _PROBE_TOL):
        raise DivergenceError("normal cones share a ray; the spread kernel "
                              "is not integrable on this face tuple")
    br = subspace_determinant([f.frame for f in faces])
    if br <= _BRACKET_TOL:
        return MCEstimate.exact(0.0)
    spec = KernelSpec(d, degrees, "n")
    if all(c.dim <= 1 for c in cones):
        total = float(np.sum(kernel_values(spec, _finite_cone_combos(cones))))
        return MCEstimate.exact(min(br * total, 1.0))
    n_draws = samples or 20000
    draws, measures = [], []
    for c in cones:
        us, m = cone_sphere_samples(c, n_draws, rng)
        draws.append(us)
        measures.append(m)
    vals = kernel_values(spec, np.stack(draws, axis=1))
    out = combine_product([from_samples(vals)] + measures).scaled(br)
    return MCEstimate(min(max(out.value, 0.0), 1.0), out.std_error, out.samples)


def _tuple_weights(tuples):
    return np.array([br * br * math.prod(f.measure for f in tup)
                     for tup, br in tuples])


def _split_budget(weights: np.ndarray, per_tuple: int, floor: int = 32):
    total = per_tuple * len(weights)
    s = float(weights.sum())
    if s <= 0.0:
        return [floor] * len(weights)
    return [max(floor, int(round(total * w / s))) for w in weights]


def _corollary_sum(polytopes, degrees, rng, samples, eps, probe, threads) -> MCEstimate:
    """Sum of br^2 * prod H^{n_i}(F_i) * int F_n over face tuples.

    This is the right-hand side of the cone-quadrature expansion of
    binom(d; n) V; callers divide by the multinomial.  Per-tuple RNG
    streams are spawned in fixed tuple order, so a fixed master seed gives
    pointwise-coupled draws across different eps values (the cutoff only
    masks samples, which makes the estimate monotone in eps).
    """
    d, degrees = _check_bodies(polytopes, degrees)
    pools = [p.faces(n) for p, n in zip(polytopes, degrees)]
    if any(not pool for pool in pools):
        return MCEstimate.exact(0.0)
    tuples = []
    for tup in itertools.product(*pools):
        br = subspace_determinant([f.frame for f in tup])
        if br > _BRACKET_TOL:
            tuples.append((tup, br))
    if not tuples:
        return MCEstimate.exact(0.0)
    spec = KernelSpec(d, degrees, "n", epsilon=eps)
    rngs = spawn_rngs(rng, len(tuples))
    budgets = _split_budget(_tuple_weights(tuples), samples)

    def one(i: int) -> MCEstimate:
        tup, br = tuples[i]
        cones = [f.normal_cone for f in tup]
        if probe and _probe_common_ray(cones, d, _PROBE_TOL):
            raise DivergenceError(
                "normal cones share a ray on a positive-weight face tuple; "
                "the quadrature sum diverges (use the eps variant)")
        scale = br * br * math.prod(f.measure for f in tup)
        if all(c.dim <= 1 for c in cones):
            total = float(np.sum(kernel_values(spec, _finite_cone_combos(cones),
                                               rng=rngs[i])))
            return MCEstimate.exact(scale * total)
        draws, measures = [], []
        for c in cones:
            us, m = cone_sphere_samples(c, budgets[i], rngs[i])
            draws.append(us)
            measures.append(m)
        vals = kernel_values(spec, np.stack(draws, axis=1), rng=rngs[i])
        return combine_product([from_samples(vals)] + measures).scaled(scale)

    return combine_sum(parallel_map(one, range(len(tuples)), threads=threads))


def angle_mixed_volume(polytopes, degrees, rng=None, samples: int = 20000,
                       threads: int = 1) -> MCEstimate:
    """Mixed volume via the cone-quadrature expansion.

    binom(d; n) V = sum over face tuples of [F_1..F_k]^2 prod H^{n_i}(F_i)
    times the integral of F_n over the product of normal-cone spheres; the
    bracket appears once inside the per-tuple angle and once as the tuple
    weight.  `samples` is the per-tuple budget before proportional
    reallocation.  Raises DivergenceError when some tuple's cones share a
    ray (non-general position).
    """
    d, degrees = _check_bodies(polytopes, degrees)
    est = _corollary_sum(polytopes, degrees, rng, samples, 0.0, True, threads)
    return est.scaled(1.0 / multinomial(d, degrees))


def epsilon_mixed_volume(polytopes, degrees, eps: float, rng=None,
                         samples: int = 20000, threads: int = 1) -> MCEstimate:
    """Cutoff variant of angle_mixed_volume, finite for every input.

    Uses F_n^(eps) = F_n restricted to spread >= eps, so no divergence
    probe is needed; values increase monotonically to the mixed volume as
    eps decreases (couple runs with a fixed seed to see this pointwise).
    """
    if eps <= 0.0:
        raise InputError("eps must be positive; use angle_mixed_volume for eps=0")
    d, degrees = _check_bodies(polytopes, degrees)
    est = _corollary_sum(polytopes, degrees, rng, samples, eps, False, threads)
    return est.scaled(1.0 / multinomial(d, degrees))
