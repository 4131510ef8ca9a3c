"""Mixed translative functionals V_{r_1..r_k}.

Two independent evaluations are kept side by side: curvature_mixed_functional
sums the hull-distance kernel G_r over products of normal-cone spheres
(deterministic quadrature for d <= 3), and translative_integral_mc samples the
defining translation integral int V_j of the intersection body, which
decompose_homogeneous then splits into the individual V_r by a scaling fit.
Unlike mixed volumes, no multinomial factor is divided out anywhere here; the
two conventions meet in duality_check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cones import _arc_interval, _probe_zero_in_hull, _ray_points
from .errors import DivergenceError, EstimationError, InputError
from .estimates import MCEstimate, from_samples
from .exterior import subspace_determinant
from .kernels import KernelSpec, hull_distance_batch, kernel_values
from .mixed_volume import oracle_mixed_volumes
from .polytope import Polytope, minkowski_sum
from .util import as_rng, chunk_sizes, complete_basis

_DET_TOL = 1e-9
_FEAS_TOL = 1e-9
# frame bases carry O(1e-8) rounding after the Gram-determinant square root,
# so brackets below this are exactly dependent configurations; they enter
# squared, hence dropping them changes nothing above 1e-14
_BRACKET_TOL = 1e-7


@dataclass(frozen=True)
class TranslativeTable:
    """V_r values for all multidegrees r_i in [0,d] with sum (k-1)d + j.

    The r_i = 0 slots make the entry independent of the corresponding body,
    and an r_i = d slot splits off a factor vol(K_i); both are cheap
    consistency probes on a fitted table.
    """

    d: int
    j: int
    entries: dict
    route: str
    errors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(next(iter(self.entries)))

    def value(self, r) -> float:
        key = tuple(int(x) for x in r)
        if key not in self.entries:
            raise InputError(f"no entry for multidegree {key}")
        return self.entries[key]

    def std_error(self, r) -> float:
        return self.errors.get(tuple(int(x) for x in r), 0.0)

    def total(self) -> MCEstimate:
        value = sum(self.entries.values())
        se = math.sqrt(sum(e * e for e in self.errors.values()))
        return MCEstimate(value, se, self.meta.get("samples", 0))


def _check_translative(polytopes, j: int):
    if len(polytopes) < 2:
        raise InputError("need at least two bodies")
    d = polytopes[0].dim
    if any(p.dim != d for p in polytopes):
        raise InputError("ambient dimension mismatch")
    if d > 3:
        raise InputError("translation sampling is implemented for d <= 3")
    if not (0 <= j <= d - 1):
        raise InputError(f"j={j} out of range for d={d}")
    return d


def _degree_tuples(d: int, k: int, j: int):
    total = (k - 1) * d + j
    out = [r for r in itertools.product(range(d + 1), repeat=k) if sum(r) == total]
    return sorted(out, reverse=True)


# ---------------------------------------------------------------------------
# curvature representation (deterministic route)


def _cone_nodes(cone, order: int):
    """(directions, weights) quadrature nodes for one normal-cone sphere."""
    if cone.dim == 1:
        pts = _ray_points(cone)
        return pts, np.ones(len(pts))
    if cone.dim == 2:
        start, length, q = _arc_interval(cone)
        x, w = np.polynomial.legendre.leggauss(order)
        theta = start + 0.5 * (x + 1.0) * length
        us = np.stack([np.cos(theta), np.sin(theta)], axis=1) @ q.T
        return us, w * 0.5 * length
    raise InputError("deterministic cone quadrature needs cone dimension <= 2 "
                     "(ambient d <= 3)")


def _tensor_pass(spec: KernelSpec, cones, order: int) -> float:
    nodes = [_cone_nodes(c, order) for c in cones]
    sizes = [len(w) for _, w in nodes]
    grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
    idx = np.stack([g.reshape(-1) for g in grids], axis=1)
    us = np.stack([nodes[i][0][idx[:, i]] for i in range(len(cones))], axis=1)
    w = np.prod(np.stack([nodes[i][1][idx[:, i]] for i in range(len(cones))],
                         axis=1), axis=1)
    return float(w @ kernel_values(spec, us))


def _gl_refine(f, a: float, b: float, rtol: float) -> float:
    order, prev = 16, None
    while order <= 1024:
        x, w = np.polynomial.legendre.leggauss(order)
        cur = 0.5 * (b - a) * float(w @ f(a + 0.5 * (x + 1.0) * (b - a)))
        if prev is not None and abs(cur - prev) <= rtol * max(1.0, abs(cur)):
            return cur
        prev, order = cur, order * 2
    raise EstimationError("cone quadrature did not stabilize; the integrand "
                          "is near-singular (try the eps variant)")


def _sign_changes(gap, lo: float, hi: float, n: int = 512,
                  tol: float = 1e-12) -> list:
    """Roots of a scalar function on [lo, hi], located by a dense scan plus
    bisection.  gap takes and returns arrays."""
    xs = np.linspace(lo, hi, n + 1)
    g = gap(xs)
    out = []
    for i in range(n):
        a, b, ga, gb = xs[i], xs[i + 1], g[i], g[i + 1]
        if ga == 0.0 or ga * gb >= 0.0:
            continue
        while b - a > tol:
            mid = 0.5 * (a + b)
            gm = float(gap(np.array([mid]))[0])
            if gm == 0.0:
                break
            if (gm > 0.0) == (ga > 0.0):
                a, ga = mid, gm
            else:
                b = mid
        out.append(0.5 * (a + b))
    return out


def _cutoff_arc_integral(spec: KernelSpec, cones, ai: int, rtol: float) -> float:
    """Arc integral with a positive cutoff: the integrand jumps where the
    hull distance crosses eps, so split there and refine each live piece."""
    start, length, q = _arc_interval(cones[ai])
    others = [_ray_points(c) for i, c in enumerate(cones) if i != ai]
    k = len(cones)
    total = 0.0
    for combo in itertools.product(*[range(len(p)) for p in others]):
        def tuples(theta):
            us = np.empty((len(theta), k, q.shape[0]))
            arc = np.stack([np.cos(theta), np.sin(theta)], axis=1) @ q.T
            us[:, ai, :] = arc
            m = 0
            for i in range(k):
                if i != ai:
                    us[:, i, :] = others[m][combo[m]]
                    m += 1
            return us

        def gap(theta):
            return hull_distance_batch(tuples(theta)) - spec.epsilon

        def f(theta):
            return kernel_values(spec, tuples(theta))

        cuts = [start] + _sign_changes(gap, start, start + length) \
            + [start + length]
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b - a < 1e-12 or gap(np.array([0.5 * (a + b)]))[0] <= 0.0:
                continue
            total += _gl_refine(f, a, b, rtol)
    return total


def _cone_product_integral(spec: KernelSpec, cones, rtol: float = 1e-9) -> float:
    """int G_r over the product of cone spheres; exact for finite cones,
    panel-free GL refinement for arcs (node count doubles until stable).
    With a positive cutoff the integrand is only piecewise smooth, so the
    single arc (d <= 3 never yields more) is split at the cutoff first."""
    if all(c.dim <= 1 for c in cones):
        return _tensor_pass(spec, cones, 0)
    if spec.epsilon > 0.0:
        arcs = [i for i, c in enumerate(cones) if c.dim == 2]
        if len(arcs) == 1:
            return _cutoff_arc_integral(spec, cones, arcs[0], rtol)
    order, prev = 16, None
    while order <= 1024:
        cur = _tensor_pass(spec, cones, order)
        if prev is not None and abs(cur - prev) <= rtol * max(1.0, abs(cur)):
            return cur
        prev, order = cur, order * 2
    raise EstimationError("cone quadrature did not stabilize; the integrand "
                          "is near-singular (try the eps variant)")


def curvature_mixed_functional(polytopes, r, eps: float = 0.0) -> float:
    """V_r by the normal-bundle representation.

    V_r = sum over face tuples (dim F_i = r_i) of
          prod_i H^{r_i}(F_i) * [lin(F_1)^perp, .., lin(F_k)^perp]^2
          * int G_r over n(P_1,F_1) x .. x n(P_k,F_k);
    the bracket is the subspace determinant of the normal spans, constant on
    each tuple.  Deterministic for d <= 3 (cones are points or arcs).  With
    eps=0, a tuple whose cones can capture 0 in a convex combination is
    probed first and reported as divergent; eps > 0 cuts the kernel off at
    hull distance eps and always converges.
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
    spec = KernelSpec(d, r, "r", epsilon=eps)
    total = 0.0
    for tup in itertools.product(*[p.faces(ri) for p, ri in zip(polytopes, r)]):
        br = subspace_determinant([f.normal_cone.span for f in tup])
        if br <= _BRACKET_TOL:
            continue
        cones = [f.normal_cone for f in tup]
        if eps == 0.0 and any(c.dim >= 2 for c in cones) and \
                _probe_zero_in_hull(cones, d, _DET_TOL):
            raise DivergenceError(
                "0 lies in the convex hull of normal picks on a "
                "positive-weight face tuple; V_r quadrature diverges "
                "(use eps > 0)")
        weight = br * br * math.prod(f.measure for f in tup)
        total += weight * _cone_product_integral(spec, cones)
    return total


# ---------------------------------------------------------------------------
# translation-integral sampling (MC route)


class _VertexEngine:
    """Batched vertex enumeration for K_1 cap (K_2+z_2) cap ... over many z.

    The stacked H-representation has right-hand side affine in z, so each
    d-subset of rows yields a candidate vertex that is affine in z as well;
    candidates and feasibility masks come out vectorized over samples.
    """

    def __init__(self, polytopes):
        d = polytopes[0].dim
        k = len(polytopes)
        systems = [p.halfspaces() for p in polytopes]
        self.A = np.vstack([a for a, _ in systems])
        self.b = np.concatenate([b for _, b in systems])
        m = self.A.shape[0]
        self.C = np.zeros((m, (k - 1) * d))
        ofs = systems[0][0].shape[0]
        for i in range(1, k):
            mi = systems[i][0].shape[0]
            self.C[ofs:ofs + mi, (i - 1) * d:i * d] = systems[i][0]
            ofs += mi
        idx = np.array(list(itertools.combinations(range(m), d)))
        mats = self.A[idx]
        keep = np.abs(np.linalg.det(mats)) > _DET_TOL
        idx = idx[keep]
        inv = np.linalg.inv(mats[keep])
        self.base = np.einsum("sij,sj->si", inv, self.b[idx])
        self.slope = np.einsum("sij,sjm->sim", inv, self.C[idx])
        self.scale = max(1.0, float(np.max(np.abs(self.b))))

    def candidates(self, z: np.ndarray):
        """(vertices (N, S, d), feasibility (N, S)) for z of shape (N, (k-1)d)."""
        x = self.base[None] + np.einsum("sdm,nm->nsd", self.slope, z)
        bz = self.b[None] + z @ self.C.T
        lhs = np.einsum("md,nsd->nsm", self.A, x)
        feas = (lhs <= bz[:, None, :] + _FEAS_TOL * self.scale).all(axis=2)
        return x, feas


def _poly2d_values(x: np.ndarray, feas: np.ndarray, j: int) -> np.ndarray:
    """V_j (j=1 semiperimeter, j=2 area) per sample from candidate vertices.

    Vertices are angle-sorted around the valid-point centroid; invalid slots
    are replaced by the first sorted vertex, which adds zero-length edges
    and leaves both the shoelace sum and the perimeter unchanged.
    """
    cnt = feas.sum(axis=1)
    safe = np.maximum(cnt, 1)[:, None]
    cen = np.where(feas[..., None], x, 0.0).sum(axis=1) / safe
    ang = np.arctan2(x[..., 1] - cen[:, 1:2], x[..., 0] - cen[:, 0:1])
    ang = np.where(feas, ang, np.inf)
    order = np.argsort(ang, axis=1)
    xs = np.take_along_axis(x, order[..., None], axis=1)
    ok = np.take_along_axis(feas, order, axis=1)
    xs = np.where(ok[..., None], xs, xs[:, :1])
    nxt = np.roll(xs, -1, axis=1)
    if j == 2:
        cross = xs[..., 0] * nxt[..., 1] - xs[..., 1] * nxt[..., 0]
        vals = 0.5 * np.abs(cross.sum(axis=1))
    else:
        vals = 0.5 * np.linalg.norm(nxt - xs, axis=2).sum(axis=1)
    vals[cnt < 3] = 0.0
    return vals


def _poly3d_value(pts: np.ndarray, planes_a: np.ndarray, planes_b: np.ndarray,
                  frames, j: int, tol: float) -> float:
    """V_1 or V_2 of one intersection polytope from its vertices and planes."""
    key = np.round(pts / tol).astype(np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    pts = pts[np.sort(first)]
    if pts.shape[0] < 4:
        return 0.0
    area_total = 0.0
    edges: dict = {}
    for i in range(planes_a.shape[0]):
        on = np.abs(pts @ planes_a[i] - planes_b[i]) <= tol
        if int(on.sum()) < 3:
            continue
        ring = pts[on]
        uv = (ring - ring.mean(axis=0)) @ frames[i]
        order = np.argsort(np.arctan2(uv[:, 1], uv[:, 0]))
        ring = ring[order]
        uv = uv[order]
        nxt = np.roll(uv, -1, axis=0)
        area_total += 0.5 * abs(float(np.sum(uv[:, 0] * nxt[:, 1] - uv[:, 1] * nxt[:, 0])))
        if j == 1:
            rk = np.round(ring / tol).astype(np.int64)
            for a in range(ring.shape[0]):
                bidx = (a + 1) % ring.shape[0]
                kk = (tuple(rk[a]), tuple(rk[bidx]))
                kk = kk if kk[0] <= kk[1] else (kk[1], kk[0])
                length = float(np.linalg.norm(ring[bidx] - ring[a]))
                if length > tol:
                    edges.setdefault(kk, []).append((i, length))
    if j == 2:
        return 0.5 * area_total
    v1 = 0.0
    for _, hits in edges.items():
        if len(hits) != 2:
            continue
        (ia, la), (ib, _) = hits
        cosang = float(np.clip(planes_a[ia] @ planes_a[ib], -1.0, 1.0))
        v1 += la * math.acos(cosang) / (2.0 * math.pi)
    return v1


def _sample_boxes(polytopes):
    """Per-body translation boxes covering {z : K_1 cap (K_i + z) != empty}."""
    lo1 = polytopes[0].vertices.min(axis=0)
    hi1 = polytopes[0].vertices.max(axis=0)
    lows, highs = [], []
    for p in polytopes[1:]:
        # bounding box of K_1 + (-K_i), inflated to dodge boundary bias
        lows.append(lo1 - p.vertices.max(axis=0) - 1e-9)
        highs.append(hi1 - p.vertices.min(axis=0) + 1e-9)
    return np.concatenate(lows), np.concatenate(highs)


def _translative_value(polytopes, j: int, unit: np.ndarray) -> MCEstimate:
    d = polytopes[0].dim
    k = len(polytopes)
    lo, hi = _sample_boxes(polytopes)
    z = lo[None] + unit * (hi - lo)[None]
    box_volume = float(np.prod(hi - lo))

    if j == 0 and k == 2:
        diff = minkowski_sum(polytopes[0], polytopes[1].negate())
        a, b = diff.halfspaces()
        ind = (z @ a.T <= b[None] + _FEAS_TOL).all(axis=1)
        return from_samples(ind.astype(float)).scaled(box_volume)

    engine = _VertexEngine(polytopes)
    vals = np.empty(unit.shape[0])
    ofs = 0
    for size in chunk_sizes(unit.shape[0], 4096 if d == 2 else 512):
        zc = z[ofs:ofs + size]
        x, feas = engine.candidates(zc)
        if j == 0:
            vals[ofs:ofs + size] = feas.any(axis=1).astype(float)
        elif d == 2:
            vals[ofs:ofs + size] = _poly2d_values(x, feas, j)
        else:
            frames = [complete_basis(n.reshape(-1, 1)) for n in engine.A]
            bz = engine.b[None] + zc @ engine.C.T
            tol = 1e-7 * engine.scale
            for s in range(size):
                vals[ofs + s] = _poly3d_value(x[s][feas[s]], engine.A, bz[s],
                                              frames, j, tol)
        ofs += size
    return from_samples(vals).scaled(box_volume)


def translative_integral_mc(polytopes, j: int, rng=None,
                            samples: int = 100000) -> MCEstimate:
    """Monte Carlo value of int V_j(K_1 cap (K_2+z_2) cap ...) dz_2..dz_k.

    Translations are uniform over the Minkowski-difference bounding boxes
    (the integrand vanishes outside).  The intersection is evaluated per
    sample by stacked-halfspace vertex enumeration; empty and lower-
    dimensional intersections contribute 0.  By the translative expansion
    this equals the sum of V_r over all r with sum r = (k-1)d + j.
    """
    d = _check_translative(polytopes, j)
    k = len(polytopes)
    rng = as_rng(rng)
    unit = rng.random((samples, (k - 1) * d))
    return _translative_value(polytopes, j, unit)


def decompose_homogeneous(polytopes, j: int, rng=None, samples: int = 20000,
                          lambdas=(1.0, 1.5, 2.0)) -> TranslativeTable:
    """Split the translation integral into its multihomogeneous pieces.

    Runs _translative_value on every lambda-scaled body combination with
    shared uniform draws (common random numbers), then least-squares fits
    int = sum_r (prod_i lambda_i^{r_i}) V_r.  Errors are propagated through
    the fit conservatively (CRN correlates the grid values, so per-entry
    sigmas are the absolute row sums of the pseudoinverse times the grid
    sigmas).
    """
    d = _check_translative(polytopes, j)
    k = len(polytopes)
    rng = as_rng(rng)
    r_list = _degree_tuples(d, k, j)
    combos = list(itertools.product([float(v) for v in lambdas], repeat=k))
    design = np.array([[math.prod(lam ** ri for lam, ri in zip(combo, r))
                        for r in r_list] for combo in combos])
    cond = float(np.linalg.cond(design))
    if cond > 1e8:
        raise EstimationError(f"homogeneous fit ill-conditioned (cond={cond:.3e})")
    unit = rng.random((samples, (k - 1) * d))
    grid = []
    for combo in combos:
        scaled = [p.transform(np.eye(d) * lam) for p, lam in zip(polytopes, combo)]
        grid.append(_translative_value(scaled, j, unit))
    y = np.array([g.value for g in grid])
    sig = np.array([g.std_error for g in grid])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    pinv = np.linalg.pinv(design)
    err = np.abs(pinv) @ sig
    resid = float(np.max(np.abs(design @ coef - y)))
    entries = {r: float(c) for r, c in zip(r_list, coef)}
    errors = {r: float(e) for r, e in zip(r_list, err)}
    return TranslativeTable(d, j, entries, "mc-decomposition", errors,
                            meta={"cond": cond, "fit_residual": resid,
                                  "samples": samples, "lambdas": tuple(lambdas)})


def duality_check(K: Polytope, L: Polytope, n: int):
    """(V_{n,d-n}(K, L), binom(d,n) * V(K[n], -L[d-n])) for comparison.

    The two sides agree for all convex bodies; both evaluations here are
    deterministic (curvature quadrature vs expansion oracle).
    """
    d = K.dim
    if L.dim != d:
        raise InputError("ambient dimension mismatch")
    if not (1 <= n <= d - 1):
        raise InputError(f"n={n} out of range for d={d}")
    lhs = curvature_mixed_functional([K, L], (n, d - n))
    table = oracle_mixed_volumes([K, L.negate()])
    rhs = float(math.comb(d, n)) * table.value((n, d - n))
    return lhs, rhs
