"""Convex polytopes with explicit face lattices and normal cones.

Construction is brute force over vertex subsets (desk scale: ambient
dimension <= 4, a few dozen vertices).  Lower-dimensional bodies (segments,
points) are supported through `Polytope.hull(..., allow_degenerate=True)`;
their faces include the relative-interior top face, whose normal cone picks
up lineality.  `hull_from_points` keeps the strict contract and raises on
degenerate input.

All derived data is deterministic: vertices are sorted lexicographically,
facets by (normal, offset), faces by (dim, vertex ids).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InputError
from .estimates import MCEstimate
from .exterior import Subspace
from .util import multinomial, kappa, omega, orthonormal_columns

_TOL = 1e-9


# ---------------------------------------------------------------------------
# faces and normal cones


@dataclass(frozen=True, eq=False)
class NormalCone:
    """Normal cone N(P, F) = {u : <u, v - c_F> <= 0 for all vertices v}.

    `ineq` rows are the unit-normalized (v - c_F); the solution set of the
    inequalities equals the cone exactly (face vertices force equality).
    `span` is an orthonormal frame of lin(F)^perp, the linear span of the
    cone.  `lineality_dim` > 0 happens only for lower-dimensional bodies.
    """

    ineq: np.ndarray
    span: np.ndarray
    generators: np.ndarray
    lineality_dim: int

    @property
    def ambient_dim(self) -> int:
        return self.span.shape[0]

    @property
    def dim(self) -> int:
        """Linear dimension of the cone (= d - dim F)."""
        return self.span.shape[1]

    @property
    def sphere_dim(self) -> int:
        return self.dim - 1

    @property
    def pointed(self) -> bool:
        return self.lineality_dim == 0

    def contains(self, u, tol: float = 1e-9) -> bool:
        u = np.asarray(u, dtype=float)
        if self.ineq.shape[0] and float(np.max(self.ineq @ u)) > tol:
            return False
        resid = u - self.span @ (self.span.T @ u)
        return bool(np.linalg.norm(resid) <= tol * max(1.0, np.linalg.norm(u)))

    def member_mask(self, us: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Vectorized membership for unit vectors already inside the span."""
        if self.ineq.shape[0] == 0:
            return np.ones(us.shape[0], dtype=bool)
        return (us @ self.ineq.T <= tol).all(axis=1)


@dataclass(frozen=True, eq=False)
class Face:
    vertex_ids: tuple
    dim: int
    vertices: np.ndarray
    frame: Subspace            # direction space of aff F
    centroid: np.ndarray
    measure: float             # H^dim of the face
    normal_cone: NormalCone


def _build_cone(all_vertices: np.ndarray, face_vertices: np.ndarray,
                face_frame: Subspace, facet_normals: np.ndarray,
                lineality_basis: np.ndarray) -> NormalCone:
    c = face_vertices.mean(axis=0)
    rows = all_vertices - c
    keep = np.linalg.norm(rows, axis=1) > 1e-12
    rows = rows[keep]
    if rows.shape[0]:
        rows = rows / np.linalg.norm(rows, axis=1, keepdims=True)
    span = face_frame.complement().frame
    gens = [facet_normals] if facet_normals.size else []
    for q in lineality_basis.T:
        gens.append(q.reshape(1, -1))
        gens.append(-q.reshape(1, -1))
    generators = np.vstack(gens) if gens else np.zeros((0, all_vertices.shape[1]))
    lin_dim = lineality_basis.shape[1]
    return NormalCone(ineq=rows, span=span, generators=generators, lineality_dim=lin_dim)


# ---------------------------------------------------------------------------
# brute-force hull in full-dimensional coordinates


def _dedupe_points(pts: np.ndarray, tol: float) -> np.ndarray:
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    out = []
    for p in pts:
        if not out:
            out.append(p)
            continue
        d = np.min(np.linalg.norm(np.asarray(out) - p, axis=1))
        if d > tol:
            out.append(p)
    return np.asarray(out)


def _batched_normals(diffs: np.ndarray) -> np.ndarray:
    """Vector orthogonal to dd-1 difference vectors in R^dd, dd in 1..4."""
    c, m, dd = diffs.shape
    if dd == 1:
        return np.ones((c, 1))
    if dd == 2:
        d0 = diffs[:, 0, :]
        return np.stack([-d0[:, 1], d0[:, 0]], axis=1)
    if dd == 3:
        return np.cross(diffs[:, 0, :], diffs[:, 1, :])
    if dd == 4:
        out = np.empty((c, 4))
        cols = np.arange(4)
        for i in range(4):
            minor = diffs[:, :, cols != i]
            out[:, i] = ((-1.0) ** i) * np.linalg.det(minor)
        return out
    raise InputError(f"ambient dimension {dd} not supported")


def _candidate_facets(pts: np.ndarray, tol: float):
    """All supporting hyperplanes through dd affinely independent points."""
    M, dd = pts.shape
    if dd == 1:
        lo, hi = np.argmin(pts[:, 0]), np.argmax(pts[:, 0])
        return [(np.array([-1.0]), -pts[lo, 0]), (np.array([1.0]), pts[hi, 0])]
    combos = np.array(list(itertools.combinations(range(M), dd)), dtype=int)
    planes = []
    chunk = max(1, 200000 // max(M, 1))
    for s in range(0, combos.shape[0], chunk):
        c = combos[s:s + chunk]
        base = pts[c[:, 0]]
        diffs = pts[c[:, 1:]] - base[:, None, :]
        normals = _batched_normals(diffs)
        mag = np.linalg.norm(normals, axis=1)
        ok = mag > 1e-12
        if not ok.any():
            continue
        normals = normals[ok] / mag[ok, None]
        offsets = np.einsum("ij,ij->i", normals, base[ok])
        side = pts @ normals.T - offsets  # (M, Cc)
        hi = side.max(axis=0)
        lo = side.min(axis=0)
        for i in np.flatnonzero(hi <= tol):
            planes.append((normals[i], offsets[i]))
        for i in np.flatnonzero(lo >= -tol):
            planes.append((-normals[i], -offsets[i]))
    return planes


def _dedupe_planes(planes, tol: float):
    reps = []
    for n, off in planes:
        found = False
        for rn, roff in reps:
            if np.linalg.norm(n - rn) <= 1e-6 and abs(off - roff) <= 10 * tol:
                found = True
                break
        if not found:
            reps.append((n, off))
    return reps


def _hull_core(pts: np.ndarray, tol: float):
    """Facets and extreme points of a full-dimensional point set.

    Returns (vertices, facet list) with facet = (unit normal, offset,
    vertex index tuple) referring to the returned vertex order.
    """
    M, dd = pts.shape
    planes = _dedupe_planes(_candidate_facets(pts, tol), tol)
    if not planes:
        raise DegenerateInputError("no supporting hyperplanes found")
    refined = []
    for n, off in planes:
        on = np.abs(pts @ n - off) <= 5 * tol
        sub = pts[on]
        # refit the plane through its incident points for better conditioning
        c = sub.mean(axis=0)
        if sub.shape[0] > dd:
            _, _, vt = np.linalg.svd(sub - c)
            n2 = vt[-1]
            if np.dot(n2, n) < 0:
                n2 = -n2
            off2 = float(np.dot(n2, c))
            if (pts @ n2 - off2).max() <= 5 * tol:
                n, off = n2, off2
        refined.append((n, float(off)))
    planes = _dedupe_planes(refined, tol)

    normals = np.array([p[0] for p in planes])
    offsets = np.array([p[1] for p in planes])
    active = np.abs(pts @ normals.T - offsets) <= 5 * tol  # (M, F)
    is_vertex = np.zeros(M, dtype=bool)
    for i in range(M):
        rows = normals[active[i]]
        if rows.shape[0] >= dd and np.linalg.matrix_rank(rows, tol=1e-8) == dd:
            is_vertex[i] = True
    verts = pts[is_vertex]
    if verts.shape[0] < dd + 1:
        raise DegenerateInputError("extreme point set is not full-dimensional")
    order = np.lexsort(verts.T[::-1])
    verts = verts[order]

    facets = []
    for n, off in planes:
        ids = tuple(int(i) for i in np.flatnonzero(np.abs(verts @ n - off) <= 5 * tol))
        if len(ids) >= dd:
            facets.append((n, off, ids))
    facets.sort(key=lambda f: (tuple(np.round(f[0], 12)), round(f[1], 12)))
    return verts, facets


# ---------------------------------------------------------------------------
# the polytope type


class Polytope:
    def __init__(self, vertices, facets, intrinsic_dim, origin, frame, name=None):
        self.vertices = vertices          # (V, d) ambient, lex sorted
        self.name = name or "polytope"
        self.intrinsic_dim = intrinsic_dim
        self._origin = origin
        self._frame = frame               # (d, intrinsic_dim)
        self.facets = facets              # ambient-lifted (normal, offset, vertex ids)
        self._lattice = None
        self._top = None

    # -- construction

    @staticmethod
    def hull(points, name=None, allow_degenerate=False) -> "Polytope":
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise InputError("expected a nonempty (m x d) array of points")
        d = pts.shape[1]
        scale = max(1.0, float(np.max(np.abs(pts))))
        tol = _TOL * scale
        pts = _dedupe_points(pts, tol)
        origin = pts.mean(axis=0)
        frame = orthonormal_columns((pts - origin).T, tol=1e-9 * scale)
        idim = frame.shape[1]
        if idim < d and not allow_degenerate:
            raise DegenerateInputError(
                f"points span an affine subspace of dimension {idim} < {d}",
                intrinsic_dim=idim,
            )
        if idim == 0:
            verts = pts[:1]
            return Polytope(verts, [], 0, verts[0], frame, name)
        local = (pts - origin) @ frame
        verts_local, facets_local = _hull_core(local, tol)
        verts = verts_local @ frame.T + origin
        order = np.lexsort(verts.T[::-1])
        inv = np.empty(len(order), dtype=int)
        inv[order] = np.arange(len(order))
        verts = verts[order]
        facets = []
        for n, off, ids in facets_local:
            n_amb = frame @ n
            ids_amb = tuple(sorted(int(inv[i]) for i in ids))
            off_amb = float(np.dot(n_amb, verts[ids_amb[0]]))
            facets.append((n_amb, off_amb, ids_amb))
        facets.sort(key=lambda f: (tuple(np.round(f[0], 12)), round(f[1], 12)))
        return Polytope(verts, facets, idim, origin, frame, name)

    # -- basic queries

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def is_full_dimensional(self) -> bool:
        return self.intrinsic_dim == self.dim

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        rel = x - self._origin
        resid = rel - self._frame @ (self._frame.T @ rel)
        if np.linalg.norm(resid) > tol * max(1.0, np.linalg.norm(x)):
            return False
        return all(float(np.dot(n, x)) <= off + tol for n, off, _ in self.facets)

    def halfspaces(self):
        """(A, b) with the body = {x : A x <= b}; full-dimensional bodies only."""
        if not self.is_full_dimensional():
            raise InputError("H-representation requires a full-dimensional body")
        A = np.array([f[0] for f in self.facets])
        b = np.array([f[1] for f in self.facets])
        return A, b

    def translate(self, t) -> "Polytope":
        return Polytope.hull(self.vertices + np.asarray(t, dtype=float),
                             name=self.name, allow_degenerate=True)

    def transform(self, matrix) -> "Polytope":
        return Polytope.hull(self.vertices @ np.asarray(matrix, dtype=float).T,
                             name=self.name, allow_degenerate=True)

    def negate(self) -> "Polytope":
        return Polytope.hull(-self.vertices, name=f"-{self.name}", allow_degenerate=True)

    # -- face lattice

    def _build_lattice(self):
        d = self.dim
        verts = self.vertices
        facet_sets = [frozenset(ids) for _, _, ids in self.facets]
        all_sets = set(facet_sets)
        work = list(all_sets)
        while work:
            new = []
            for s in work:
                for f in facet_sets:
                    t = s & f
                    if t and t not in all_sets:
                        all_sets.add(t)
                        new.append(t)
            work = new
        for i in range(self.n_vertices):
            s = frozenset([i])
            if s not in all_sets:
                # vertex of a body with no facets through it (e.g. a point body)
                all_sets.add(s)
        from .util import complete_basis

        lin_basis = complete_basis(self._frame, d) \
            if self.intrinsic_dim < d else np.zeros((d, 0))

        def make_face(idset) -> Face:
            ids = tuple(sorted(idset))
            fav = verts[list(ids)]
            centroid = fav.mean(axis=0)
            frame = Subspace.from_spanning((fav - centroid).T, ambient_dim=d) \
                if len(ids) > 1 else Subspace.zero(d)
            fdim = frame.dim
            fns = [n for (n, off, fids) in self.facets if idset <= frozenset(fids)]
            fn_arr = np.array(fns) if fns else np.zeros((0, d))
            cone = _build_cone(verts, fav, frame, fn_arr, lin_basis)
            return Face(ids, fdim, fav, frame, centroid, 0.0, cone)

        faces = [make_face(s) for s in all_sets]
        top = make_face(frozenset(range(self.n_vertices)))
        by_dim: dict[int, list[Face]] = {}
        for f in faces:
            if len(f.vertex_ids) == self.n_vertices:
                continue  # only possible for degenerate bodies; re-added as top below
            by_dim.setdefault(f.dim, []).append(f)
        if self.intrinsic_dim < d:
            # lower-dimensional body: the relative interior is a proper piece
            # of the normal bundle, so the top face belongs to the lattice
            by_dim.setdefault(self.intrinsic_dim, []).append(top)
        for k in by_dim:
            by_dim[k].sort(key=lambda f: f.vertex_ids)

        # bottom-up Hausdorff measures; fan decomposition over subfaces
        measures: dict[tuple, float] = {}

        def face_key(f: Face):
            return f.vertex_ids

        ordered = sorted(by_dim.get(0, []), key=face_key) if 0 in by_dim else []
        for f in ordered:
            measures[face_key(f)] = 1.0
        max_dim = max(by_dim) if by_dim else 0

        def compute_measure(f: Face):
            if f.dim == 0:
                return 1.0
            subs = [g for g in by_dim.get(f.dim - 1, [])
                    if set(g.vertex_ids) < set(f.vertex_ids)]
            total = 0.0
            for g in subs:
                w = f.centroid - g.centroid
                h = np.linalg.norm(w - g.frame.project(w))
                total += h * measures[face_key(g)]
            return total / f.dim

        for dd in range(1, max_dim + 1):
            for f in by_dim.get(dd, []):
                measures[face_key(f)] = compute_measure(f)

        # the top face (volume carrier); uses facet measures just computed
        if self.intrinsic_dim == d:
            subs = by_dim.get(d - 1, [])
            total = 0.0
            for g in subs:
                w = top.centroid - g.centroid
                h = np.linalg.norm(w - g.frame.project(w))
                total += h * measures[face_key(g)]
            top_measure = total / d if d else 1.0
        else:
            top_measure = measures[face_key(top)]

        def with_measure(f: Face) -> Face:
            return Face(f.vertex_ids, f.dim, f.vertices, f.frame, f.centroid,
                        measures[face_key(f)], f.normal_cone)

        lattice = {k: [with_measure(f) for f in v] for k, v in by_dim.items()}
        self._lattice = lattice
        self._top = Face(top.vertex_ids, self.intrinsic_dim, top.vertices, top.frame,
                         top.centroid, top_measure, top.normal_cone)

    def face_lattice(self) -> dict[int, list[Face]]:
        """Faces by dimension.  Full-dimensional bodies: proper faces 0..d-1.
        Lower-dimensional bodies additionally expose the relative-interior
        top face at its own dimension (its normal cone is nontrivial)."""
        if self._lattice is None:
            self._build_lattice()
        return self._lattice

    def faces(self, j: int) -> list[Face]:
        if j < 0:
            raise InputError("face dimension must be >= 0")
        return self.face_lattice().get(j, [])

    def volume(self) -> float:
        """H^d measure; 0 for lower-dimensional bodies."""
        if not self.is_full_dimensional():
            return 0.0
        if self._top is None:
            self._build_lattice()
        return self._top.measure

    def face_measure(self, face: Face) -> float:
        return face.measure

    def euler_check(self) -> bool:
        counts = {j: len(fs) for j, fs in self.face_lattice().items()
                  if j < self.intrinsic_dim}
        total = sum(((-1) ** j) * c for j, c in counts.items())
        return total == 1 - (-1) ** self.intrinsic_dim

    # -- metric quantities

    def intrinsic_volume(self, j: int, rng=None, samples: int = 40000) -> float:
        """V_j via weighted external angles over j-faces.

        Exact whenever every j-face normal cone has spherical dimension <= 1
        (always for d <= 3); higher-dimensional cones need Monte Carlo and an
        rng.  V_0 = 1 (Euler characteristic), V_d = volume.
        """
        from .cones import external_angle  # late import, cones builds on this module

        d = self.dim
        if not (0 <= j <= d):
            raise InputError(f"intrinsic volume index {j} out of range")
        if j > self.intrinsic_dim:
            return 0.0
        if j == 0:
            return 1.0
        if j == d:
            return self.volume()
        total = 0.0
        for f in self.faces(j):
            gamma = external_angle(self, f, rng=rng, samples=samples)
            total += gamma.value * f.measure
        return total

    def support(self, u) -> float:
        return float(np.max(self.vertices @ np.asarray(u, dtype=float)))


# ---------------------------------------------------------------------------
# public constructors and algebra


def hull_from_points(points, name=None) -> Polytope:
    """Strict hull: raises DegenerateInputError (with intrinsic_dim) when the
    input is not full-dimensional."""
    return Polytope.hull(points, name=name, allow_degenerate=False)


def minkowski_sum(p: Polytope, q: Polytope, name=None) -> Polytope:
    if p.dim != q.dim:
        raise InputError("dimension mismatch in Minkowski sum")
    pts = (p.vertices[:, None, :] + q.vertices[None, :, :]).reshape(-1, p.dim)
    return Polytope.hull(pts, name=name or f"{p.name}+{q.name}", allow_degenerate=True)


def scaled_sum(coeffs, polys, name=None) -> Polytope:
    """Hull of all sums sum_i t_i v_i over vertex choices; t_i >= 0."""
    coeffs = [float(t) for t in coeffs]
    if len(coeffs) != len(polys):
        raise InputError("one coefficient per body required")
    if any(t < 0 for t in coeffs):
        raise InputError("scaled_sum needs nonnegative coefficients")
    d = polys[0].dim
    if any(p.dim != d for p in polys):
        raise InputError("dimension mismatch in scaled sum")
    pts = np.zeros((1, d))
    for t, p in zip(coeffs, polys):
        if t == 0.0:
            continue
        add = t * p.vertices
        pts = (pts[:, None, :] + add[None, :, :]).reshape(-1, d)
        scale = max(1.0, float(np.max(np.abs(pts))))
        pts = _dedupe_points(pts, _TOL * scale)
    return Polytope.hull(pts, name=name, allow_degenerate=True)


def sum_volume(coeffs, polys) -> float:
    """Volume of the scaled Minkowski sum.

    Native hull for small candidate sets; large vertex products go through
    Qhull, which only has to produce the volume.
    """
    d = polys[0].dim
    pts = np.zeros((1, d))
    for t, p in zip(coeffs, polys):
        if float(t) == 0.0:
            continue
        add = float(t) * p.vertices
        pts = (pts[:, None, :] + add[None, :, :]).reshape(-1, d)
        scale = max(1.0, float(np.max(np.abs(pts))))
        pts = _dedupe_points(pts, _TOL * scale)
    rank = np.linalg.matrix_rank(pts - pts.mean(axis=0), tol=1e-9)
    if rank < d:
        return 0.0
    if pts.shape[0] <= 150:
        return Polytope.hull(pts, allow_degenerate=True).volume()
    from scipy.spatial import ConvexHull  # plumbing fallback for big sums

    return float(ConvexHull(pts).volume)


# ---------------------------------------------------------------------------
# area measures


@dataclass(frozen=True)
class AreaMeasureAtom:
    face: Face
    weight: float          # H^n(F)
    cone: NormalCone


@dataclass(frozen=True)
class AreaMeasure:
    """Atoms of the order-n area measure of a polytope.

    S_n(P, .) = constant * (1/omega_{d-n}) * sum_F H^n(F) H^{d-1-n}(n(P,F) cap .)
    with constant = d kappa_{d-n} / binom(d, n); total mass is
    constant * V_n(P).
    """

    d: int
    n: int
    atoms: tuple
    constant: float

    def total_mass(self, rng=None, samples: int = 40000) -> MCEstimate:
        from .cones import spherical_measure

        total = 0.0
        var = 0.0
        ns = 0
        for atom in self.atoms:
            m = spherical_measure(atom.cone, rng=rng, samples=samples)
            total += atom.weight * m.value
            var += (atom.weight * m.std_error) ** 2
            ns += m.samples
        c = self.constant / omega(self.d - self.n)
        return MCEstimate(c * total, c * math.sqrt(var), ns)


def area_measure_atoms(p: Polytope, n: int) -> AreaMeasure:
    d = p.dim
    if not (0 <= n <= d - 1):
        raise InputError(f"area measure order {n} out of range")
    atoms = tuple(
        AreaMeasureAtom(f, f.measure, f.normal_cone) for f in p.faces(n)
    )
    constant = d * kappa(d - n) / multinomial(d, (n, d - n))
    return AreaMeasure(d, n, atoms, constant)


# ---------------------------------------------------------------------------
# serialization


def polytope_to_json(p: Polytope) -> str:
    doc = {
        "name": p.name,
        "dim": p.dim,
        "vertices": [[float(x) for x in v] for v in p.vertices],
    }
    return json.dumps(doc, sort_keys=True)


def polytope_from_json(text: str) -> Polytope:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"bad polytope JSON: {e}") from e
    for key in ("name", "dim", "vertices"):
        if key not in doc:
            raise InputError(f"polytope JSON missing '{key}'")
    verts = np.asarray(doc["vertices"], dtype=float)
    if verts.ndim != 2 or verts.shape[1] != int(doc["dim"]):
        raise InputError("vertex array does not match declared dimension")
    return Polytope.hull(verts, name=str(doc["name"]), allow_degenerate=True)


def lattice_report(p: Polytope) -> dict:
    """Canonical JSON-ready description of the face lattice."""
    out = {"name": p.name, "dim": p.dim, "intrinsic_dim": p.intrinsic_dim,
           "n_vertices": p.n_vertices, "faces": {}}
    for j, faces in sorted(p.face_lattice().items()):
        out["faces"][str(j)] = [
            {"vertices": list(f.vertex_ids), "measure": round(f.measure, 12)}
            for f in faces
        ]
    return out
