"""Small numeric helpers: sphere constants, combinatorics, orthonormalization, RNG plumbing."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import InputError


def kappa(k: int) -> float:
    """Volume of the k-dimensional unit ball."""
    return math.pi ** (k / 2.0) / math.gamma(k / 2.0 + 1.0)


def omega(k: int) -> float:
    """Surface measure of the unit sphere S^{k-1} in R^k; omega(k) = k*kappa(k)."""
    if k <= 0:
        raise InputError(f"omega requires k >= 1, got {k}")
    return 2.0 * math.pi ** (k / 2.0) / math.gamma(k / 2.0)


def multinomial(d: int, parts) -> int:
    parts = tuple(int(p) for p in parts)
    if any(p < 0 for p in parts) or sum(parts) != d:
        raise InputError(f"multidegree {parts} does not sum to {d}")
    out = math.factorial(d)
    for p in parts:
        out //= math.factorial(p)
    return out


def as_rng(rng_or_seed) -> np.random.Generator:
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return np.random.default_rng(rng_or_seed)


def spawn_rngs(rng_or_seed, n: int) -> list[np.random.Generator]:
    """n independent child generators; deterministic given the seed or generator state."""
    if isinstance(rng_or_seed, np.random.Generator):
        root = np.random.SeedSequence(int(rng_or_seed.integers(0, 2**63 - 1)))
    else:
        root = np.random.SeedSequence(rng_or_seed)
    return [np.random.default_rng(ss) for ss in root.spawn(n)]


def chunk_sizes(total: int, chunk: int) -> list[int]:
    full, rem = divmod(int(total), int(chunk))
    return [chunk] * full + ([rem] if rem else [])


def parallel_map(fn, items, threads: int = 1):
    """Ordered map; results do not depend on thread count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def orthonormal_columns(vectors: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormalize columns by modified Gram-Schmidt with re-orthogonalization.

    Near-dependent columns are dropped; returns a matrix with orthonormal columns
    spanning the same space.
    """
    a = np.atleast_2d(np.asarray(vectors, dtype=float))
    if a.shape[1] == 0:
        return a.reshape(a.shape[0], 0)
    cols = []
    for j in range(a.shape[1]):
        v = a[:, j].copy()
        for _ in range(2):  # second pass kills round-off loss of orthogonality
            for q in cols:
                v -= np.dot(q, v) * q
        nv = np.linalg.norm(v)
        if nv > tol:
            cols.append(v / nv)
    if not cols:
        return np.zeros((a.shape[0], 0))
    return np.column_stack(cols)


def complete_basis(frame: np.ndarray, ambient: int | None = None) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the given frame's span."""
    frame = np.asarray(frame, dtype=float)
    n = frame.shape[0] if ambient is None else ambient
    if frame.size == 0:
        return np.eye(n)
    proj = np.eye(n) - frame @ frame.T
    # eigen-decomposition is stable here and keeps the output deterministic
    w, v = np.linalg.eigh(proj)
    keep = w > 0.5
    return orthonormal_columns(v[:, keep])


def gram_det(gram: np.ndarray) -> float:
    """Determinant of a PSD Gram matrix via pivoted Cholesky; round-off clamped to 0."""
    a = np.array(gram, dtype=float)
    n = a.shape[0]
    if n == 0:
        return 1.0
    det = 1.0
    for i in range(n):
        piv = i + int(np.argmax(np.diagonal(a)[i:]))
        if piv != i:
            a[[i, piv], :] = a[[piv, i], :]
            a[:, [i, piv]] = a[:, [piv, i]]
        p = a[i, i]
        if p <= 0.0:
            return 0.0
        det *= p
        if i + 1 < n:
            row = a[i, i + 1:] / p
            a[i + 1:, i + 1:] -= np.outer(a[i + 1:, i], row)
    return max(det, 0.0)


def random_unit_vectors(d: int, n: int, rng) -> np.ndarray:
    g = as_rng(rng).standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def random_rotation(d: int, rng) -> np.ndarray:
    """Haar-ish rotation from QR of a Gaussian matrix, determinant fixed to +1."""
    g = as_rng(rng).standard_normal((d, d))
    q, r = np.linalg.qr(g)
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
