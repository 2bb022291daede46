"""Vertex and extreme-ray enumeration for small H-polyhedra.

``{x : A x <= b}`` is homogenized into the cone ``{(x, t) : A x - b t <= 0,
t >= 0}``.  The lineality space ``null(A)`` is factored out first so the
remaining cone is pointed, and its extreme rays are produced by the
double-description method with the combinatorial adjacency test.  Rays with
``t > 0`` become vertices, rays with ``t = 0`` become recession directions,
and each lineality basis vector is reported as a pair of opposite rays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_DIM",
    "MAX_ROWS",
    "EnumerationLimitError",
    "PolyhedronVRep",
    "enumerate_v_rep",
]

MAX_DIM = 8
MAX_ROWS = 24
_TOL = 1e-9


class EnumerationLimitError(ValueError):
    """The polyhedron is larger than the enumeration routine supports."""

    def __init__(self, dim, rows):
        super().__init__(
            f"vertex enumeration supports dimension <= {MAX_DIM} and <= {MAX_ROWS} rows; "
            f"got dimension {dim} with {rows} rows"
        )
        self.dim = dim
        self.rows = rows


@dataclass(frozen=True, eq=False)
class PolyhedronVRep:
    vertices: np.ndarray  # (k, n)
    rays: np.ndarray  # (r, n)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def is_empty(self) -> bool:
        return self.vertices.shape[0] == 0

    @property
    def is_bounded(self) -> bool:
        return self.rays.shape[0] == 0

    def max_linear(self, c) -> float:
        """Supremum of ``c @ x`` over the polyhedron (``-inf`` if empty)."""
        c = np.asarray(c, dtype=float)
        if self.is_empty:
            return -np.inf
        if self.rays.shape[0] and np.max(self.rays @ c) > _TOL:
            return np.inf
        return float(np.max(self.vertices @ c))


def _null_space(A, n):
    if A.shape[0] == 0:
        return np.eye(n), np.zeros((n, 0))
    _, s, vt = np.linalg.svd(A)
    tol = max(A.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0) * 1e3
    rank = int(np.sum(s > tol))
    return vt[rank:].T, vt[:rank].T


def _initial_basis(M):
    """Greedily choose ``d`` linearly independent rows of ``M``."""
    d = M.shape[1]
    chosen = []
    for i in range(M.shape[0]):
        trial = chosen + [i]
        if np.linalg.matrix_rank(M[trial], tol=1e-10) == len(trial):
            chosen = trial
            if len(chosen) == d:
                break
    return chosen


def _extreme_rays(M):
    """Extreme rays of the pointed cone ``{y : M y <= 0}`` (rank ``M`` = ncols)."""
    p, d = M.shape
    K = _initial_basis(M)
    rays = list((-np.linalg.inv(M[K])).T)
    zero = []
    for j in range(d):
        z = 0
        for jj, row in enumerate(K):
            if jj != j:
                z |= 1 << row
        zero.append(z)
    rays = [r / np.max(np.abs(r)) for r in rays]

    for i in range(p):
        if i in K:
            continue
        s = np.array([M[i] @ r for r in rays]) if rays else np.zeros(0)
        pos = [k for k in range(len(rays)) if s[k] > _TOL]
        neg = [k for k in range(len(rays)) if s[k] < -_TOL]
        nil = [k for k in range(len(rays)) if abs(s[k]) <= _TOL]
        bit = 1 << i
        new_rays = [rays[k] for k in neg] + [rays[k] for k in nil]
        new_zero = [zero[k] for k in neg] + [zero[k] | bit for k in nil]
        if pos and neg:
            for a in pos:
                for b in neg:
                    common = zero[a] & zero[b]
                    if bin(common).count("1") < d - 2:
                        continue
                    adjacent = True
                    for k in range(len(rays)):
                        if k != a and k != b and (zero[k] & common) == common:
                            adjacent = False
                            break
                    if not adjacent:
                        continue
                    r = s[a] * rays[b] - s[b] * rays[a]
                    scale = np.max(np.abs(r))
                    if scale <= 0:
                        continue
                    new_rays.append(r / scale)
                    new_zero.append(common | bit)
        rays, zero = new_rays, new_zero
    return rays


def _dedupe(points, tol):
    kept = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= tol * (1.0 + np.max(np.abs(q))) for q in kept):
            kept.append(p)
    return kept


def enumerate_v_rep(constraint_matrix, rhs) -> PolyhedronVRep:
    """Vertices and extreme rays of ``{x : constraint_matrix @ x <= rhs}``.

    Lineality directions appear as opposite ray pairs.  An empty polyhedron
    yields empty vertex and ray arrays.  Raises :class:`EnumerationLimitError`
    beyond ``MAX_DIM`` variables or ``MAX_ROWS`` rows.
    """
    b = np.asarray(rhs, dtype=float).reshape(-1)
    A = np.asarray(constraint_matrix, dtype=float)
    if A.size == 0 and not (A.ndim == 2 and A.shape[0] == b.shape[0]):
        A = A.reshape(b.shape[0], 0)
    m, n = A.shape
    if b.shape[0] != m:
        raise ValueError(f"rhs has length {b.shape[0]} but the matrix has {m} rows")
    if n > MAX_DIM or m > MAX_ROWS:
        raise EnumerationLimitError(n, m)

    lineality, complement = _null_space(A, n)
    r = complement.shape[1]
    M = np.zeros((m + 1, r + 1))
    M[:m, :r] = A @ complement
    M[:m, r] = -b
    M[m, r] = -1.0
    norms = np.linalg.norm(M, axis=1)
    live = norms > 1e-14
    # all-zero rows read 0 <= b_i; a negative b_i makes the set empty
    if np.any(~live[:m] & (b < -_TOL)):
        return PolyhedronVRep(np.zeros((0, n)), np.zeros((0, n)))
    M = M[live] / norms[live, None]

    vertices, rays = [], []
    for y in _extreme_rays(M):
        w, t = y[:r], y[r]
        if t > _TOL:
            vertices.append(complement @ (w / t))
        else:
            x = complement @ w
            scale = np.max(np.abs(x)) if x.size else 0.0
            if scale > _TOL:
                rays.append(x / scale)
    if not vertices:
        return PolyhedronVRep(np.zeros((0, n)), np.zeros((0, n)))
    for l in lineality.T:
        l = l / np.max(np.abs(l))
        rays.extend([l, -l])
    vertices = _dedupe(vertices, 1e-9)
    rays = _dedupe(rays, 1e-9)
    return PolyhedronVRep(
        np.array(vertices).reshape(-1, n),
        np.array(rays).reshape(-1, n),
    )
