"""Ambient-space primitives: point clouds, exact spatial queries, subspace angles."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

# Below this size the index answers every query by a full scan.
BRUTE_FORCE_BELOW = 512

# Relative inflation applied to tree candidate radii; candidates are re-verified exactly.
_SLACK = 1e-9


class EmptyCloud(ValueError):
    pass


class ZeroVector(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class DuplicatePointsWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Sample points of a manifold of known intrinsic dimension.

    The optional fields carry analytic oracles when the cloud comes from a
    synthetic sampler: ``normals`` has shape (n, k - s, k) with orthonormal rows
    per point, ``lfs`` holds local feature size values (``lfs_kind`` says whether
    they are exact or a lower bound) and ``betti`` the true Betti numbers.
    """

    points: np.ndarray
    intrinsic_dim: int
    normals: Optional[np.ndarray] = None
    lfs: Optional[np.ndarray] = None
    lfs_kind: Optional[str] = None
    betti: Optional[tuple] = None
    name: str = ""

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        k = pts.shape[1]
        s = int(self.intrinsic_dim)
        if not 1 <= s <= k:
            raise ValueError(f"intrinsic dimension {s} not in [1, {k}]")
        if s == k:
            warnings.warn("intrinsic dimension equals ambient dimension; normal spaces are trivial")
        object.__setattr__(self, "intrinsic_dim", s)

    @classmethod
    def from_points(cls, points, intrinsic_dim: int, **oracles) -> "PointCloud":
        """Build a cloud, dropping exact duplicate coordinate rows (first occurrence wins)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if len(pts) == 0:
            raise EmptyCloud("no points")
        _, first = np.unique(pts, axis=0, return_index=True)
        keep = np.sort(first)
        if len(keep) < len(pts):
            warnings.warn(
                f"removed {len(pts) - len(keep)} duplicate point(s) at ingestion",
                DuplicatePointsWarning,
            )
            pts = pts[keep]
            for key in ("normals", "lfs"):
                if oracles.get(key) is not None:
                    oracles[key] = np.asarray(oracles[key])[keep]
        return cls(pts, intrinsic_dim, **oracles)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.intrinsic_dim

    def __len__(self) -> int:
        return len(self.points)

    def diameter(self) -> float:
        pts = self.points
        if len(pts) > 64 and self.ambient_dim <= 8:
            from scipy.spatial import ConvexHull

            try:
                pts = pts[ConvexHull(pts).vertices]
            except Exception:  # degenerate (flat) input: fall back to all points
                pts = self.points
        best = 0.0
        for i in range(len(pts)):
            best = max(best, float(sq_distances(pts, pts[i]).max()))
        return float(np.sqrt(best))

    def with_points(self, points) -> "PointCloud":
        """Same oracles, new coordinates (used for rigid motions and scaling)."""
        return PointCloud(
            np.asarray(points, dtype=float),
            self.intrinsic_dim,
            normals=self.normals,
            lfs=self.lfs,
            lfs_kind=self.lfs_kind,
            betti=self.betti,
            name=self.name,
        )


def sq_distances(points: np.ndarray, x) -> np.ndarray:
    """Squared distances from every row of ``points`` to ``x``.

    Coordinates are accumulated in a fixed order so the value for a given row
    does not depend on which other rows are present; brute-force and accelerated
    queries therefore see bit-identical distances.
    """
    x = np.asarray(x, dtype=float)
    acc = np.zeros(len(points))
    for j in range(points.shape[1]):
        t = points[:, j] - x[j]
        acc += t * t
    return acc


def distances(points: np.ndarray, x) -> np.ndarray:
    return np.sqrt(sq_distances(points, x))


def _pairwise_sq(centers: np.ndarray, points: np.ndarray) -> np.ndarray:
    acc = np.zeros((len(centers), len(points)))
    for j in range(points.shape[1]):
        t = centers[:, j, None] - points[None, :, j]
        acc += t * t
    return acc


class SpatialIndex:
    """Exact nearest-neighbour and closed-ball queries over a fixed point array.

    ``mode="kdtree"`` uses a k-d tree only to collect candidates; every answer is
    re-derived from the same distance expression the ``"brute"`` mode uses, so the
    two modes return identical results. Ties are broken by the smaller point id.
    """

    def __init__(self, points, mode: str = "auto"):
        pts = np.ascontiguousarray(points, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            raise EmptyCloud("cannot index an empty point set")
        if mode == "auto":
            mode = "brute" if len(pts) < BRUTE_FORCE_BELOW else "kdtree"
        if mode not in ("brute", "kdtree"):
            raise ValueError(f"unknown index mode {mode!r}")
        self.points = pts
        self.mode = mode
        self._tree = cKDTree(pts) if mode == "kdtree" else None

    def __len__(self) -> int:
        return len(self.points)

    def _candidates(self, x, radius: float) -> np.ndarray:
        if self._tree is None:
            return np.arange(len(self.points))
        r = radius * (1.0 + _SLACK) + 1e-300
        return np.asarray(self._tree.query_ball_point(x, r), dtype=np.intp)

    def ball_query(self, center, radius: float, exclude: Iterable[int] = ()) -> np.ndarray:
        """Sorted ids of points with d(center, p) <= radius."""
        if radius < 0:
            raise ValueError("radius must be non-negative")
        cand = self._candidates(center, radius)
        if len(cand) == 0:
            return cand
        d2 = sq_distances(self.points[cand], center)
        hit = np.sort(cand[np.sqrt(d2) <= radius])
        excl = set(exclude)
        if excl:
            hit = np.array([i for i in hit if i not in excl], dtype=np.intp)
        return hit

    def ball_is_empty(self, center, radius: float, exclude: Iterable[int] = ()) -> bool:
        return len(self.ball_query(center, radius, exclude)) == 0

    def knn(self, x, k: int, exclude: Iterable[int] = ()):
        """The ``k`` nearest points ordered by (distance, id)."""
        excl = set(exclude)
        n = len(self.points)
        k = min(k, n - len(excl))
        if k <= 0:
            raise EmptyCloud("no points left after exclusion")
        if self._tree is None:
            ids = np.arange(n)
        else:
            kk = min(n, k + len(excl))
            dk, _ = self._tree.query(x, k=kk)
            reach = float(np.max(np.atleast_1d(dk)))
            ids = self._candidates(x, reach)
        if excl:
            ids = np.array([i for i in ids if i not in excl], dtype=np.intp)
        d = distances(self.points[ids], x)
        order = np.lexsort((ids, d))[:k]
        return ids[order], d[order]

    def nearest_neighbor(self, x, exclude: Optional[int] = None):
        """(id, distance) of the closest point, optionally skipping one id."""
        if exclude is not None and len(self.points) < 2:
            raise EmptyCloud("need at least two points when excluding one")
        ids, d = self.knn(x, 1, () if exclude is None else (exclude,))
        return int(ids[0]), float(d[0])

    def nearest_distances(self, centers: np.ndarray, exclude_pairs: Optional[np.ndarray] = None,
                          upper: float = np.inf):
        """Distance from each centre to the closest point outside its excluded pair.

        ``exclude_pairs`` is an (m, 2) id array; the pair's own points are ignored.
        Values equal what ``knn`` would report for each centre, except that
        distances known to exceed ``upper`` may come back as inf.
        """
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        m = len(centers)
        out = np.empty(m)
        if m == 0:
            return out
        n_ex = 0 if exclude_pairs is None else 2
        if self._tree is None or len(self.points) <= n_ex + 1:
            chunk = max(1, 4_000_000 // max(1, len(self.points)))
            for a in range(0, m, chunk):
                d2 = _pairwise_sq(centers[a:a + chunk], self.points)
                if exclude_pairs is not None:
                    rows = np.arange(d2.shape[0])
                    d2[rows, exclude_pairs[a:a + chunk, 0]] = np.inf
                    d2[rows, exclude_pairs[a:a + chunk, 1]] = np.inf
                out[a:a + chunk] = np.sqrt(d2.min(axis=1))
            return out
        kk = n_ex + 1
        bound = upper * (1.0 + _SLACK) + 1e-300 if np.isfinite(upper) else np.inf
        _, idx = self._tree.query(centers, k=kk, distance_upper_bound=bound)
        idx = idx.reshape(m, kk)
        if exclude_pairs is None:
            near = idx[:, 0]
        else:
            bad = (idx == exclude_pairs[:, :1]) | (idx == exclude_pairs[:, 1:2])
            first = np.argmax(~bad, axis=1)
            near = idx[np.arange(m), first]
            near[bad.all(axis=1)] = len(self.points)
        out.fill(np.inf)
        found = near < len(self.points)
        diff = self.points[near[found]] - centers[found]
        acc = np.zeros(len(diff))
        for j in range(diff.shape[1]):
            acc += diff[:, j] * diff[:, j]
        out[found] = np.sqrt(acc)
        return out

    def balls_empty(self, centers: np.ndarray, radii: np.ndarray,
                    exclude_pairs: Optional[np.ndarray] = None) -> np.ndarray:
        """Vectorised ``ball_is_empty``; borderline answers are re-derived one by one."""
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        radii = np.asarray(radii, dtype=float)
        upper = float(radii.max()) if len(radii) else 0.0
        near = self.nearest_distances(centers, exclude_pairs, upper=upper)
        empty = near > radii
        if self._tree is not None:
            tight = np.nonzero(np.isfinite(near) & (np.abs(near - radii) <= 1e-9 * np.maximum(radii, near)))[0]
            for i in tight:
                excl = () if exclude_pairs is None else tuple(int(v) for v in exclude_pairs[i])
                empty[i] = self.ball_is_empty(centers[i], float(radii[i]), excl)
        return empty


def build_index(cloud, mode: str = "auto") -> SpatialIndex:
    pts = cloud.points if isinstance(cloud, PointCloud) else cloud
    if len(pts) == 0:
        raise EmptyCloud("cannot index an empty cloud")
    return SpatialIndex(pts, mode)


def nearest_neighbor(index: SpatialIndex, x, exclude: Optional[int] = None):
    return index.nearest_neighbor(x, exclude)


def ball_is_empty(index: SpatialIndex, center, radius: float, exclude: Iterable[int] = ()) -> bool:
    return index.ball_is_empty(center, radius, exclude)


def _orthonormalize(vectors: np.ndarray, rtol: float = 1e-10) -> Optional[np.ndarray]:
    """Gram-Schmidt with one re-orthogonalisation pass; None if rank deficient."""
    basis = []
    for v in np.atleast_2d(np.asarray(vectors, dtype=float)):
        w = v.copy()
        scale = np.linalg.norm(v)
        if scale == 0:
            return None
        for _ in range(2):
            for b in basis:
                w -= np.dot(b, w) * b
        nw = np.linalg.norm(w)
        if nw <= rtol * scale:
            return None
        basis.append(w / nw)
    return np.array(basis)


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal rows spanning a linear subspace of R^k."""

    vectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        gram = v @ v.T
        if not np.allclose(gram, np.eye(len(v)), atol=1e-9, rtol=0):
            raise ValueError("basis vectors are not orthonormal")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def from_spanning(cls, vectors) -> "SubspaceBasis":
        ortho = _orthonormalize(vectors)
        if ortho is None:
            raise ValueError("spanning vectors are linearly dependent")
        return cls(ortho)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[1]

    def complement(self) -> "SubspaceBasis":
        k = self.ambient_dim
        if self.dim == k:
            raise ValueError("complement of the whole space is trivial")
        _, _, vh = np.linalg.svd(self.vectors, full_matrices=True)
        comp = vh[self.dim:]
        # One projection pass removes the residual overlap left by the SVD.
        comp = comp - (comp @ self.vectors.T) @ self.vectors
        return SubspaceBasis(_orthonormalize(comp))

    def project(self, u) -> np.ndarray:
        return self.vectors.T @ (self.vectors @ np.asarray(u, dtype=float))


def vector_subspace_angle(u, basis: SubspaceBasis) -> float:
    """Angle in [0, pi/2] between a non-zero vector and a subspace.

    Mathematically arccos of the projected unit vector's length; evaluated as
    atan2(rejection, projection) which stays accurate near 0 and pi/2.
    """
    u = np.asarray(u, dtype=float)
    nu = np.linalg.norm(u)
    if nu == 0:
        raise ZeroVector("angle undefined for the zero vector")
    if u.shape[-1] != basis.ambient_dim:
        raise DimensionMismatch("vector and subspace live in different spaces")
    u = u / nu
    coef = basis.vectors @ u
    along = np.linalg.norm(coef)
    across = np.linalg.norm(u - basis.vectors.T @ coef)
    return float(np.arctan2(across, along))


def principal_angle(a: SubspaceBasis, b: SubspaceBasis) -> float:
    """Largest principal angle between two subspaces of the same ambient space."""
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch("subspaces live in different ambient spaces")
    if a.dim > b.dim:
        a, b = b, a
    cos = np.linalg.svd(a.vectors @ b.vectors.T, compute_uv=False)
    resid = a.vectors - (a.vectors @ b.vectors.T) @ b.vectors
    sin = np.linalg.svd(resid, compute_uv=False)
    # cos sorted descending pairs with sin sorted ascending (Knyazev & Argentati).
    angles = np.arctan2(np.sort(sin)[: len(cos)], np.sort(cos)[::-1])
    return float(np.max(angles))


_SPLIT = re.compile(r"[,\s]+")


def parse_points(lines: Iterable[str]) -> np.ndarray:
    rows = []
    width = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        vals = [float(t) for t in _SPLIT.split(line) if t]
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ValueError(f"line {lineno}: expected {width} coordinates, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise EmptyCloud("no points in input")
    return np.array(rows, dtype=float)


def load_points(path, intrinsic_dim: int) -> PointCloud:
    with open(path) as fh:
        pts = parse_points(fh)
    return PointCloud.from_points(pts, intrinsic_dim)


def format_rows(rows: Sequence[Sequence]) -> str:
    out = []
    for row in rows:
        out.append(" ".join(_fmt(v) for v in row))
    return "\n".join(out) + ("\n" if out else "")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if np.isinf(v):
        return "inf"
    return repr(v)


def save_points(path, points, header: str = "") -> None:
    with open(path, "w") as fh:
        if header:
            fh.write("".join(f"# {h}\n" for h in header.splitlines()))
        fh.write(format_rows(np.asarray(points, dtype=float)))
