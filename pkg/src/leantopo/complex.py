"""Adaptive Rips-like flag complexes scaled by per-vertex lean feature size.

An edge pq enters at scale d(p, q) / (lnfs(p) + lnfs(q)); a simplex enters at
the largest scale among its edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geometry import PointCloud, SpatialIndex, format_rows, sq_distances
from .sparsify import SparseSample

DEFAULT_MAX_SIMPLICES = 50_000_000


class ComplexTooLarge(RuntimeError):
    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"complex exceeds the cap of {cap} simplices (reached {count})")


class ZeroLnfs(ValueError):
    pass


def edge_scale(p: int, q: int, lnfs_of, points) -> float:
    """d(p, q) / (lnfs(p) + lnfs(q))."""
    points = points.points if isinstance(points, PointCloud) else np.asarray(points, dtype=float)
    lp, lq = float(lnfs_of[p]), float(lnfs_of[q])
    if lp <= 0 or lq <= 0:
        raise ZeroLnfs(f"lnfs must be positive (got {lp}, {lq})")
    d = float(np.sqrt(sq_distances(points[q:q + 1], points[p])[0]))
    return d / (lp + lq)


@dataclass(eq=False)
class FilteredCliqueComplex:
    """Simplices (tuples of local vertex indices) sorted by (filtration, dim, ids)."""

    simplices: List[Tuple[int, ...]]
    filtrations: np.ndarray
    alpha_lo: float
    alpha_hi: float
    max_dim: int
    vertex_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.simplices)

    @property
    def dims(self) -> np.ndarray:
        return np.fromiter((len(s) - 1 for s in self.simplices), dtype=np.int64, count=len(self))

    def level(self, alpha: float) -> List[Tuple[int, ...]]:
        stop = int(np.searchsorted(self.filtrations, alpha, side="right"))
        return self.simplices[:stop]

    def counts(self, alpha: Optional[float] = None) -> List[int]:
        simplices = self.simplices if alpha is None else self.level(alpha)
        out = [0] * (self.max_dim + 1)
        for s in simplices:
            out[len(s) - 1] += 1
        return out

    def export(self, path) -> None:
        rows = []
        for s, f in zip(self.simplices, self.filtrations):
            rows.append([len(s) - 1, *(int(self.vertex_ids[v]) for v in s), f])
        with open(path, "w") as fh:
            fh.write(f"# alpha_lo={self.alpha_lo!r} alpha_hi={self.alpha_hi!r}\n")
            fh.write("# dimension, vertex ids, filtration value\n")
            fh.write(format_rows(rows))


def scaled_edges(points: np.ndarray, lnfs: np.ndarray, alpha: float):
    """All pairs i < j with d / (l_i + l_j) <= alpha, with their scale values.

    Each edge is found from its endpoint with the larger lnfs, inside a ball of
    radius 2 * alpha * lnfs, which is the most the edge can reach.
    """
    n = len(points)
    if np.any(lnfs <= 0):
        raise ZeroLnfs("lnfs must be positive at every vertex")
    index = SpatialIndex(points)
    ii, jj, ww = [], [], []
    for i in range(n):
        cand = index._candidates(points[i], 2 * alpha * lnfs[i] * (1 + 1e-9))
        li = lnfs[i]
        lc = lnfs[cand]
        cand = cand[(lc < li) | ((lc == li) & (cand > i))]
        if cand.size == 0:
            continue
        d = np.sqrt(sq_distances(points[cand], points[i]))
        scale = d / (li + lnfs[cand])
        hit = scale <= alpha
        cand = cand[hit]
        lo = np.minimum(cand, i)
        hi = np.maximum(cand, i)
        ii.append(lo)
        jj.append(hi)
        ww.append(scale[hit])
    if not ii:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate(ii), np.concatenate(jj), np.concatenate(ww)


def flag_complex(n_vertices: int, edges_i, edges_j, weights, max_dim: int,
                 max_simplices: int = DEFAULT_MAX_SIMPLICES):
    """Clique expansion of a weighted graph up to ``max_dim``.

    Returns simplices and filtration values sorted by (filtration, dim, ids).
    """
    upper = [dict() for _ in range(n_vertices)]
    for a, b, w in zip(edges_i.tolist(), edges_j.tolist(), np.asarray(weights).tolist()):
        upper[a][b] = w
    upper_sets = [set(u) for u in upper]

    items = [(0.0, 0, (v,)) for v in range(n_vertices)]
    count = n_vertices
    if count > max_simplices:
        raise ComplexTooLarge(count, max_simplices)

    def expand(simplex, filt, cands):
        nonlocal count
        dim = len(simplex)
        for idx, c in enumerate(cands):
            f = filt
            for v in simplex:
                w = upper[v][c]
                if w > f:
                    f = w
            new = simplex + (c,)
            items.append((f, dim, new))
            count += 1
            if count > max_simplices:
                raise ComplexTooLarge(count, max_simplices)
            if dim < max_dim:
                nxt = [x for x in cands[idx + 1:] if x in upper_sets[c]]
                if nxt:
                    expand(new, f, nxt)

    if max_dim >= 1:
        for v in range(n_vertices):
            cands = sorted(upper[v])
            if cands:
                expand((v,), 0.0, cands)
    items.sort()
    simplices = [s for _, _, s in items]
    filtrations = np.fromiter((f for f, _, _ in items), dtype=float, count=len(items))
    return simplices, filtrations


def adaptive_rips(points, lnfs, alpha_lo: float, alpha_hi: float, max_dim: int,
                  max_simplices: int = DEFAULT_MAX_SIMPLICES,
                  vertex_ids: Optional[Sequence[int]] = None) -> FilteredCliqueComplex:
    """Flag complex of all simplices with filtration at most ``alpha_hi``."""
    points = np.asarray(points, dtype=float)
    lnfs = np.asarray(lnfs, dtype=float)
    if max_dim < 1:
        raise ValueError("max_dim must be at least 1")
    if not 0 < alpha_lo <= alpha_hi:
        raise ValueError("need 0 < alpha_lo <= alpha_hi")
    ei, ej, w = scaled_edges(points, lnfs, alpha_hi)
    simplices, filt = flag_complex(len(points), ei, ej, w, max_dim, max_simplices)
    vids = np.arange(len(points)) if vertex_ids is None else np.asarray(vertex_ids)
    return FilteredCliqueComplex(simplices, filt, float(alpha_lo), float(alpha_hi), max_dim, vids)


def build_two_scale_complex(cloud: PointCloud, sample: SparseSample, alpha_lo: float,
                            alpha_hi: float, max_dim: int,
                            max_simplices: int = DEFAULT_MAX_SIMPLICES) -> FilteredCliqueComplex:
    """Adaptive complex on the retained points; local vertex v is the v-th smallest id."""
    if not 0 < alpha_lo < alpha_hi:
        raise ValueError("need 0 < alpha_lo < alpha_hi")
    ids = np.sort(np.asarray(sample.retained, dtype=np.int64))
    return adaptive_rips(cloud.points[ids], sample.lnfs_of[ids], alpha_lo, alpha_hi, max_dim,
                         max_simplices, vertex_ids=ids)


def build_single_scale_complex(cloud: PointCloud, sample: SparseSample, alpha: float,
                               max_dim: int,
                               max_simplices: int = DEFAULT_MAX_SIMPLICES) -> FilteredCliqueComplex:
    ids = np.sort(np.asarray(sample.retained, dtype=np.int64))
    return adaptive_rips(cloud.points[ids], sample.lnfs_of[ids], alpha, alpha, max_dim,
                         max_simplices, vertex_ids=ids)


# -- standard (fixed-threshold) Vietoris-Rips, used for comparisons ------------

def rips_edges(points, threshold: float):
    """Pairs i < j with d(i, j) <= threshold and their lengths."""
    points = np.asarray(points, dtype=float)
    index = SpatialIndex(points)
    ii, jj, ww = [], [], []
    for i in range(len(points)):
        cand = index.ball_query(points[i], threshold)
        cand = cand[cand > i]
        if cand.size:
            ii.append(np.full(cand.size, i))
            jj.append(cand)
            ww.append(np.sqrt(sq_distances(points[cand], points[i])))
    if not ii:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate(ii), np.concatenate(jj), np.concatenate(ww)


def vietoris_rips(points, threshold: float, max_dim: int,
                  max_simplices: int = DEFAULT_MAX_SIMPLICES) -> FilteredCliqueComplex:
    """Flag complex of the graph d <= threshold; filtration is the longest edge."""
    points = np.asarray(points, dtype=float)
    ei, ej, w = rips_edges(points, threshold)
    simplices, filt = flag_complex(len(points), ei, ej, w, max_dim, max_simplices)
    return FilteredCliqueComplex(simplices, filt, float(threshold), float(threshold), max_dim,
                                 np.arange(len(points)))


def strong_collapse(points, threshold: float, candidates: int = 8) -> np.ndarray:
    """Ids left after repeatedly removing dominated vertices of the Rips graph.

    v is dominated by u when every vertex adjacent to v (and v itself) is
    adjacent to u. Removing it leaves the flag complex's homotopy type unchanged.
    Only the ``candidates`` nearest neighbours are tried as dominators, so the
    result is a valid (possibly non-minimal) core.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    index = SpatialIndex(points)
    alive = np.ones(n, dtype=bool)
    changed = True
    while changed:
        changed = False
        for v in range(n):
            if not alive[v]:
                continue
            nb = index.ball_query(points[v], threshold)
            nb = nb[alive[nb]]
            if nb.size <= 1:
                continue
            dv = np.sqrt(sq_distances(points[nb], points[v]))
            for u in nb[np.lexsort((nb, dv))][1:candidates + 1]:
                if np.all(np.sqrt(sq_distances(points[nb], points[u])) <= threshold):
                    alive[v] = False
                    changed = True
                    break
    return np.nonzero(alive)[0]


def rips_betti(points, threshold: float, top_dim: int) -> List[int]:
    """Betti numbers of the standard Rips complex at ``threshold``."""
    from .homology import betti_numbers

    points = np.asarray(points, dtype=float)
    core = strong_collapse(points, threshold)
    K = vietoris_rips(points[core], threshold, top_dim + 1)
    return betti_numbers(K, top_dim)


def connectivity_threshold(points) -> float:
    """Smallest Rips threshold with a connected 1-skeleton (longest MST edge)."""
    from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
    from scipy.spatial import cKDTree

    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return 0.0
    tree = cKDTree(points)
    d, _ = tree.query(points, k=2)
    reach = float(d[:, 1].max())
    while True:
        graph = tree.sparse_distance_matrix(tree, reach, output_type="coo_matrix").tocsr()
        if connected_components(graph, directed=False)[0] == 1:
            return float(minimum_spanning_tree(graph).data.max())
        reach *= 2
