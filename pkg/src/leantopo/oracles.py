"""Slow reference computations used to cross-check the fast paths.

Nothing here shares code with the column reduction or the clique expansion.
"""

from __future__ import annotations

from itertools import combinations
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np


def _faces(s: Tuple[int, ...]):
    return [s[:m] + s[m + 1:] for m in range(len(s))]


class _XorBasis:
    """Row echelon basis of Z/2 vectors stored as Python ints."""

    def __init__(self):
        self.rows: Dict[int, int] = {}

    def reduce(self, v: int) -> int:
        while v:
            top = v.bit_length() - 1
            r = self.rows.get(top)
            if r is None:
                return v
            v ^= r
        return 0

    def add(self, v: int) -> bool:
        v = self.reduce(v)
        if v:
            self.rows[v.bit_length() - 1] = v
            return True
        return False

    def __len__(self) -> int:
        return len(self.rows)


def _boundary_vectors(simplices: Sequence[Tuple[int, ...]], faces_index: Dict[Tuple[int, ...], int]):
    return [sum(1 << faces_index[f] for f in _faces(s)) if len(s) > 1 else 0 for s in simplices]


def cycle_basis(simplices: Sequence[Tuple[int, ...]], faces_index) -> List[int]:
    """Basis of the kernel of the boundary map on the span of ``simplices``.

    Vectors are bitmasks over the positions of ``simplices``.
    """
    pivots: Dict[int, Tuple[int, int]] = {}
    kernel = []
    for j, col in enumerate(_boundary_vectors(simplices, faces_index)):
        combo = 1 << j
        while col:
            top = col.bit_length() - 1
            if top not in pivots:
                pivots[top] = (col, combo)
                break
            pc, pm = pivots[top]
            col ^= pc
            combo ^= pm
        if not col:
            kernel.append(combo)
    return kernel


def image_rank_oracle(k_lo: Iterable[Tuple[int, ...]], k_hi: Iterable[Tuple[int, ...]], dim: int) -> int:
    """dim Z_i(K_lo) - dim(Z_i(K_lo) intersect B_i(K_hi)) over Z/2."""
    lo = sorted({tuple(sorted(s)) for s in k_lo})
    hi = sorted({tuple(sorted(s)) for s in k_hi})
    lo_set = set(lo)
    if not lo_set <= set(hi):
        raise ValueError("K_lo must be a subcomplex of K_hi")
    hi_i = [s for s in hi if len(s) == dim + 1]
    pos = {s: j for j, s in enumerate(hi_i)}
    lo_i = [s for s in hi_i if s in lo_set]
    lower = {s: j for j, s in enumerate(s for s in hi if len(s) == dim)}

    # cycles of K_lo, expressed over the i-simplices of K_hi
    z = []
    for combo in cycle_basis(lo_i, lower):
        v = 0
        for j, s in enumerate(lo_i):
            if combo >> j & 1:
                v |= 1 << pos[s]
        z.append(v)
    boundaries = _boundary_vectors([s for s in hi if len(s) == dim + 2], pos)

    zb = _XorBasis()
    for v in z:
        zb.add(v)
    bb = _XorBasis()
    for v in boundaries:
        bb.add(v)
    both = _XorBasis()
    for v in z + boundaries:
        both.add(v)
    intersection = len(zb) + len(bb) - len(both)
    return len(zb) - intersection


def betti_oracle(simplices: Iterable[Tuple[int, ...]], top_dim: int) -> List[int]:
    k = list(simplices)
    return [image_rank_oracle(k, k, d) for d in range(top_dim + 1)]


def rips_oracle(points, threshold: float, max_dim: int) -> List[Tuple[int, ...]]:
    """Every vertex subset of size <= max_dim + 1 with all pairwise distances <= threshold."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    adj = d <= threshold
    out = [(v,) for v in range(n)]
    for size in range(2, max_dim + 2):
        for s in combinations(range(n), size):
            if all(adj[a, b] for a, b in combinations(s, 2)):
                out.append(s)
    return out


def brute_knn(points, x, k: int, exclude=()):
    pts = np.asarray(points, dtype=float)
    d = np.sqrt(((pts - np.asarray(x, dtype=float)) ** 2).sum(1))
    ids = [i for i in range(len(pts)) if i not in set(exclude)]
    ids.sort(key=lambda i: (d[i], i))
    return ids[:k]


def brute_ball_empty(points, center, radius: float, exclude=()) -> bool:
    pts = np.asarray(points, dtype=float)
    d = np.sqrt(((pts - np.asarray(center, dtype=float)) ** 2).sum(1))
    return not any(d[i] <= radius for i in range(len(pts)) if i not in set(exclude))
