"""Simplicial homology and persistence over Z/2 by column reduction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .complex import FilteredCliqueComplex
from .geometry import format_rows


class MissingFace(RuntimeError):
    pass


@dataclass(eq=False)
class BoundaryMatrix:
    columns: List[List[int]]
    dims: List[int]

    def __len__(self) -> int:
        return len(self.columns)


def _simplices_of(complex_) -> Sequence[Tuple[int, ...]]:
    if isinstance(complex_, FilteredCliqueComplex):
        return complex_.simplices
    return complex_


def boundary_matrix(complex_) -> BoundaryMatrix:
    """Column j lists the (sorted) row indices of the facets of simplex j."""
    simplices = _simplices_of(complex_)
    position = {}
    columns = []
    dims = []
    for j, s in enumerate(simplices):
        position[s] = j
        dims.append(len(s) - 1)
        if len(s) == 1:
            columns.append([])
            continue
        rows = []
        for m in range(len(s)):
            face = s[:m] + s[m + 1:]
            r = position.get(face)
            if r is None:
                raise MissingFace(f"face {face} of {s} is missing or ordered after it")
            rows.append(r)
        rows.sort()
        columns.append(rows)
    return BoundaryMatrix(columns, dims)


def reduce_boundary(matrix: BoundaryMatrix):
    """Standard reduction with clearing, top dimension first.

    Returns (pairs, positive) where pairs maps birth column -> death column and
    ``positive`` flags columns that reduce to zero.
    """
    n = len(matrix)
    dims = matrix.dims
    by_dim: Dict[int, List[int]] = {}
    for j, d in enumerate(dims):
        by_dim.setdefault(d, []).append(j)
    positive = [True] * n
    pairs: Dict[int, int] = {}
    cleared = set()
    for d in sorted(by_dim, reverse=True):
        if d == 0:
            break
        owner: Dict[int, int] = {}
        reduced: Dict[int, set] = {}
        for j in by_dim[d]:
            if j in cleared:
                continue
            col = set(matrix.columns[j])
            while col:
                low = max(col)
                k = owner.get(low)
                if k is None:
                    break
                col ^= reduced[k]
            if col:
                low = max(col)
                owner[low] = j
                reduced[j] = col
                positive[j] = False
                pairs[low] = j
                cleared.add(low)
    return pairs, positive


@dataclass
class ImageRankResult:
    image_ranks: Dict[int, int]
    betti_lo: Dict[int, int]
    betti_hi: Dict[int, int]
    intervals: List[Tuple[int, float, float]] = field(repr=False, default_factory=list)
    alpha_lo: float = 0.0
    alpha_hi: float = 0.0

    def ranks(self) -> List[int]:
        return [self.image_ranks[d] for d in sorted(self.image_ranks)]

    def export_barcode(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# dimension, birth, death (inf for classes alive at the top level)\n")
            fh.write(format_rows([[d, b, e] for d, b, e in self.intervals]))


def barcode(simplices: Sequence[Tuple[int, ...]], filtrations: np.ndarray):
    """(dimension, birth, death) for every positive simplex, death=inf if unpaired."""
    matrix = boundary_matrix(simplices)
    pairs, positive = reduce_boundary(matrix)
    out = []
    for j, pos in enumerate(positive):
        if not pos:
            continue
        death = pairs.get(j)
        out.append((matrix.dims[j], float(filtrations[j]),
                    math.inf if death is None else float(filtrations[death])))
    return out


def persistent_image_rank(complex_: FilteredCliqueComplex,
                          dims: Optional[Sequence[int]] = None) -> ImageRankResult:
    """Rank of H_i(K_lo) -> H_i(K_hi) for the two marked levels of the complex.

    An interval [b, e) contributes exactly when b <= alpha_lo and e > alpha_hi.
    """
    top = complex_.max_dim - 1
    if dims is None:
        dims = range(0, top + 1)
    dims = list(dims)
    if dims and max(dims) > top:
        raise ValueError(f"homology above dimension {top} needs simplices of higher dimension")
    intervals = barcode(complex_.simplices, complex_.filtrations)
    lo, hi = complex_.alpha_lo, complex_.alpha_hi
    ranks = {d: 0 for d in dims}
    b_lo = {d: 0 for d in dims}
    b_hi = {d: 0 for d in dims}
    for d, b, e in intervals:
        if d not in ranks:
            continue
        if b <= lo and e > hi:
            ranks[d] += 1
        if b <= lo < e:
            b_lo[d] += 1
        if b <= hi < e:
            b_hi[d] += 1
    return ImageRankResult(ranks, b_lo, b_hi, intervals, lo, hi)


def betti_numbers(complex_, top_dim: int, level: Optional[float] = None) -> List[int]:
    """Betti numbers over Z/2 for dimensions 0..top_dim.

    Accepts a FilteredCliqueComplex (optionally cut at ``level``) or any
    face-closed collection of vertex tuples.
    """
    if isinstance(complex_, FilteredCliqueComplex):
        cut = complex_.alpha_hi if level is None else level
        if top_dim > complex_.max_dim - 1:
            raise ValueError("complex lacks the simplices needed for that dimension")
        stop = int(np.searchsorted(complex_.filtrations, cut, side="right"))
        simplices = complex_.simplices[:stop]
        filt = complex_.filtrations[:stop]
    else:
        simplices = sorted({tuple(sorted(s)) for s in complex_}, key=lambda s: (len(s), s))
        filt = np.array([len(s) - 1 for s in simplices], dtype=float)
    out = [0] * (top_dim + 1)
    for d, _, e in barcode(simplices, filt):
        if d <= top_dim and math.isinf(e):
            out[d] += 1
    return out


def euler_characteristic(simplices) -> int:
    return sum((-1) ** (len(s) - 1) for s in simplices)
