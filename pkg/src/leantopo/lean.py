"""beta-good pairs, the lean set, its linear-size reduction and the lean feature size."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .geometry import PointCloud, SpatialIndex, format_rows, sq_distances
from .tangent import normal_stack

DEFAULT_BETA = np.pi / 5


class OutOfRange(ValueError):
    pass


class MissingNormal(ValueError):
    pass


class EmptyLeanSet(RuntimeError):
    pass


def c_beta(beta: float) -> float:
    """Empty-ball radius ratio tan(beta/2)/3 for 0 < beta < pi/2."""
    if not 0 < beta < np.pi / 2:
        raise OutOfRange(f"beta={beta} outside (0, pi/2)")
    return float(np.tan(beta / 2) / 3)


class LeanPoint(NamedTuple):
    midpoint: np.ndarray
    pair: tuple
    pair_distance: float


@dataclass(eq=False)
class LeanSet:
    """Midpoints of beta-good pairs, stored column-wise.

    ``c_beta`` is the ratio between the empty-ball radius and the pair distance
    that was actually used to classify the pairs.
    """

    beta: float
    c_beta: float
    midpoints: np.ndarray
    pairs: np.ndarray
    pair_distances: np.ndarray
    reduced: bool = False
    _index: Optional[SpatialIndex] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, i: int) -> LeanPoint:
        a, b = self.pairs[i]
        return LeanPoint(self.midpoints[i], (int(a), int(b)), float(self.pair_distances[i]))

    def __iter__(self) -> Iterator[LeanPoint]:
        for i in range(len(self)):
            yield self[i]

    @property
    def points(self):
        return list(self)

    def subset(self, keep, reduced: Optional[bool] = None) -> "LeanSet":
        return LeanSet(
            self.beta,
            self.c_beta,
            self.midpoints[keep],
            self.pairs[keep],
            self.pair_distances[keep],
            self.reduced if reduced is None else reduced,
        )

    @property
    def index(self) -> SpatialIndex:
        if len(self) == 0:
            raise EmptyLeanSet("the lean set is empty")
        if self._index is None:
            self._index = SpatialIndex(self.midpoints)
        return self._index

    def distances(self, xs) -> np.ndarray:
        """Distance from each row of ``xs`` to the nearest lean midpoint."""
        return self.index.nearest_distances(np.atleast_2d(xs))


def _chord_normal_angles(chords: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """Angle between each chord and the matching normal space.

    ``normals`` is (m, c, k) or (c, k) for one shared space.
    """
    if normals.ndim == 2:
        coef = chords @ normals.T
        resid = chords - coef @ normals
    else:
        coef = np.einsum("mk,mck->mc", chords, normals)
        resid = chords - np.einsum("mc,mck->mk", coef, normals)
    along = np.sqrt(np.einsum("mc,mc->m", coef, coef))
    across = np.sqrt(np.einsum("mk,mk->m", resid, resid))
    return np.arctan2(across, along)


def _resolve_ratio(beta: float, c_beta_override: Optional[float]) -> float:
    base = c_beta(beta)
    if c_beta_override is None:
        return base
    if c_beta_override <= 0:
        raise OutOfRange("c_beta override must be positive")
    return float(c_beta_override)


def _normal_of(normals, p: int) -> np.ndarray:
    if isinstance(normals, np.ndarray):
        return normals[p]
    if p not in normals:
        raise MissingNormal(f"no normal space for point {p}")
    return normals[p].normal_basis.vectors


def is_beta_good(cloud: PointCloud, normals, index: SpatialIndex, p: int, q: int,
                 beta: float = DEFAULT_BETA, c_beta_override: Optional[float] = None) -> bool:
    if p == q:
        raise ValueError("a beta-good pair needs two distinct points")
    ratio = _resolve_ratio(beta, c_beta_override)
    np_, nq = _normal_of(normals, p), _normal_of(normals, q)
    P = cloud.points
    chord = (P[q] - P[p])[None, :]
    limit = np.pi / 2 - beta
    if _chord_normal_angles(chord, np_)[0] > limit:
        return False
    if _chord_normal_angles(-chord, nq)[0] > limit:
        return False
    mid = (P[p] + P[q]) / 2
    d = float(np.sqrt(sq_distances(P[q:q + 1], P[p])[0]))
    return index.ball_is_empty(mid, ratio * d, exclude=(p, q))


def build_lean_set(cloud: PointCloud, normals, index: SpatialIndex, beta: float = DEFAULT_BETA,
                   c_beta_override: Optional[float] = None, flush_at: int = 1 << 19) -> LeanSet:
    """Scan all unordered pairs (i < j) and keep the midpoints of beta-good ones.

    The endpoints of a pair never count against its own empty ball.
    """
    ratio = _resolve_ratio(beta, c_beta_override)
    P = cloud.points
    n, k = P.shape
    N = normal_stack(normals, n)
    limit = np.pi / 2 - beta

    out_pairs, out_mid, out_dist = [], [], []
    pend_i, pend_j = [], []
    pending = 0

    def flush():
        nonlocal pending
        if not pend_i:
            return
        ii = np.concatenate(pend_i)
        jj = np.concatenate(pend_j)
        pend_i.clear()
        pend_j.clear()
        pending = 0
        diff = P[jj] - P[ii]
        acc = np.zeros(len(ii))
        for c in range(k):
            acc += diff[:, c] * diff[:, c]
        d = np.sqrt(acc)
        mid = (P[ii] + P[jj]) / 2
        pairs = np.stack([ii, jj], axis=1)
        empty = index.balls_empty(mid, ratio * d, pairs)
        out_pairs.append(pairs[empty])
        out_mid.append(mid[empty])
        out_dist.append(d[empty])

    for i in range(n - 1):
        chords = P[i + 1:] - P[i]
        ok = _chord_normal_angles(chords, N[i]) <= limit
        js = np.nonzero(ok)[0]
        if js.size == 0:
            continue
        back = _chord_normal_angles(-chords[js], N[js + i + 1]) <= limit
        js = js[back] + i + 1
        if js.size == 0:
            continue
        pend_i.append(np.full(js.size, i, dtype=np.int64))
        pend_j.append(js.astype(np.int64))
        pending += js.size
        if pending >= flush_at:
            flush()
    flush()

    if out_pairs:
        pairs = np.concatenate(out_pairs)
        mids = np.concatenate(out_mid)
        dists = np.concatenate(out_dist)
    else:
        pairs = np.zeros((0, 2), dtype=np.int64)
        mids = np.zeros((0, k))
        dists = np.zeros(0)
    return LeanSet(float(beta), ratio, mids, pairs, dists, reduced=False)


def reduce_lean_set(lean: LeanSet, cloud: Optional[PointCloud] = None) -> LeanSet:
    """Keep, for every point, only the midpoint of its shortest beta-good pair."""
    if len(lean) == 0:
        return lean.subset(np.zeros(0, dtype=np.int64), reduced=True)
    m = len(lean)
    idx = np.arange(m)
    ends = np.concatenate([lean.pairs[:, 0], lean.pairs[:, 1]])
    dist = np.concatenate([lean.pair_distances, lean.pair_distances])
    which = np.concatenate([idx, idx])
    order = np.lexsort((which, dist, ends))
    ends_sorted = ends[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = ends_sorted[1:] != ends_sorted[:-1]
    keep = np.unique(which[order][first])
    return lean.subset(keep, reduced=True)


def build_reduced_lean_set(cloud: PointCloud, normals, index: SpatialIndex,
                           beta: float = DEFAULT_BETA, c_beta_override: Optional[float] = None,
                           min_pair_distance: float = 0.0, first_batch: int = 4) -> LeanSet:
    """The reduced lean set without enumerating every beta-good pair.

    For each point, partners passing the angle test are tried in order of
    (distance, pair ids) until one has an empty ball. The result equals
    ``reduce_lean_set(noise_filter(build_lean_set(...), min_pair_distance))``.
    """
    ratio = _resolve_ratio(beta, c_beta_override)
    P = cloud.points
    n, k = P.shape
    N = normal_stack(normals, n)
    limit = np.pi / 2 - beta
    ids = np.arange(n)
    found = set()
    guess = first_batch
    for i in range(n):
        # orient every chord from the smaller id so distances match the pair scan bit for bit
        lo = np.minimum(ids, i)
        hi = np.maximum(ids, i)
        diff = P[hi] - P[lo]
        acc = np.zeros(n)
        for c in range(k):
            acc += diff[:, c] * diff[:, c]
        chords = P - P[i]
        ok = _chord_normal_angles(chords, N[i]) <= limit
        ok[i] = False
        js = np.nonzero(ok)[0]
        if js.size == 0:
            continue
        back = _chord_normal_angles(-chords[js], N[js]) <= limit
        js = js[back]
        if js.size == 0:
            continue
        d = np.sqrt(acc[js])
        if min_pair_distance > 0:
            keep = d >= min_pair_distance
            js, d = js[keep], d[keep]
        order = np.lexsort((hi[js], lo[js], d))
        js = js[order]
        # neighbouring points tend to find their pair at a similar rank
        start, size = 0, max(first_batch, guess)
        while start < js.size:
            cand = js[start:start + size]
            a, b = lo[cand], hi[cand]
            mid = (P[a] + P[b]) / 2
            empty = index.balls_empty(mid, ratio * np.sqrt(acc[cand]), np.stack([a, b], axis=1))
            hit = np.nonzero(empty)[0]
            if hit.size:
                j = int(cand[hit[0]])
                found.add((min(i, j), max(i, j)))
                guess = int(1.25 * (start + hit[0])) + first_batch
                break
            start += size
            size *= 2
    if not found:
        return LeanSet(float(beta), ratio, np.zeros((0, k)), np.zeros((0, 2), dtype=np.int64),
                       np.zeros(0), reduced=True)
    pairs = np.array(sorted(found), dtype=np.int64)
    a, b = pairs[:, 0], pairs[:, 1]
    diff = P[b] - P[a]
    acc = np.zeros(len(pairs))
    for c in range(k):
        acc += diff[:, c] * diff[:, c]
    return LeanSet(float(beta), ratio, (P[a] + P[b]) / 2, pairs, np.sqrt(acc), reduced=True)


def noise_filter(lean: LeanSet, min_pair_distance: float) -> LeanSet:
    """Drop lean points whose pair is closer than ``min_pair_distance``."""
    if min_pair_distance < 0:
        raise ValueError("min_pair_distance must be non-negative")
    if min_pair_distance == 0:
        return lean
    return lean.subset(np.nonzero(lean.pair_distances >= min_pair_distance)[0])


def lean_feature_size(lean: LeanSet, x) -> float:
    """Distance from ``x`` to the nearest lean midpoint."""
    if len(lean) == 0:
        raise EmptyLeanSet("lean feature size is undefined for an empty lean set")
    return float(lean.distances(np.asarray(x, dtype=float)[None, :])[0])


def lean_feature_sizes(lean: LeanSet, xs) -> np.ndarray:
    if len(lean) == 0:
        raise EmptyLeanSet("lean feature size is undefined for an empty lean set")
    return lean.distances(xs)


def export_lean_set(path, lean: LeanSet) -> None:
    rows = [[*lean.midpoints[i], int(a), int(b), lean.pair_distances[i]]
            for i, (a, b) in enumerate(lean.pairs)]
    with open(path, "w") as fh:
        fh.write(f"# beta={lean.beta!r} c_beta={lean.c_beta!r} reduced={lean.reduced}\n")
        fh.write("# midpoint coordinates, pair ids, pair distance\n")
        fh.write(format_rows(rows))
