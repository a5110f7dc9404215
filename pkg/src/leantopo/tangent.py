"""Per-sample tangent/normal space estimation by greedy fat-simplex growth.

Starting from a point and its nearest neighbour, the simplex is grown one vertex
at a time: the next vertex is the closest point whose offset from the base point
makes an angle of at least ``pi/2 - pi/5`` with the span built so far.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping

import numpy as np

from .geometry import PointCloud, SpatialIndex, SubspaceBasis, format_rows, principal_angle

WINDOW = np.pi / 5
MIN_ANGLE = np.pi / 2 - WINDOW


class InsufficientCandidates(RuntimeError):
    def __init__(self, point_id: int, reached: int, needed: int):
        self.point_id = point_id
        super().__init__(
            f"point {point_id}: only {reached} of {needed} simplex directions found "
            "inside the angle window"
        )


@dataclass(frozen=True, eq=False)
class TangentEstimate:
    point_id: int
    tangent_basis: SubspaceBasis
    normal_basis: SubspaceBasis
    witness_ids: tuple


def _offset_angle(v: np.ndarray, span: np.ndarray) -> float:
    coef = span @ v
    across = np.linalg.norm(v - span.T @ coef)
    return float(np.arctan2(across, np.linalg.norm(coef)))


def estimate_tangent_basis(cloud: PointCloud, index: SpatialIndex, p: int,
                           first_batch: int = 16) -> TangentEstimate:
    pts = cloud.points
    n, k = pts.shape
    s = cloud.intrinsic_dim
    if n < s + 1:
        raise InsufficientCandidates(p, 0, s)
    origin = pts[p]
    batch = min(first_batch, n - 1)
    while True:
        ids, _ = index.knn(origin, batch, exclude=(p,))
        witness = [p, int(ids[0])]
        span = (pts[ids[0]] - origin)[None, :] / np.linalg.norm(pts[ids[0]] - origin)
        ok = True
        for _ in range(1, s):
            chosen = None
            for c in ids:
                c = int(c)
                if c in witness:
                    continue
                v = pts[c] - origin
                if _offset_angle(v, span) >= MIN_ANGLE:
                    chosen = c
                    break
            if chosen is None:
                ok = False
                break
            witness.append(chosen)
            grown = _grow(span, pts[chosen] - origin)
            if grown is None:
                raise InsufficientCandidates(p, len(witness) - 2, s)
            span = grown
        if ok:
            break
        if batch >= n - 1:
            raise InsufficientCandidates(p, len(witness) - 1, s)
        batch = min(4 * batch, n - 1)

    tangent = SubspaceBasis(span)
    if s == k:
        normal = SubspaceBasis(np.zeros((0, k)))
    else:
        normal = tangent.complement()
    return TangentEstimate(p, tangent, normal, tuple(witness))


def _grow(span: np.ndarray, v: np.ndarray):
    w = v.astype(float).copy()
    for _ in range(2):
        w -= span.T @ (span @ w)
    nw = np.linalg.norm(w)
    if nw <= 1e-10 * np.linalg.norm(v):
        return None
    return np.vstack([span, w / nw])


def estimate_all_normals(cloud: PointCloud, index: SpatialIndex) -> Dict[int, TangentEstimate]:
    out = {}
    for p in range(len(cloud)):
        out[p] = estimate_tangent_basis(cloud, index, p)
    return out


def normal_stack(normals, n: int) -> np.ndarray:
    """(n, k - s, k) array of normal bases from estimates or an array."""
    if isinstance(normals, np.ndarray):
        if len(normals) != n:
            raise ValueError("normal array does not match the cloud size")
        return normals
    missing = [i for i in range(n) if i not in normals]
    if missing:
        from .lean import MissingNormal

        raise MissingNormal(f"no normal space for point(s) {missing[:5]}")
    return np.stack([normals[i].normal_basis.vectors for i in range(n)])


def estimation_errors(estimates: Mapping[int, TangentEstimate], true_normals: np.ndarray) -> np.ndarray:
    """Largest principal angle between estimated and reference normal spaces."""
    errs = np.empty(len(estimates))
    for i, p in enumerate(sorted(estimates)):
        errs[i] = principal_angle(estimates[p].normal_basis, SubspaceBasis(true_normals[p]))
    return errs


def export_normals(path, estimates: Mapping[int, TangentEstimate]) -> None:
    rows = []
    for p in sorted(estimates):
        rows.append([p, *estimates[p].normal_basis.vectors.ravel()])
    with open(path, "w") as fh:
        fh.write("# point_id followed by the normal basis rows, flattened\n")
        fh.write(format_rows(rows))
