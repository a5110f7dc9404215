"""Greedy decimation by lean feature size and the uniformity audit of its output."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .geometry import PointCloud, SpatialIndex, distances, format_rows

# Coverage radius factor checked at sample points; the continuum density bound is 4/3.
COVERAGE_FACTOR = 6 / 5


class MissingLnfs(ValueError):
    pass


@dataclass(eq=False)
class SparseSample:
    retained: List[int]
    lnfs_of: np.ndarray
    deleted_by: Dict[int, int]
    rho: float

    def __len__(self) -> int:
        return len(self.retained)

    def retainer(self, p: int) -> int:
        return self.deleted_by.get(p, p)


def _check_lnfs(cloud: PointCloud, lnfs_of) -> np.ndarray:
    lnfs = np.asarray(lnfs_of, dtype=float)
    if lnfs.shape != (len(cloud),):
        raise MissingLnfs(f"expected {len(cloud)} lnfs values, got shape {lnfs.shape}")
    if not np.all(np.isfinite(lnfs)):
        raise MissingLnfs("lnfs contains non-finite values")
    return lnfs


def lean_sparsify(cloud: PointCloud, lnfs_of, rho: float, index: SpatialIndex = None) -> SparseSample:
    """Extract points by decreasing lnfs (ties: smaller id first); each extracted
    point q deletes every remaining point within rho * lnfs(q)."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    lnfs = _check_lnfs(cloud, lnfs_of)
    n = len(cloud)
    if index is None:
        index = SpatialIndex(cloud.points)
    order = np.lexsort((np.arange(n), -lnfs))
    alive = np.ones(n, dtype=bool)
    retained = []
    deleted_by = {}
    for q in order:
        q = int(q)
        if not alive[q]:
            continue
        alive[q] = False
        retained.append(q)
        for p in index.ball_query(cloud.points[q], rho * lnfs[q]):
            if alive[p]:
                alive[p] = False
                deleted_by[int(p)] = q
    return SparseSample(retained, lnfs, deleted_by, float(rho))


@dataclass
class UniformityReport:
    rho: float
    sparsity_violations: list = field(default_factory=list)
    coverage_violations: list = field(default_factory=list)
    coverage_factor: float = COVERAGE_FACTOR
    worst_coverage_ratio: float = 0.0

    @property
    def sparse_ok(self) -> bool:
        return not self.sparsity_violations

    @property
    def dense_ok(self) -> bool:
        return not self.coverage_violations

    @property
    def ok(self) -> bool:
        return self.sparse_ok and self.dense_ok

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "sparsity_ok": self.sparse_ok,
            "coverage_ok": self.dense_ok,
            "sparsity_violations": len(self.sparsity_violations),
            "coverage_violations": len(self.coverage_violations),
            "coverage_factor": self.coverage_factor,
            "worst_coverage_ratio": self.worst_coverage_ratio,
            "density_note": "coverage checked at input points with factor 6/5; "
                            "the continuum density bound 4/3 is not asserted",
        }


def verify_uniformity(sample: SparseSample, cloud: PointCloud, lnfs_of) -> UniformityReport:
    lnfs = _check_lnfs(cloud, lnfs_of)
    rho = sample.rho
    P = cloud.points
    kept = np.asarray(sample.retained, dtype=np.intp)
    report = UniformityReport(rho)
    if len(kept) == 0:
        report.coverage_violations = list(range(len(cloud)))
        return report

    rank = np.full(len(cloud), -1)
    rank[kept] = np.arange(len(kept))
    kept_index = SpatialIndex(P[kept])
    for pos, q in enumerate(kept):
        near = kept_index.ball_query(P[q], rho * lnfs[q])
        later = [int(kept[j]) for j in near if j > pos]
        report.sparsity_violations.extend((int(q), j) for j in later)

    worst = 0.0
    for p in range(len(cloud)):
        q = sample.retainer(p)
        if rank[q] < 0:
            report.coverage_violations.append(p)
            continue
        d = float(distances(P[q:q + 1], P[p])[0])
        if lnfs[q] > 0:
            worst = max(worst, d / (rho * lnfs[q]))
        if d <= COVERAGE_FACTOR * rho * lnfs[q]:
            continue
        d_all = distances(P[kept], P[p])
        if not np.any(d_all <= COVERAGE_FACTOR * rho * lnfs[kept]):
            report.coverage_violations.append(p)
    report.worst_coverage_ratio = worst
    return report


def export_sparse(path, cloud: PointCloud, sample: SparseSample) -> None:
    rows = [[*cloud.points[q], sample.lnfs_of[q]] for q in sample.retained]
    with open(path, "w") as fh:
        fh.write(f"# rho={sample.rho!r}; coordinates then lnfs, in extraction order\n")
        fh.write(format_rows(rows))


def export_deletions(path, sample: SparseSample) -> None:
    rows = [[p, q] for p, q in sorted(sample.deleted_by.items())]
    with open(path, "w") as fh:
        fh.write("# deleted point id, retaining point id\n")
        fh.write(format_rows(rows))
