"""End-to-end topology inference: normals, lean set, lnfs, decimation, complex, homology."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .complex import ComplexTooLarge, DEFAULT_MAX_SIMPLICES, adaptive_rips
from .geometry import PointCloud, SpatialIndex, SubspaceBasis, distances, principal_angle
from .homology import betti_numbers, persistent_image_rank
from .lean import (DEFAULT_BETA, EmptyLeanSet, LeanSet, build_lean_set, build_reduced_lean_set,
                   c_beta, lean_feature_sizes, noise_filter, reduce_lean_set)
from .sparsify import SparseSample, lean_sparsify, verify_uniformity
from .tangent import InsufficientCandidates, estimate_all_normals

PRACTICAL_C_BETA = 0.5
PRACTICAL_RHO = 0.5
PRACTICAL_LEVEL = 0.7

HINTS = {
    "normals": "the cloud may be too small or degenerate for the stated intrinsic dimension",
    "lean": "no beta-good pair was found; the data may be flat, open, or too sparse "
            "relative to its feature size",
    "complex": "the sample is dense relative to the complex scale; raise max_simplices "
               "or sparsify more aggressively",
}


class ConfigError(ValueError):
    pass


def theory_rho(beta: float = DEFAULT_BETA) -> float:
    """Decimation ratio (1/26) cos(2 beta) / (1 + cos(2 beta))."""
    c = math.cos(2 * beta)
    return c / (26 * (1 + c))


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = "theory"
    beta: float = DEFAULT_BETA
    rho: float = field(default_factory=theory_rho)
    c_beta: float = field(default_factory=lambda: c_beta(DEFAULT_BETA))
    # Radius of the empty ball divided by the pair distance, as used in the test.
    ball_ratio: float = field(default_factory=lambda: c_beta(DEFAULT_BETA))
    levels: tuple = ()
    max_homology_dim: Optional[int] = None
    min_pair_distance: float = 0.0
    seed: int = 0
    lean: str = "reduced"
    normals: str = "estimate"
    max_simplices: int = DEFAULT_MAX_SIMPLICES
    timings: bool = True
    overrides: tuple = ()

    @classmethod
    def theory(cls, **kw) -> "PipelineConfig":
        banned = {"beta", "rho", "c_beta", "level"} & set(kw)
        if banned:
            raise ConfigError(f"theory mode derives {sorted(banned)} from beta = pi/5; "
                              "use practical mode to override")
        rho = theory_rho(DEFAULT_BETA)
        return cls(mode="theory", rho=rho, levels=(2 * rho, 12 * rho), **kw)

    @classmethod
    def practical(cls, beta: Optional[float] = None, rho: Optional[float] = None,
                  c_beta: Optional[float] = None, level: Optional[float] = None,
                  **kw) -> "PipelineConfig":
        """Fixed experimental constants; every explicit override is recorded.

        ``c_beta`` here scales the half pair distance (the distance from the
        midpoint to either endpoint), so the ball radius is c_beta * d(p, q) / 2.
        """
        given = {"beta": beta, "rho": rho, "c_beta": c_beta, "level": level}
        overrides = tuple(sorted((k, v) for k, v in given.items() if v is not None))
        beta = DEFAULT_BETA if beta is None else beta
        cb = PRACTICAL_C_BETA if c_beta is None else c_beta
        r = PRACTICAL_LEVEL if level is None else level
        return cls(mode="practical", beta=beta, rho=PRACTICAL_RHO if rho is None else rho,
                   c_beta=cb, ball_ratio=cb / 2, levels=(r,), overrides=overrides, **kw)

    def __post_init__(self):
        if self.mode not in ("theory", "practical"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.lean not in ("reduced", "full"):
            raise ConfigError("lean must be 'reduced' or 'full'")
        if self.normals not in ("estimate", "oracle"):
            raise ConfigError("normals must be 'estimate' or 'oracle'")
        if self.min_pair_distance < 0:
            raise ConfigError("min_pair_distance must be non-negative")
        if self.rho <= 0 or self.ball_ratio <= 0:
            raise ConfigError("rho and c_beta must be positive")
        if not self.levels:
            lv = (2 * self.rho, 12 * self.rho) if self.mode == "theory" else (PRACTICAL_LEVEL,)
            object.__setattr__(self, "levels", lv)
        if self.mode == "theory":
            if self.beta != DEFAULT_BETA or self.rho != theory_rho(DEFAULT_BETA) \
                    or self.ball_ratio != c_beta(DEFAULT_BETA):
                raise ConfigError("theory mode constants are fixed by beta = pi/5")

    @property
    def delta(self) -> float:
        return 6 * self.rho / 5

    def to_dict(self) -> dict:
        out = asdict(self)
        out["levels"] = list(self.levels)
        out["overrides"] = {k: v for k, v in self.overrides}
        out["delta"] = self.delta
        return out


@dataclass
class InferenceReport:
    input_size: int
    ambient_dim: int
    intrinsic_dim: int
    normals: dict
    lean_size: Optional[int]
    reduced_lean_size: int
    sparse_size: int
    betti: List[int]
    image_ranks: Dict[int, int]
    betti_lo: Dict[int, int]
    betti_hi: Dict[int, int]
    complex_counts: List[int]
    uniformity: dict
    config: dict
    timings: Optional[Dict[str, float]] = None
    artifacts: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "artifacts"}
        if self.timings is None:
            del out["timings"]
        for key in ("image_ranks", "betti_lo", "betti_hi"):
            out[key] = {str(d): v for d, v in sorted(out[key].items())}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _stage(name: str, err: Exception) -> Exception:
    err.stage = name
    err.hint = HINTS.get(name, "")
    return err


def _normal_stats(cloud: PointCloud, estimates) -> dict:
    out = {"count": len(estimates), "metric": "largest principal angle (rad)"}
    if cloud.normals is not None and estimates:
        errs = [principal_angle(estimates[p].normal_basis, SubspaceBasis(cloud.normals[p]))
                for p in sorted(estimates)]
        out["median_error"] = float(np.median(errs))
        out["max_error"] = float(np.max(errs))
    return out


def compute_lean(cloud: PointCloud, normals, index: SpatialIndex, config: PipelineConfig):
    """(full lean set or None, reduced lean set) after the noise filter."""
    if config.lean == "full":
        full = build_lean_set(cloud, normals, index, config.beta, config.ball_ratio)
        full = noise_filter(full, config.min_pair_distance)
        return full, reduce_lean_set(full)
    reduced = build_reduced_lean_set(cloud, normals, index, config.beta, config.ball_ratio,
                                     min_pair_distance=config.min_pair_distance)
    return None, reduced


def lean_topo(cloud: PointCloud, config: Optional[PipelineConfig] = None,
              stop_after_sparsify: bool = False) -> InferenceReport:
    config = PipelineConfig.theory() if config is None else config
    top = cloud.intrinsic_dim if config.max_homology_dim is None else config.max_homology_dim
    clock = {}
    t0 = time.perf_counter()

    def tick(name):
        nonlocal t0
        t = time.perf_counter()
        clock[name] = t - t0
        t0 = t

    index = SpatialIndex(cloud.points)
    if config.normals == "oracle":
        if cloud.normals is None:
            raise ConfigError("normals='oracle' needs a cloud with analytic normals")
        normals = cloud.normals
        normal_info = {"count": len(cloud), "source": "oracle"}
    else:
        try:
            normals = estimate_all_normals(cloud, index)
        except InsufficientCandidates as err:
            raise _stage("normals", err)
        normal_info = {"source": "estimated", **_normal_stats(cloud, normals)}
    tick("normals")

    full, reduced = compute_lean(cloud, normals, index, config)
    if len(reduced) == 0:
        raise _stage("lean", EmptyLeanSet("the lean set is empty"))
    tick("lean")

    lnfs = lean_feature_sizes(reduced, cloud.points)
    tick("lnfs")
    sample = lean_sparsify(cloud, lnfs, config.rho, index)
    uniformity = verify_uniformity(sample, cloud, lnfs).to_dict()
    tick("sparsify")

    artifacts = {"lean": full, "reduced_lean": reduced, "lnfs": lnfs, "sample": sample,
                 "normals": normals}
    betti: List[int] = []
    ranks, b_lo, b_hi, counts = {}, {}, {}, []
    if not stop_after_sparsify:
        ids = np.sort(np.asarray(sample.retained, dtype=np.int64))
        lo, hi = (config.levels[0], config.levels[-1])
        try:
            K = adaptive_rips(cloud.points[ids], lnfs[ids], lo, hi, top + 1,
                              config.max_simplices, vertex_ids=ids)
        except ComplexTooLarge as err:
            raise _stage("complex", err)
        counts = K.counts()
        tick("complex")
        if config.mode == "theory":
            result = persistent_image_rank(K, range(top + 1))
            ranks, b_lo, b_hi = result.image_ranks, result.betti_lo, result.betti_hi
            betti = result.ranks()
            artifacts["persistence"] = result
        else:
            betti = betti_numbers(K, top)
            ranks = {d: b for d, b in enumerate(betti)}
            b_lo = b_hi = dict(ranks)
        artifacts["complex"] = K
        tick("homology")

    return InferenceReport(
        input_size=len(cloud),
        ambient_dim=cloud.ambient_dim,
        intrinsic_dim=cloud.intrinsic_dim,
        normals=normal_info,
        lean_size=None if full is None else len(full),
        reduced_lean_size=len(reduced),
        sparse_size=len(sample),
        betti=betti,
        image_ranks=ranks,
        betti_lo=b_lo,
        betti_hi=b_hi,
        complex_counts=counts,
        uniformity=uniformity,
        config=config.to_dict(),
        timings={k: round(v, 6) for k, v in clock.items()} if config.timings else None,
        artifacts=artifacts,
    )


def h_scaled_diagnostic(x, cloud: PointCloud, lean: LeanSet) -> float:
    """d(x, P) / (d(x, P) + d(x, L)); 0 on samples, 1 on lean points."""
    if len(lean) == 0:
        raise EmptyLeanSet("scaled distance needs a non-empty lean set")
    x = np.asarray(x, dtype=float)
    dp = float(distances(cloud.points, x).min())
    dl = float(lean.distances(x[None, :])[0])
    if dp == 0:
        return 0.0
    return dp / (dp + dl)
