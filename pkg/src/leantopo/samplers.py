"""Synthetic manifold samples with analytic normals, feature-size oracles and Betti numbers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .geometry import PointCloud, format_rows

GOLDEN = (1 + 5 ** 0.5) / 2

# Covering radius (relative to lfs) accepted when a sampler is called with ``n`` only.
DEFAULT_EPS = 0.5


class UnderSampled(ValueError):
    def __init__(self, name: str, measured: float, requested: float):
        self.measured = measured
        self.requested = requested
        super().__init__(
            f"{name}: sample is only {measured:.4g}-dense relative to lfs, "
            f"requested {requested:.4g}; increase n"
        )


@dataclass
class AnalyticManifold:
    name: str
    ambient_dim: int
    intrinsic_dim: int
    betti: tuple
    lfs_kind: str
    point_at: Callable
    normal_at: Callable
    lfs_at: Callable


def covering_eps(points, reference, reference_lfs) -> float:
    """max over reference points x of d(x, sample) / lfs(x)."""
    d, _ = cKDTree(points).query(reference)
    return float(np.max(d / reference_lfs))


def _check_cover(name, points, reference, reference_lfs, eps):
    measured = covering_eps(points, reference, reference_lfs)
    if measured > eps:
        raise UnderSampled(name, measured, eps)
    return measured


# -- circle -----------------------------------------------------------------

def circle_manifold(radius: float = 1.0, center=(0.0, 0.0)) -> AnalyticManifold:
    c = np.asarray(center, dtype=float)

    def point_at(t):
        t = np.asarray(t, dtype=float)
        return c + radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def normal_at(t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.cos(t), np.sin(t)], axis=-1)[..., None, :]

    return AnalyticManifold("circle", 2, 1, (1, 1), "exact", point_at, normal_at,
                            lambda t: np.full(np.shape(t), float(radius)))


def sample_circle(radius: float = 1.0, n: Optional[int] = None, eps: Optional[float] = None,
                  center=(0.0, 0.0), jitter: float = 0.0, seed: int = 0) -> PointCloud:
    """Evenly spaced circle sample.

    With ``eps`` and no ``n`` the smallest n that is eps-dense is used.
    ``jitter`` perturbs each angle by a uniform fraction of the spacing.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n is None:
        if eps is None:
            raise ValueError("give n or eps")
        n = int(np.ceil(np.pi / (2 * np.arcsin(min(eps, 2.0) / 2))))
        n = max(n, 3)
    eps = DEFAULT_EPS if eps is None else eps
    m = circle_manifold(radius, center)
    t = 2 * np.pi * np.arange(n) / n
    if jitter:
        rng = np.random.default_rng(seed)
        t = t + rng.uniform(-jitter, jitter, n) * (2 * np.pi / n)
    pts = m.point_at(t)
    ref = 2 * np.pi * np.arange(10 * n) / (10 * n)
    _check_cover("circle", pts, m.point_at(ref), m.lfs_at(ref), eps)
    return PointCloud.from_points(pts, 1, normals=m.normal_at(t), lfs=m.lfs_at(t),
                                  lfs_kind="exact", betti=m.betti, name="circle")


# -- sphere -----------------------------------------------------------------

def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = 2 * np.pi * i / GOLDEN
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def sample_sphere(radius: float = 1.0, n: int = 4000, eps: Optional[float] = None) -> PointCloud:
    if radius <= 0:
        raise ValueError("radius must be positive")
    eps = DEFAULT_EPS if eps is None else eps
    u = _fibonacci_sphere(n)
    ref = _fibonacci_sphere(10 * n) * radius
    _check_cover("sphere", u * radius, ref, np.full(len(ref), float(radius)), eps)
    return PointCloud.from_points(u * radius, 2, normals=u[:, None, :].copy(),
                                  lfs=np.full(n, float(radius)), lfs_kind="exact",
                                  betti=(1, 0, 1), name="sphere")


# -- torus ------------------------------------------------------------------

def _torus_params(n: int, R: float, r: float, offset: float = 0.5):
    """Golden-ratio lattice pulled back so points are area-uniform."""
    i = np.arange(n) + offset
    u = 2 * np.pi * ((i / GOLDEN) % 1.0)
    w = i / n
    # invert F(v) = (v + (r/R) sin v) / 2pi on [0, 2pi) by Newton steps
    v = 2 * np.pi * w
    for _ in range(50):
        f = v + (r / R) * np.sin(v) - 2 * np.pi * w
        v = v - f / (1 + (r / R) * np.cos(v))
    return u, v


def torus_manifold(R: float = 2.0, r: float = 0.8) -> AnalyticManifold:
    def point_at(u, v):
        rho = R + r * np.cos(v)
        return np.stack([rho * np.cos(u), rho * np.sin(u), r * np.sin(v)], axis=-1)

    def normal_at(u, v):
        return np.stack([np.cos(v) * np.cos(u), np.cos(v) * np.sin(u), np.sin(v)], axis=-1)[..., None, :]

    def lfs_at(u, v):
        return np.minimum(r, R + r * np.cos(v))

    return AnalyticManifold("torus", 3, 2, (1, 2, 1), "lower_bound", point_at, normal_at, lfs_at)


def torus_residual(points, R: float, r: float) -> np.ndarray:
    """(sqrt(x^2 + y^2) - R)^2 + z^2 - r^2 for each point."""
    q = np.hypot(points[:, 0], points[:, 1]) - R
    return q * q + points[:, 2] ** 2 - r * r


def sample_torus(R: float = 2.0, r: float = 0.8, n: int = 5000, eps: Optional[float] = None) -> PointCloud:
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    eps = DEFAULT_EPS if eps is None else eps
    m = torus_manifold(R, r)
    u, v = _torus_params(n, R, r)
    pts = m.point_at(u, v)
    ru, rv = _torus_params(10 * n, R, r, offset=0.25)
    _check_cover("torus", pts, m.point_at(ru, rv), m.lfs_at(ru, rv), eps)
    return PointCloud.from_points(pts, 2, normals=m.normal_at(u, v), lfs=m.lfs_at(u, v),
                                  lfs_kind="lower_bound", betti=m.betti, name="torus")


# -- helix loop ---------------------------------------------------------------

def _curve_normals(tangents: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the plane orthogonal to each unit tangent in R^3."""
    t = tangents / np.linalg.norm(tangents, axis=1, keepdims=True)
    helper = np.where(np.abs(t[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    a = np.cross(t, helper)
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b = np.cross(t, a)
    return np.stack([a, b], axis=1)


def helix_loop_manifold(R: float = 1.0, a: float = 0.12, turns: int = 12) -> AnalyticManifold:
    """A helix wound around a circle: a closed curve in R^3."""

    def point_at(t):
        t = np.asarray(t, dtype=float)
        rho = R + a * np.cos(turns * t)
        return np.stack([rho * np.cos(t), rho * np.sin(t), a * np.sin(turns * t)], axis=-1)

    def tangent_at(t):
        t = np.asarray(t, dtype=float)
        rho = R + a * np.cos(turns * t)
        drho = -a * turns * np.sin(turns * t)
        return np.stack([drho * np.cos(t) - rho * np.sin(t), drho * np.sin(t) + rho * np.cos(t),
                         a * turns * np.cos(turns * t)], axis=-1)

    def normal_at(t):
        return _curve_normals(np.atleast_2d(tangent_at(t)))

    # Tube radius a bounds lfs from above; the oracle is not used quantitatively.
    return AnalyticManifold("helix", 3, 1, (1, 1), "none", point_at, normal_at,
                            lambda t: np.full(np.shape(t), float(a)))


def sample_helix_loop(n: int = 1000, R: float = 1.0, a: float = 0.12, turns: int = 12,
                      eps: Optional[float] = None) -> PointCloud:
    """Evenly spaced in parameter."""
    eps = DEFAULT_EPS if eps is None else eps
    m = helix_loop_manifold(R, a, turns)
    t = 2 * np.pi * np.arange(n) / n
    pts = m.point_at(t)
    ref = 2 * np.pi * np.arange(10 * n) / (10 * n)
    _check_cover("helix", pts, m.point_at(ref), m.lfs_at(ref), eps)
    return PointCloud.from_points(pts, 1, normals=m.normal_at(t), betti=m.betti, name="helix")


# -- neck curve ---------------------------------------------------------------

@dataclass
class NeckGeometry:
    """Two circular lobes joined by concave fillet arcs that pinch to a waist.

    Lobe 1 is centred at the origin; lobe 2 lies on the positive x-axis.
    """

    neck_width: float
    r_near: float
    r_far: float
    fillet: float

    def __post_init__(self):
        w, f = self.neck_width, self.fillet
        self.yf = w / 2 + f
        if self.yf >= min(self.r_near, self.r_far) + f:
            raise ValueError("fillet too large for the lobes")
        self.xf = np.sqrt((self.r_near + f) ** 2 - self.yf ** 2)
        self.c2 = self.xf + np.sqrt((self.r_far + f) ** 2 - self.yf ** 2)
        # tangent angles on each lobe, measured from the +x axis
        self.a1 = np.arctan2(self.yf, self.xf)
        self.a2 = np.arctan2(self.yf, self.xf - self.c2)
        self.pieces = self._pieces()
        self.length = sum(p[0] for p in self.pieces)

    def _pieces(self):
        """(length, point fn, normal fn) per arc, walking once around the region."""
        f, xf, yf, c2 = self.fillet, self.xf, self.yf, self.c2
        a1, a2 = self.a1, self.a2
        return [
            _arc(0.0, 0.0, self.r_near, a1, 2 * np.pi - a1),
            _arc(xf, -yf, f, np.arctan2(yf, -xf), np.arctan2(yf, c2 - xf)),
            _arc(c2, 0.0, self.r_far, -a2, a2),
            _arc(xf, yf, f, np.arctan2(-yf, c2 - xf), np.arctan2(-yf, -xf)),
        ]

    def locate(self, s):
        """Points and unit normals at arc-length positions ``s`` (taken mod length)."""
        s = np.mod(np.asarray(s, dtype=float), self.length)
        pts = np.empty((len(s), 2))
        nrm = np.empty((len(s), 2))
        start = 0.0
        for k, (length, pt, nm) in enumerate(self.pieces):
            last = k == len(self.pieces) - 1
            sel = (s >= start) & ((s < start + length) | last)
            u = (s[sel] - start) / length
            pts[sel] = pt(u)
            nrm[sel] = nm(u)
            start += length
        return pts, nrm


def _arc(cx, cy, rad, t0, t1):
    sweep = t1 - t0

    def pt(u):
        t = t0 + sweep * u
        return np.stack([cx + rad * np.cos(t), cy + rad * np.sin(t)], axis=-1)

    def nm(u):
        t = t0 + sweep * u
        return np.stack([np.cos(t), np.sin(t)], axis=-1)

    return abs(sweep) * rad, pt, nm


def medial_lfs(points: np.ndarray, normals: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Local feature size of a densely sampled closed planar curve.

    For each sample the largest empty tangent disc on either side is found;
    its centre lies on the medial axis. lfs is then the distance to the nearest
    such centre. Accuracy is limited by the reference resolution.
    """
    m = len(points)
    centres = []
    for a in range(0, m, chunk):
        x = points[a:a + chunk]
        nv = normals[a:a + chunk]
        diff = points[None, :, :] - x[:, None, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        dot = np.einsum("ijk,ik->ij", diff, nv)
        for sign in (1.0, -1.0):
            sd = sign * dot
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(sd > 1e-15 * np.sqrt(d2), d2 / (2 * sd), np.inf)
            rmin = r.min(axis=1)
            ok = np.isfinite(rmin)
            centres.append(x[ok] + sign * rmin[ok, None] * nv[ok])
    centres = np.concatenate(centres)
    d, _ = cKDTree(centres).query(points)
    return d


def sample_neck_curve(neck_width: float = 0.05, eps: float = 0.05, r_near: float = 1.0,
                      r_far: float = 10.0, fillet: Optional[float] = None,
                      reference: int = 8000) -> PointCloud:
    """Closed planar curve with a thin waist and a large far lobe.

    Arc-length steps are proportional to a numerically computed lfs, so the far
    lobe is sampled far more sparsely than the waist. ``lfs_kind`` is
    ``"approximate"``: the oracle comes from a finite reference polyline.
    """
    if neck_width <= 0 or eps <= 0:
        raise ValueError("neck_width and eps must be positive")
    geo = NeckGeometry(neck_width, r_near, r_far, 2 * neck_width if fillet is None else fillet)
    s_ref = geo.length * np.arange(reference) / reference
    ref_pts, ref_nrm = geo.locate(s_ref)
    ref_lfs = medial_lfs(ref_pts, ref_nrm)

    def lfs_at(s):
        return np.interp(np.mod(s, geo.length), np.append(s_ref, geo.length),
                         np.append(ref_lfs, ref_lfs[0]))

    # equal steps in the reparameterisation u(s) = integral of ds / lfs
    fine = geo.length * np.arange(20 * reference + 1) / (20 * reference)
    dens = 1.0 / lfs_at(fine)
    u = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(fine))])
    n = int(np.ceil(u[-1] / eps))
    s = np.interp(u[-1] * np.arange(n) / n, u, fine)
    pts, nrm = geo.locate(s)
    chk = geo.length * np.arange(10 * n) / (10 * n)
    chk_pts, _ = geo.locate(chk)
    _check_cover("neck", pts, chk_pts, lfs_at(chk), eps)
    cloud = PointCloud.from_points(pts, 1, normals=nrm[:, None, :], lfs=lfs_at(s),
                                   lfs_kind="approximate", betti=(1, 1), name="neck")
    return cloud


def add_normal_noise(cloud: PointCloud, normals, scale: float, seed: int = 0) -> PointCloud:
    """Move each point by u * diameter along a normal direction, u uniform in [-scale, scale].

    For codimension above one the direction is a seeded random unit vector of
    the normal space.
    """
    if scale < 0:
        raise ValueError("noise scale must be non-negative")
    if scale == 0:
        return cloud
    normals = np.asarray(normals, dtype=float)
    rng = np.random.default_rng(seed)
    n = len(cloud)
    u = rng.uniform(-scale, scale, n)
    if normals.shape[1] == 1:
        direction = normals[:, 0, :]
    else:
        w = rng.standard_normal((n, normals.shape[1]))
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        direction = np.einsum("nc,nck->nk", w, normals)
    pts = cloud.points + (u * cloud.diameter())[:, None] * direction
    return PointCloud(pts, cloud.intrinsic_dim, normals=cloud.normals, lfs=cloud.lfs,
                      lfs_kind=cloud.lfs_kind, betti=cloud.betti, name=cloud.name + "+noise")


def export_sidecar(path, cloud: PointCloud) -> None:
    """Per point: flattened analytic normal basis, then lfs (nan if unknown)."""
    n = len(cloud)
    nrm = np.full((n, 0), np.nan) if cloud.normals is None else cloud.normals.reshape(n, -1)
    lfs = np.full(n, np.nan) if cloud.lfs is None else cloud.lfs
    with open(path, "w") as fh:
        fh.write(f"# {cloud.name}: normal basis rows flattened, then lfs ({cloud.lfs_kind})\n")
        fh.write(format_rows([[*nrm[i], lfs[i]] for i in range(n)]))
