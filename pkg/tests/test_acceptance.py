"""One test per acceptance criterion; each prints a PASS/FAIL line.

Pipeline runs are cached by name so the invariant checks (criteria 6 and 7)
audit exactly the runs made for criteria 1-5.
"""

import time
from functools import lru_cache

import numpy as np
import pytest

from leantopo import (PipelineConfig, PointCloud, SpatialIndex, add_normal_noise, build_lean_set,
                      c_beta, estimate_all_normals, lean_feature_sizes, lean_topo,
                      sample_circle, sample_helix_loop, sample_neck_curve, sample_sphere,
                      sample_torus)
from leantopo.complex import connectivity_threshold, rips_betti
from leantopo.samplers import covering_eps, torus_residual
from leantopo.selftest import check_persistence, check_rips_degeneration
from leantopo.tangent import estimation_errors

BETA = np.pi / 5
NOISE = 0.005
NOISE_SEED = 0


@pytest.fixture
def verdict(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        assert ok, detail
    return emit


def _neck():
    return sample_neck_curve(0.05, eps=0.006, fillet=0.1)


def _noisy_torus():
    clean = sample_torus(2.0, 0.8, 5000)
    return add_normal_noise(clean, clean.normals, NOISE, seed=NOISE_SEED), NOISE * clean.diameter()


CLOUDS = {
    "circle": lambda: sample_circle(1.0, 2000),
    "neck": _neck,
    "helix": lambda: sample_helix_loop(1000),
    "torus": lambda: sample_torus(2.0, 0.8, 5000),
    "sphere": lambda: sample_sphere(1.0, 4000),
}
CONFIGS = {
    "circle": PipelineConfig.theory(),
    "neck": PipelineConfig.theory(),
    "helix": PipelineConfig.practical(),
    "torus": PipelineConfig.practical(max_homology_dim=2),
    "sphere": PipelineConfig.practical(max_homology_dim=2),
}


@lru_cache(maxsize=None)
def cloud(name):
    if name.startswith("noisy"):
        return _noisy_torus()[0]
    return CLOUDS[name]()


@lru_cache(maxsize=None)
def run(name, k=None):
    """(report, seconds including sampling). ``k`` selects a noise-sweep threshold."""
    t = time.perf_counter()
    if k is None:
        c, cfg = cloud(name), CONFIGS[name]
    else:
        c, unit = _noisy_torus()
        cfg = PipelineConfig.practical(max_homology_dim=2, min_pair_distance=k * unit,
                                       normals="oracle")
    rep = lean_topo(c, cfg)
    return rep, time.perf_counter() - t


def test_c01_circle(verdict):
    rep, secs = run("circle")
    ok = rep.betti == [1, 1] and secs < 30
    verdict(1, ok, f"unit circle n=2000 theory mode -> {rep.betti} in {secs:.1f}s (< 30s)")


def test_c02_neck(verdict):
    rep, secs = run("neck")
    c = cloud("neck")
    d = np.sqrt(np.sum(np.diff(np.vstack([c.points, c.points[:1]]), axis=0) ** 2, axis=1))
    neck, far = c.lfs < 0.05, c.lfs > 5.0
    ratio = float(np.median(d[far]) / np.median(d[neck]))
    thr = connectivity_threshold(c.points)
    rips = rips_betti(c.points, thr * (1 + 1e-9), 1)
    ok = rep.betti == [1, 1] and secs < 60 and ratio >= 20 and rips[1] != 1
    verdict(2, ok, f"neck width 0.05, far/neck spacing {ratio:.0f}x: adaptive {rep.betti} "
                   f"in {secs:.1f}s (< 60s); fixed Rips at connecting radius {thr:.4f} -> {rips}")


def test_c03_helix(verdict):
    rep, _ = run("helix")
    ok = rep.betti[1] == 1 and 235 / 2 <= rep.sparse_size <= 2 * 235
    verdict(3, ok, f"helix loop n=1000 practical -> rank H1 {rep.betti[1]}, "
                   f"sparsified size {rep.sparse_size} (235 within 2x)")


def test_c04_surfaces(verdict):
    torus, t_secs = run("torus")
    sphere, s_secs = run("sphere")
    assert np.abs(torus_residual(cloud("torus").points, 2.0, 0.8)).max() < 1e-10
    ok = torus.betti == [1, 2, 1] and sphere.betti == [1, 0, 1] and max(t_secs, s_secs) < 300
    verdict(4, ok, f"torus n=5000 -> {torus.betti} in {t_secs:.1f}s; "
                   f"sphere n=4000 -> {sphere.betti} in {s_secs:.1f}s (< 300s each)")


def test_c05_noise_sweep(verdict):
    h1 = [run("noisy", k)[0].betti[1] for k in range(6)]
    ok = h1[0] != 2 and all(b == 2 for b in h1[3:])
    verdict(5, ok, f"torus with +/-0.5% diameter normal noise (seed {NOISE_SEED}), thresholds "
                   f"0..5 x noise scale -> H1 {h1}")


def test_c06_uniformity_every_run(verdict):
    reports = [(name, run(name)[0]) for name in CLOUDS]
    reports += [(f"noisy k={k}", run("noisy", k)[0]) for k in range(6)]
    bad = [(n, r.uniformity["sparsity_violations"], r.uniformity["coverage_violations"])
           for n, r in reports
           if r.uniformity["sparsity_violations"] or r.uniformity["coverage_violations"]]
    verdict(6, not bad, f"{len(reports)} pipeline runs, violating runs: {bad}")


def test_c07_reduced_lean_bounds(verdict):
    worst = {}
    bad = 0
    names = list(CLOUDS) + ["noisy"]
    for name in names:
        rep = run(name)[0] if name != "noisy" else run("noisy", 0)[0]
        c = cloud(name)
        cfg = rep.config
        idx = SpatialIndex(c.points)
        full = build_lean_set(c, rep.artifacts["normals"], idx, cfg["beta"], cfg["ball_ratio"])
        full = full.subset(np.nonzero(full.pair_distances >= cfg["min_pair_distance"])[0])
        lnfs = lean_feature_sizes(full, c.points)
        d_hat = rep.artifacts["lnfs"]
        bound = 1 + 1 / full.c_beta
        lo = d_hat < lnfs * (1 - 1e-12)
        hi = d_hat > bound * lnfs * (1 + 1e-12)
        bad += int(lo.sum() + hi.sum())
        worst[name] = round(float(np.max(d_hat / lnfs)), 3)
    verdict(7, bad == 0, f"lnfs <= d(p, reduced) <= (1 + 1/c_beta) lnfs on {names}; "
                         f"violations {bad}; worst ratios {worst}")


def _sandwich(c):
    idx = SpatialIndex(c.points)
    est = estimate_all_normals(c, idx)
    lnfs = lean_feature_sizes(build_lean_set(c, est, idx), c.points)
    c0 = np.sin(BETA)
    cb = c_beta(BETA)
    c2 = 2 * c0 * cb / (1 + c0 + 2 * c0 * cb)
    c1 = 1 + np.cos(np.pi / 4) + _eps(c)
    r = lnfs / c.lfs
    return r, c1, c2


def _eps(c):
    # covering radius of the sample relative to lfs, measured on a dense reference
    if c.name == "circle":
        ref = sample_circle(float(c.lfs[0]), 20 * len(c), eps=1.0)
    else:
        ref = sample_sphere(float(c.lfs[0]), 10 * len(c), eps=1.0)
    return covering_eps(c.points, ref.points, ref.lfs)


def test_c08_feature_size_sandwich(verdict):
    clouds = [sample_circle(1.0, 2000), sample_circle(3.0, 720, jitter=0.3),
              sample_sphere(1.0, 2000)]
    lines, ok = [], True
    for c in clouds:
        r, c1, c2 = _sandwich(c)
        inside = bool(np.all(r >= 0.8 * c2) and np.all(r <= 1.2 * c1))
        ok &= inside
        lines.append(f"{c.name} n={len(c)} lnfs/lfs in [{r.min():.4f}, {r.max():.4f}] "
                     f"vs [{0.8 * c2:.4f}, {1.2 * c1:.4f}]")
    target = 1 - np.cos(BETA)
    for radius, n in [(1.0, 720), (1.0, 2000), (3.0, 1500)]:
        c = sample_circle(radius, n)
        idx = SpatialIndex(c.points)
        lnfs = lean_feature_sizes(build_lean_set(c, estimate_all_normals(c, idx), idx), c.points)
        err = float(np.max(np.abs(lnfs / radius - target)) / target)
        ok &= err <= 0.2
        lines.append(f"circle R={radius} n={n} max |lnfs/R - (1-cos36)| = {100 * err:.1f}%")
    verdict(8, ok, "; ".join(lines))


def test_c09_persistence_oracle(verdict):
    rng = np.random.default_rng(2024)
    bad = []
    for _ in range(100):
        bad.extend(check_persistence(rng))
    verdict(9, not bad, f"100 random two-level flag complexes on <= 12 vertices: "
                        f"image ranks vs Z/2 oracle, boundary squared, Euler -> {len(bad)} failures")


def test_c10_rips_degeneration(verdict):
    rng = np.random.default_rng(77)
    bad = []
    for _ in range(50):
        bad.extend(check_rips_degeneration(rng))
    verdict(10, not bad, f"50 random clouds, constant lnfs c: adaptive complex at alpha equals "
                         f"Rips at 2 alpha c -> {len(bad)} mismatches")


def test_c11_tangent_estimation(verdict):
    med, worst = [], []
    for n in (5000, 20000):
        c = sample_sphere(1.0, n)
        errs = estimation_errors(estimate_all_normals(c, SpatialIndex(c.points)), c.normals)
        med.append(float(np.median(errs)))
        worst.append(float(errs.max()))
    ok = worst[0] < 0.2 and med[1] < med[0]
    verdict(11, ok, f"sphere n=5000 max error {worst[0]:.4f} rad (< 0.2); median "
                    f"{med[0]:.4f} -> {med[1]:.4f} at n=20000")


def _rotation(k, seed):
    q, r = np.linalg.qr(np.random.default_rng(seed).normal(size=(k, k)))
    return q * np.sign(np.diag(r))


def test_c12_invariance(verdict):
    lines, ok = [], True
    base = sample_circle(1.0, 2000, jitter=0.2, seed=5)
    ref = lean_topo(base, PipelineConfig.theory())
    helix = sample_helix_loop(1000)
    href = lean_topo(helix, PipelineConfig.practical())
    for c, r, cfg, seed in [(base, ref, PipelineConfig.theory(), 1),
                            (helix, href, PipelineConfig.practical(), 2)]:
        k = c.ambient_dim
        moved = c.points @ _rotation(k, seed).T + np.random.default_rng(seed).normal(size=k) * 5
        got = lean_topo(PointCloud(moved, c.intrinsic_dim), cfg).betti
        ok &= got == r.betti
        lines.append(f"{c.name} rigid motion {r.betti} -> {got}")
    for lam in (0.01, 1.0, 100.0):
        rep = lean_topo(PointCloud(base.points * lam, 1), PipelineConfig.theory())
        rel = float(np.max(np.abs(rep.artifacts["lnfs"] / (lam * ref.artifacts["lnfs"]) - 1)))
        ok &= rep.betti == ref.betti and rel <= 1e-9
        lines.append(f"scale {lam:g}: {rep.betti}, lnfs rel err {rel:.1e}")
    verdict(12, ok, "; ".join(lines))
