"""Randomised cross-checks runnable from the command line."""

from __future__ import annotations

import sys
from itertools import combinations

import numpy as np

from .complex import adaptive_rips, flag_complex
from .geometry import SpatialIndex
from .homology import barcode, betti_numbers, boundary_matrix, euler_characteristic, persistent_image_rank
from .oracles import brute_ball_empty, brute_knn, image_rank_oracle, rips_oracle


def random_two_level_complex(rng, max_vertices: int = 12, max_dim: int = 3):
    """Flag complex of a random weighted graph plus two random levels in (0, 1)."""
    n = int(rng.integers(3, max_vertices + 1))
    p = rng.uniform(0.3, 0.9)
    ei, ej, w = [], [], []
    for a, b in combinations(range(n), 2):
        if rng.random() < p:
            ei.append(a)
            ej.append(b)
            w.append(float(rng.integers(1, 20)) / 20)
    simplices, filt = flag_complex(n, np.array(ei, dtype=np.int64), np.array(ej, dtype=np.int64),
                                   np.array(w), max_dim)
    lo, hi = sorted(rng.uniform(0.0, 1.0, 2))
    return simplices, filt, float(lo), float(hi)


def check_persistence(rng, max_dim: int = 3):
    """Returns a list of failure messages for one random complex."""
    from .complex import FilteredCliqueComplex

    simplices, filt, lo, hi = random_two_level_complex(rng, max_dim=max_dim)
    K = FilteredCliqueComplex(simplices, filt, lo, hi, max_dim)
    bad = []
    result = persistent_image_rank(K)
    k_lo, k_hi = K.level(lo), K.level(hi)
    for d in result.image_ranks:
        want = image_rank_oracle(k_lo, k_hi, d)
        if result.image_ranks[d] != want:
            bad.append(f"image rank H_{d}: {result.image_ranks[d]} != oracle {want}")
    matrix = boundary_matrix(simplices)
    for j, col in enumerate(matrix.columns):
        acc = set()
        for r in col:
            acc ^= set(matrix.columns[r])
        if acc:
            bad.append(f"boundary of boundary non-zero at column {j}")
            break
    for level in (lo, hi):
        sub = K.level(level)
        top = max_dim - 1
        b = betti_numbers(K, top, level)
        chi = euler_characteristic(sub)
        # every dimension is present in the level complex, so the full Euler sum applies
        b_all = [0] * (max_dim + 1)
        sub_filt = np.zeros(len(sub))
        for d, _, e in barcode(sub, sub_filt):
            if np.isinf(e):
                b_all[d] += 1
        if sum((-1) ** d * v for d, v in enumerate(b_all)) != chi:
            bad.append("Euler characteristic mismatch")
        if b != b_all[:top + 1]:
            bad.append("Betti numbers disagree with the barcode")
    return bad


def check_rips_degeneration(rng):
    n = int(rng.integers(5, 16))
    pts = rng.uniform(0, 1, (n, int(rng.integers(2, 4))))
    c = float(rng.uniform(0.1, 0.5))
    alpha = float(rng.uniform(0.3, 1.5))
    K = adaptive_rips(pts, np.full(n, c), alpha, alpha, 3)
    want = sorted(rips_oracle(pts, 2 * alpha * c, 3))
    got = sorted(K.simplices)
    return [] if got == want else ["adaptive complex with constant lnfs differs from Rips"]


def check_index(rng):
    pts = rng.normal(size=(int(rng.integers(20, 80)), int(rng.integers(1, 4))))
    brute = SpatialIndex(pts, mode="brute")
    tree = SpatialIndex(pts, mode="kdtree")
    bad = []
    x = rng.normal(size=pts.shape[1])
    k = int(rng.integers(1, 6))
    ib, db = brute.knn(x, k)
    it, dt = tree.knn(x, k)
    if not (np.array_equal(ib, it) and np.array_equal(db, dt)):
        bad.append("kd-tree kNN differs from brute force")
    if list(ib) != brute_knn(pts, x, k):
        bad.append("kNN differs from the reference scan")
    r = float(rng.uniform(0, 2))
    if brute.ball_is_empty(x, r) != tree.ball_is_empty(x, r) or \
            brute.ball_is_empty(x, r) != brute_ball_empty(pts, x, r):
        bad.append("ball emptiness disagrees between modes")
    return bad


def run_selftest(trials: int = 100, seed: int = 0, out=sys.stdout) -> int:
    rng = np.random.default_rng(seed)
    suites = [("persistence vs Z/2 oracle", check_persistence),
              ("constant-lnfs Rips degeneration", check_rips_degeneration),
              ("spatial index modes", check_index)]
    failures = 0
    for name, check in suites:
        bad = []
        for _ in range(trials):
            bad.extend(check(rng))
        failures += len(bad)
        status = "PASS" if not bad else f"FAIL ({len(bad)})"
        out.write(f"{status:10s} {name} [{trials} trials]\n")
        for msg in bad[:5]:
            out.write(f"    {msg}\n")
    return failures
