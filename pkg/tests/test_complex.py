from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import pdist, squareform

from leantopo import (ComplexTooLarge, PointCloud, ZeroLnfs, adaptive_rips, betti_numbers,
                      build_single_scale_complex, build_two_scale_complex, edge_scale,
                      lean_sparsify, vietoris_rips)
from leantopo.complex import connectivity_threshold, rips_betti, strong_collapse
from leantopo.oracles import rips_oracle


def test_edge_scale_examples():
    pts = np.array([[0.0, 0.0], [0.1, 0.0]])
    assert edge_scale(0, 1, [0.2, 0.3], pts) == pytest.approx(0.2)
    assert edge_scale(1, 0, [0.2, 0.3], pts) == edge_scale(0, 1, [0.2, 0.3], pts)
    assert edge_scale(0, 0, [0.2, 0.3], pts) == 0.0
    with pytest.raises(ZeroLnfs):
        edge_scale(0, 1, [0.0, 0.3], pts)


def equilateral():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    return pts, np.full(3, 2.5)  # every edge scale is 1 / 5


def test_equal_scales_triangle_at_low_level():
    pts, lnfs = equilateral()
    K = adaptive_rips(pts, lnfs, 0.3, 0.6, 2)
    assert K.counts() == [3, 3, 1]
    assert K.counts(0.3) == [3, 3, 1]
    assert K.filtrations[-1] == pytest.approx(0.2)


def test_max_edge_rule():
    h = np.sqrt(0.6 ** 2 - 0.5 ** 2)
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, h]])
    lnfs = np.array([1.0, 1.0, 2.0])  # scales 0.5, 0.2, 0.2
    K = adaptive_rips(pts, lnfs, 0.3, 0.6, 2)
    assert K.counts(0.3) == [3, 2, 0]
    assert K.counts(0.6) == [3, 3, 1]
    tri = K.simplices.index((0, 1, 2))
    assert K.filtrations[tri] == pytest.approx(0.5)


def test_dimension_cap():
    pts, lnfs = equilateral()
    assert adaptive_rips(pts, lnfs, 0.3, 0.6, 1).counts() == [3, 3]
    with pytest.raises(ValueError):
        adaptive_rips(pts, lnfs, 0.3, 0.6, 0)
    with pytest.raises(ValueError):
        adaptive_rips(pts, lnfs, 0.7, 0.6, 2)
    with pytest.raises(ZeroLnfs):
        adaptive_rips(pts, np.zeros(3), 0.3, 0.6, 2)


def test_simplex_cap():
    pts = np.random.default_rng(0).uniform(size=(30, 2))
    with pytest.raises(ComplexTooLarge) as err:
        adaptive_rips(pts, np.ones(30), 1.0, 1.0, 3, max_simplices=100)
    assert err.value.cap == 100


def test_sample_wrappers_use_sorted_retained_ids():
    c = PointCloud(np.array([[0.0, 0], [0.2, 0], [0.4, 0], [0.6, 0]]), 1)
    s = lean_sparsify(c, np.array([0.5, 0.5, 0.5, 1.0]), 0.3)
    K = build_two_scale_complex(c, s, 0.2, 0.6, 2)
    assert list(K.vertex_ids) == sorted(s.retained)
    with pytest.raises(ValueError):
        build_two_scale_complex(c, s, 0.6, 0.6, 2)
    assert len(build_single_scale_complex(c, s, 0.6, 2)) == len(K)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_constant_lnfs_is_rips(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 14))
    pts = rng.uniform(size=(n, int(rng.integers(1, 4))))
    c = float(rng.uniform(0.05, 0.6))
    alpha = float(rng.uniform(0.2, 1.5))
    K = adaptive_rips(pts, np.full(n, c), alpha, alpha, 3)
    assert sorted(K.simplices) == sorted(rips_oracle(pts, 2 * alpha * c, 3))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 0.6))
def test_vietoris_rips_matches_oracle(seed, t):
    pts = np.random.default_rng(seed).uniform(size=(12, 2))
    assert sorted(vietoris_rips(pts, t, 3).simplices) == sorted(rips_oracle(pts, t, 3))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.15, 0.5))
def test_strong_collapse_keeps_homology(seed, t):
    pts = np.random.default_rng(seed).uniform(size=(25, 2))
    full = betti_numbers(vietoris_rips(pts, t, 2), 1)
    assert rips_betti(pts, t, 1) == full
    assert len(strong_collapse(pts, t)) <= len(pts)


def test_rips_betti_of_circle():
    t = np.linspace(0, 2 * np.pi, 60, endpoint=False)
    pts = np.stack([np.cos(t), np.sin(t)], axis=1)
    assert rips_betti(pts, 0.2, 1) == [1, 1]
    assert rips_betti(pts, 2.1, 1) == [1, 0]


@pytest.mark.parametrize("seed", range(5))
def test_connectivity_threshold_is_longest_mst_edge(seed):
    pts = np.random.default_rng(seed).uniform(size=(80, 3))
    want = minimum_spanning_tree(squareform(pdist(pts))).data.max()
    assert connectivity_threshold(pts) == pytest.approx(want, rel=1e-12)
    d = squareform(pdist(pts))
    # at the threshold the graph is connected; a hair below it is not
    assert len(betti_numbers(vietoris_rips(pts, want * (1 + 1e-9), 1), 0)) == 1
    assert betti_numbers(vietoris_rips(pts, want * (1 + 1e-9), 1), 0)[0] == 1
    assert betti_numbers(vietoris_rips(pts, want * (1 - 1e-9), 1), 0)[0] == 2
    assert d.max() >= want


def test_export(tmp_path):
    pts, lnfs = equilateral()
    K = adaptive_rips(pts, lnfs, 0.3, 0.6, 2, vertex_ids=[5, 7, 9])
    K.export(tmp_path / "k.txt")
    rows = (tmp_path / "k.txt").read_text().splitlines()[2:]
    assert rows[-1].startswith("2 5 7 9 ")
    assert len(rows) == 7


def test_simplices_sorted_and_face_closed():
    pts = np.random.default_rng(4).uniform(size=(15, 2))
    K = adaptive_rips(pts, np.random.default_rng(5).uniform(0.1, 0.3, 15), 0.5, 1.0, 3)
    assert np.all(np.diff(K.filtrations) >= 0)
    pos = {s: i for i, s in enumerate(K.simplices)}
    for s, i in pos.items():
        for face in combinations(s, len(s) - 1):
            if face:
                assert pos[face] < i
