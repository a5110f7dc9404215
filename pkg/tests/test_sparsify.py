import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leantopo import (MissingLnfs, PointCloud, SpatialIndex, build_lean_set, lean_feature_sizes,
                      lean_sparsify, reduce_lean_set, sample_circle, theory_rho,
                      verify_uniformity)
from leantopo.sparsify import export_deletions, export_sparse


def line_cloud():
    xs = np.round(np.arange(7) * 0.2, 12)
    return PointCloud(np.stack([xs, np.zeros(7)], axis=1), 1)


def test_single_point():
    c = PointCloud(np.array([[0.3, 0.4]]), 1)
    s = lean_sparsify(c, [1.0], 0.5)
    assert s.retained == [0] and s.deleted_by == {}


def test_collinear_example():
    c = line_cloud()
    s = lean_sparsify(c, np.ones(7), 0.5)
    assert sorted(c.points[s.retained, 0].tolist()) == [0.0, 0.6, 1.2]
    assert s.deleted_by == {1: 0, 2: 0, 4: 3, 5: 3}
    rep = verify_uniformity(s, c, np.ones(7))
    assert rep.ok
    for p in range(7):
        q = s.retainer(p)
        assert abs(c.points[p, 0] - c.points[q, 0]) <= 0.6


def test_extraction_order_follows_lnfs():
    c = line_cloud()
    lnfs = np.array([1.0, 1, 1, 1, 1, 1, 2.0])
    s = lean_sparsify(c, lnfs, 0.5)
    assert s.retained[0] == 6


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.9))
def test_random_runs_are_uniform(seed, rho):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 300))
    c = PointCloud.from_points(rng.uniform(size=(n, 2)), 1)
    lnfs = rng.uniform(0.05, 1.0, len(c))
    s = lean_sparsify(c, lnfs, rho)
    rep = verify_uniformity(s, c, lnfs)
    assert rep.sparsity_violations == [] and rep.coverage_violations == []
    # the deletion rule itself: later retained points sit outside earlier balls
    P = c.points
    for a, q in enumerate(s.retained):
        for r in s.retained[a + 1:]:
            assert np.linalg.norm(P[q] - P[r]) > rho * lnfs[q]
    assert set(s.retained) | set(s.deleted_by) == set(range(len(c)))


def test_audit_flags_injected_violations():
    c = line_cloud()
    s = lean_sparsify(c, np.ones(7), 0.5)
    s.retained.append(1)
    del s.deleted_by[1]
    rep = verify_uniformity(s, c, np.ones(7))
    assert not rep.sparse_ok and rep.to_dict()["sparsity_violations"] == 2
    s2 = lean_sparsify(c, np.ones(7), 0.5)
    s2.retained.remove(6)
    assert not verify_uniformity(s2, c, np.ones(7)).dense_ok


def test_dense_circle_theory_rho():
    c = sample_circle(1.0, 2000)
    idx = SpatialIndex(c.points)
    lnfs = lean_feature_sizes(reduce_lean_set(build_lean_set(c, c.normals, idx)), c.points)
    rho = theory_rho()
    assert rho == pytest.approx(0.0090795, abs=5e-8)
    s = lean_sparsify(c, lnfs, rho, idx)
    assert verify_uniformity(s, c, lnfs).ok
    # rho * lnfs is about 0.0017, below the 0.0031 spacing: nothing to delete
    assert len(s) == len(c)


def test_bad_inputs(tmp_path):
    c = line_cloud()
    with pytest.raises(MissingLnfs):
        lean_sparsify(c, np.ones(3), 0.5)
    with pytest.raises(MissingLnfs):
        lean_sparsify(c, np.full(7, np.nan), 0.5)
    with pytest.raises(ValueError):
        lean_sparsify(c, np.ones(7), 0.0)
    s = lean_sparsify(c, np.ones(7), 0.5)
    export_sparse(tmp_path / "s.txt", c, s)
    export_deletions(tmp_path / "d.txt", s)
    assert len((tmp_path / "s.txt").read_text().splitlines()) == 1 + 3
    assert (tmp_path / "d.txt").read_text().splitlines()[1] == "1 0"
