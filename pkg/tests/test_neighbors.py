"""Tests for nearest-neighbour assignment."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdd.exceptions import InvalidArgumentError
from cdd.models import PointCloud
from cdd.neighbors import assign, assign_brute, assign_kdtree, pair_distance
from cdd.pointcloud import make_rng


def cloud(*points):
    return PointCloud.from_points(points)


def test_brute_hand_enumeration():
    """One source point, two targets, both directions."""
    a = assign_brute(cloud((0, 0, 0)), cloud((1, 0, 0), (0, 0, 0)))
    assert a.forward == [(0.0, 1)]
    assert a.backward == [(1.0, 0), (0.0, 0)]


def test_brute_identity():
    """A cloud matched with itself maps every point to itself at distance 0."""
    pc = PointCloud(make_rng(3).uniform(-1, 1, size=(50, 3)))
    a = assign_brute(pc, pc)
    assert np.all(a.forward_dist == 0.0)
    assert a.forward_idx.tolist() == list(range(50))
    assert a.backward_idx.tolist() == list(range(50))


def test_brute_tie_breaks_by_smallest_index():
    """Equidistant targets resolve to the lowest index."""
    a = assign_brute(cloud((0, 0, 0)), cloud((1, 0, 0), (-1, 0, 0)))
    assert a.forward == [(1.0, 0)]


def test_empty_clouds_are_rejected():
    """Clouds cannot be empty; the check lives in PointCloud and in assign."""
    with pytest.raises(InvalidArgumentError):
        assign_brute(cloud((0, 0, 0)), PointCloud(np.empty((0, 3))))


def test_distances_follow_canonical_order():
    """Reported distances equal sqrt((dx^2 + dy^2) + dz^2) exactly."""
    rng = make_rng(11)
    src = PointCloud(rng.normal(size=(40, 3)))
    dst = PointCloud(rng.normal(size=(30, 3)))
    a = assign_brute(src, dst)
    expected = pair_distance(src.points, dst.points[a.forward_idx])
    assert np.array_equal(a.forward_dist, expected)


def test_kdtree_matches_brute_force_on_1000_points():
    """kd-tree distances equal brute-force distances exactly."""
    rng = make_rng(5)
    src = PointCloud(rng.uniform(-1, 1, size=(1000, 3)))
    dst = PointCloud(rng.uniform(-1, 1, size=(1000, 3)))
    brute = assign_brute(src, dst)
    tree = assign_kdtree(src, dst)
    assert np.array_equal(tree.forward_dist, brute.forward_dist)
    assert np.array_equal(tree.backward_dist, brute.backward_dist)


def test_kdtree_single_points():
    """Single-point clouds agree with brute force."""
    a, b = cloud((0.1, 0.2, 0.3)), cloud((-1, 2, 0.5))
    assert assign_kdtree(a, b).forward == assign_brute(a, b).forward
    assert assign_kdtree(a, b).backward == assign_brute(a, b).backward


def test_kdtree_duplicated_targets():
    """With duplicated targets the index lies within the duplicate set."""
    rng = make_rng(8)
    base = rng.uniform(-1, 1, size=(20, 3))
    target = PointCloud(np.concatenate([base, base]))
    source = PointCloud(base + 1e-3)
    brute = assign_brute(source, target)
    tree = assign_kdtree(source, target)
    assert np.array_equal(tree.forward_dist, brute.forward_dist)
    assert np.all(tree.forward_idx % 20 == brute.forward_idx % 20)


def test_kdtree_oracle_equivalence_random_instances():
    """Random instances up to 4096 points agree with brute force."""
    rng = make_rng(2024)
    for _ in range(20):
        n, m = rng.integers(1, 4097, size=2)
        src = PointCloud(rng.uniform(-1, 1, size=(n, 3)))
        dst = PointCloud(rng.uniform(-1, 1, size=(m, 3)))
        brute = assign_brute(src, dst)
        tree = assign_kdtree(src, dst)
        np.testing.assert_allclose(tree.forward_dist, brute.forward_dist, rtol=1e-12, atol=0)
        np.testing.assert_allclose(tree.backward_dist, brute.backward_dist, rtol=1e-12, atol=0)


@given(
    n=st.integers(1, 40),
    m=st.integers(1, 40),
    seed=st.integers(0, 2**32),
)
@settings(max_examples=50, deadline=None)
def test_assignment_lengths_and_consistency(n, m, seed):
    """Lengths match the clouds and every distance is its own pair's norm."""
    rng = make_rng(seed)
    src = PointCloud(rng.normal(size=(n, 3)))
    dst = PointCloud(rng.normal(size=(m, 3)))
    a = assign_brute(src, dst)
    assert len(a.forward) == n and len(a.backward) == m
    assert np.all(a.forward_dist <= pair_distance(src.points[:, None, :], dst.points[None, :, :]).min(axis=1))
    assert np.array_equal(a.backward_dist, pair_distance(dst.points, src.points[a.backward_idx]))


def test_assign_switches_to_kdtree_above_limit(monkeypatch):
    """assign uses brute force below CDD_BRUTE_LIMIT and the kd-tree above it."""
    calls = []
    import cdd.neighbors as neighbors

    original = neighbors.assign_kdtree
    monkeypatch.setattr(neighbors, "assign_kdtree", lambda s, t: calls.append(1) or original(s, t))
    src = PointCloud(make_rng(1).normal(size=(10, 3)))
    dst = PointCloud(make_rng(2).normal(size=(10, 3)))

    monkeypatch.setenv("CDD_BRUTE_LIMIT", "100")
    brute = assign(src, dst)
    assert calls == []
    monkeypatch.setenv("CDD_BRUTE_LIMIT", "99")
    tree = assign(src, dst)
    assert calls == [1]
    assert np.array_equal(brute.forward_dist, tree.forward_dist)


def test_kdtree_respects_thread_setting(monkeypatch):
    """CDD_THREADS=0 runs sequentially and gives the same answer."""
    rng = make_rng(4)
    src = PointCloud(rng.normal(size=(300, 3)))
    dst = PointCloud(rng.normal(size=(200, 3)))
    default = assign_kdtree(src, dst)
    monkeypatch.setenv("CDD_THREADS", "0")
    sequential = assign_kdtree(src, dst)
    assert np.array_equal(default.forward_dist, sequential.forward_dist)
    assert np.array_equal(default.forward_idx, sequential.forward_idx)
