import numpy as np
import pytest

from geocd import (
    PointCloud,
    chamfer,
    dijkstra_all_pairs,
    finite_diff_grad,
    geocd,
    GeoCdConfig,
    hop_bounded_shortest_paths,
    knn_adjacency,
    merge,
    propagate,
)
from geocd.verify import check_gradients, check_propagation, run_verification
from conftest import random_normalized_pair


def cloud(*pts):
    return PointCloud(np.array(pts, dtype=np.float64))


def test_single_hop_returns_adjacency(rng):
    pred, gt = random_normalized_pair(rng, 8, 8)
    z = merge(pred, gt)
    adj = knn_adjacency(z, 3)
    assert np.array_equal(hop_bounded_shortest_paths(adj, 1), adj.dist)


def test_l_shape_two_hops():
    z = merge(cloud([0, 0, 0]), cloud([0.4, 0, 0], [0.4, 0.3, 0]))
    adj = knn_adjacency(z, 1)
    walks = hop_bounded_shortest_paths(adj, 2)
    assert walks[0, 2] == pytest.approx(0.7, abs=1e-12)


def test_hop_bound_is_respected():
    # decreasing gaps make each point's 1-NN the next one: a forward chain
    # 0 -> 1 -> 2 -> 3 that needs three hops to link the ends
    pts = [[0.0, 0, 0], [0.3, 0, 0], [0.55, 0, 0], [0.75, 0, 0]]
    z = merge(cloud(*pts[:2]), cloud(*pts[2:]))
    adj = knn_adjacency(z, 1)
    assert hop_bounded_shortest_paths(adj, 2)[0, 3] == 1.0
    assert hop_bounded_shortest_paths(adj, 3)[0, 3] == pytest.approx(0.75, abs=1e-12)


def test_bellman_ford_converges_to_dijkstra(rng):
    for _ in range(3):
        pred, gt = random_normalized_pair(rng, 10, 9)
        z = merge(pred, gt)
        adj = knn_adjacency(z, 3)
        full = hop_bounded_shortest_paths(adj, z.size - 1)
        assert np.abs(full - dijkstra_all_pairs(adj)).max() < 1e-12


def test_oracle_matches_propagation(rng):
    for _ in range(5):
        n = int(rng.integers(8, 33))
        m = int(rng.integers(8, 33))
        pred, gt = random_normalized_pair(rng, n, m)
        z = merge(pred, gt)
        adj = knn_adjacency(z, int(rng.choice([2, 3, 5])))
        hops = int(rng.integers(1, 5))
        got = propagate(z, adj, hops).states[-1].dist
        assert np.abs(got - hop_bounded_shortest_paths(adj, hops)).max() < 1e-9


def test_finite_diff_on_chamfer_closed_form():
    p, q = cloud([0, 0, 0]), cloud([1, 0, 0])
    grad, flagged = finite_diff_grad(lambda pts: chamfer(PointCloud(pts), q).value, p.points)
    assert np.allclose(grad, [[-4.0, 0.0, 0.0]], atol=1e-6)
    assert not flagged.any()


def test_finite_diff_on_geocd_singleton():
    p, q = cloud([0.1, 0.2, 0.3]), cloud([0.4, 0.2, 0.3])
    cfg = GeoCdConfig(k=1, n_hops=2)
    grad, _ = finite_diff_grad(lambda pts: geocd(PointCloud(pts), q, cfg).value, p.points)
    expected = 2.0 * (p.points - q.points) / 0.3
    assert np.allclose(grad, expected, atol=1e-6)


def test_finite_diff_flags_structure_changes():
    # the two ground-truth points tie as nearest neighbour of p along x, so
    # perturbing p.x flips the kNN edge and the coordinate must be flagged
    p = cloud([0.0, 0.0, 0.0])
    q = cloud([0.5, 0.0, 0.0], [-0.5, 0.0, 0.0])
    cfg = GeoCdConfig(k=1, n_hops=1)

    def sig(pts):
        z = merge(PointCloud(pts), q)
        return knn_adjacency(z, 1).edge_mask.tobytes()

    _, flagged = finite_diff_grad(
        lambda pts: geocd(PointCloud(pts), q, cfg).value, p.points, signature_fn=sig
    )
    assert flagged[0, 0]


def test_check_propagation_clean(rng):
    out = check_propagation(trials=5, seed=11)
    assert out["mismatch_count"] == 0
    assert out["max_abs_diff"] <= 1e-9


def test_check_propagation_detects_injected_fault():
    out = check_propagation(trials=2, seed=1, inject_fault=True)
    assert out["mismatch_count"] > 0
    assert out["worst_offenders"]


def test_check_gradients_clean():
    out = check_gradients(trials=2, seed=3)
    assert out["matched"] == out["components"] - out["skipped_tie_components"]
    assert out["skipped_tie_components"] <= 0.05 * out["components"]


def test_run_verification_roundtrip():
    res = run_verification(trials=3, seed=2, grad_trials=1)
    assert res.passed
    d = res.as_dict()
    assert d["oracle"]["mismatch_count"] == 0
    bad = run_verification(trials=2, seed=2, grad_trials=0, inject_fault=True)
    assert not bad.passed
