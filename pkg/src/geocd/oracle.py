"""Slow reference implementations for tests and the ``verify`` command.

Deliberately independent of the production propagation code: shortest walks
are recomputed per source with plain relaxation rounds over the dense edge
set, and gradients come from central finite differences.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .graph import Adjacency


@dataclass
class OracleReport:
    max_abs_diff: float = 0.0
    max_rel_diff: float = 0.0
    mismatch_count: int = 0
    skipped_tie_components: int = 0


def hop_bounded_shortest_paths(adj: Adjacency, n_hops: int) -> np.ndarray:
    """Cheapest directed walk of at most n_hops edges between every pair.

    Sentinel entries are genuine edges of that cost. One relaxation round
    per extra hop, Jacobi style (each round reads the previous round only),
    so round h holds exactly the <=h-edge optimum.
    """
    if n_hops < 1:
        raise ValueError("n_hops must be >= 1")
    w = adj.dist
    n = w.shape[0]
    out = np.empty_like(w)
    for s in range(n):
        d = w[s].copy()  # walks of <= 1 edge (diagonal is 0)
        for _ in range(n_hops - 1):
            d = np.minimum(d, (d[:, None] + w).min(axis=0))
        out[s] = d
    return out


def dijkstra_all_pairs(adj: Adjacency) -> np.ndarray:
    """Converged shortest paths (no hop bound) on the same dense graph."""
    w = adj.dist
    n = w.shape[0]
    out = np.empty_like(w)
    for s in range(n):
        dist = np.full(n, np.inf)
        dist[s] = 0.0
        done = np.zeros(n, dtype=bool)
        heap = [(0.0, s)]
        while heap:
            d0, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            cand = d0 + w[u]
            better = cand < dist
            for v in np.flatnonzero(better):
                dist[v] = cand[v]
                heapq.heappush(heap, (float(cand[v]), int(v)))
        out[s] = dist
    return out


def finite_diff_grad(loss_fn, points: np.ndarray, step: float = 1e-5, signature_fn=None):
    """Central differences of a scalar loss per coordinate.

    When ``signature_fn`` is given, a coordinate whose +step and -step
    evaluations disagree on the discrete structure (graph topology, argmin
    walks) is flagged: the loss is not differentiable there and the
    numeric quotient is meaningless.

    Returns (grad, flagged) with shapes matching ``points``.
    """
    pts = np.array(points, dtype=np.float64)
    grad = np.zeros_like(pts)
    flagged = np.zeros(pts.shape, dtype=bool)
    for i in range(pts.shape[0]):
        for c in range(pts.shape[1]):
            hi = pts.copy()
            hi[i, c] += step
            lo = pts.copy()
            lo[i, c] -= step
            grad[i, c] = (loss_fn(hi) - loss_fn(lo)) / (2.0 * step)
            if signature_fn is not None and signature_fn(hi) != signature_fn(lo):
                flagged[i, c] = True
    return grad, flagged
