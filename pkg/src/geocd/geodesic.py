"""Multi-hop shortest-walk propagation over the merged kNN graph.

Hop h holds, for every ordered pair, the cost of the cheapest directed walk
of at most h edges (sentinel entries act as genuine cost-1 edges). One hop
is a (min, +) product of the current state with the 1-hop matrix; the
argmin intermediate of every improvement is recorded so the winning walk
can be rebuilt exactly, which the loss gradient needs.

Masking freezes a point's outgoing row once its best cross-set distance
drops below a threshold; frozen points still serve as intermediates for
everyone else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError
from .graph import Adjacency, MergedSet

NO_PRED = -1  # entry still holds its 1-hop value (direct edge or sentinel)


@dataclass
class MaskConfig:
    enabled: bool = False
    threshold: float | None = None  # None: 2x the mean 1-hop edge length


@dataclass
class HopState:
    h: int
    dist: np.ndarray  # (n, n) float64, entries in [0, sentinel]
    pred: np.ndarray  # (n, n) int32, NO_PRED or the argmin intermediate
    active: np.ndarray  # (n,) bool; False rows are frozen
    n_pred: int


@dataclass
class GeoDistances:
    """Cross-set blocks of the final hop plus the records needed to rebuild
    the winning walks (adjacency, per-hop predecessor matrices)."""

    d_xy: np.ndarray  # (N, M) predicted -> ground truth
    d_yx: np.ndarray  # (M, N) ground truth -> predicted
    merged: MergedSet
    adj: Adjacency
    states: list[HopState]
    sentinel_fraction: float  # cross entries never touched by a real walk
    masked_per_hop: list[float] = field(default_factory=list)
    mask_threshold: float | None = None

    @property
    def hops_used(self) -> int:
        return self.states[-1].h

    def mean_cross_distance(self) -> float:
        return float((self.d_xy.sum() + self.d_yx.sum()) / (self.d_xy.size + self.d_yx.size))


def initial_state(adj: Adjacency, n_pred: int) -> HopState:
    n = adj.size
    return HopState(
        h=1,
        dist=adj.dist.copy(),
        pred=np.full((n, n), NO_PRED, dtype=np.int32),
        active=np.ones(n, dtype=bool),
        n_pred=n_pred,
    )


def minplus_hop(prev: HopState, adj: Adjacency) -> HopState:
    """One (min, +) update: out[i,j] = min(prev[i,j], min_k prev[i,k] + adj[k,j]).

    Exact ties keep the previous value; among improving intermediates the
    lowest index wins. Frozen rows are copied unchanged.

    Only real in-edges of each column are scanned: a candidate routed
    through a sentinel entry costs at least the sentinel, and prev is
    bounded by the sentinel, so such candidates can never strictly improve.
    The result is identical to the dense formula above.
    """
    if prev.dist.shape != adj.dist.shape:
        raise DimensionMismatchError(
            f"state is {prev.dist.shape}, adjacency is {adj.dist.shape}"
        )
    n = adj.size
    dist = prev.dist.copy()
    pred = prev.pred.copy()
    act = np.flatnonzero(prev.active)
    if act.size:
        rows = prev.dist[act]  # Jacobi: candidates read the previous hop only
        lanes = np.arange(act.size)
        for j in range(n):
            ks = np.flatnonzero(adj.edge_mask[:, j])
            if ks.size == 0:
                continue
            cand = rows[:, ks] + adj.dist[ks, j]
            best = np.argmin(cand, axis=1)  # first minimum -> lowest k
            val = cand[lanes, best]
            improved = val < dist[act, j]
            if improved.any():
                r = act[improved]
                dist[r, j] = val[improved]
                pred[r, j] = ks[best[improved]].astype(np.int32)
    return HopState(prev.h + 1, dist, pred, prev.active.copy(), prev.n_pred)


def apply_mask(state: HopState, cross_threshold: float) -> HopState:
    """Freeze every point whose best cross-set distance is <= the threshold."""
    if cross_threshold <= 0:
        raise ValueError("cross_threshold must be positive")
    n_pred = state.n_pred
    n = state.dist.shape[0]
    mc = np.empty(n)
    mc[:n_pred] = state.dist[:n_pred, n_pred:].min(axis=1)
    mc[n_pred:] = state.dist[n_pred:, :n_pred].min(axis=1)
    active = state.active & (mc > cross_threshold)
    return HopState(state.h, state.dist, state.pred, active, n_pred)


def default_mask_threshold(adj: Adjacency) -> float:
    edges = adj.dist[adj.edge_mask]
    if edges.size == 0:
        return adj.sentinel
    return 2.0 * float(edges.mean())


def propagate(
    merged: MergedSet,
    adj: Adjacency,
    n_hops: int = 2,
    mask: MaskConfig | None = None,
) -> GeoDistances:
    """Run n_hops of propagation and extract the cross-set blocks.

    n_hops = 1 returns the adjacency blocks themselves. The mask, when
    enabled, is re-evaluated after every completed hop.
    """
    if n_hops < 1:
        raise ValueError(f"n_hops must be >= 1, got {n_hops}")
    mask = mask or MaskConfig()
    threshold = None
    if mask.enabled:
        threshold = mask.threshold if mask.threshold is not None else default_mask_threshold(adj)

    state = initial_state(adj, merged.n_pred)
    states = [state]
    masked_per_hop: list[float] = []
    for _ in range(n_hops - 1):
        if mask.enabled:
            state = apply_mask(state, threshold)
            masked_per_hop.append(float(1.0 - state.active.mean()))
        state = minplus_hop(state, adj)
        states.append(state)

    n, m = merged.n_pred, merged.n_gt
    final = states[-1]
    const = (final.pred == NO_PRED) & ~adj.edge_mask
    n_const = int(const[:n, n:].sum() + const[n:, :n].sum())
    return GeoDistances(
        d_xy=final.dist[:n, n:].copy(),
        d_yx=final.dist[n:, :n].copy(),
        merged=merged,
        adj=adj,
        states=states,
        sentinel_fraction=n_const / (2 * n * m),
        masked_per_hop=masked_per_hop,
        mask_threshold=threshold,
    )


def reconstruct_path(geo: GeoDistances, i: int, j: int) -> list[int] | None:
    """Rebuild the recorded walk between merged-set indices i and j.

    Returns the node sequence [i, ..., j] whose edge lengths sum to the
    final distance, or None when the entry is the untouched sentinel
    constant (no walk was ever cheaper).
    """
    if i == j:
        return [i]

    def rec(h: int, a: int, b: int) -> list[int] | None:
        k = int(geo.states[h - 1].pred[a, b])
        if k == NO_PRED:
            if geo.adj.edge_mask[a, b]:
                return [a, b]
            return None
        head = rec(h - 1, a, k)
        # a recorded intermediate always carries a real prefix walk
        assert head is not None, "predecessor routed through a sentinel entry"
        return head + [b]

    return rec(len(geo.states), i, j)
