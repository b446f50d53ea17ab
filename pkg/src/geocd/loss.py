"""Reconstruction losses and their analytic coordinate gradients.

Two losses with deliberately different distance conventions:

* ``chamfer`` averages *squared* nearest-neighbour distances.
* ``geocd`` replaces nearest-neighbour matching with a softmin over
  *unsquared* multi-hop graph distances.

Gradient magnitudes therefore differ between the two training phases; see
the README before mixing learning rates.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cloud import PointCloud
from .distances import pairwise_distances
from .errors import GeoCdError
from .geodesic import NO_PRED, GeoDistances, MaskConfig, propagate
from .graph import knn_adjacency, merge

DEGENERATE_EDGE = 1e-12  # edges shorter than this get no gradient

# A batch is a sequence of independent (predicted, ground-truth) pairs.
Batch = Sequence[tuple[PointCloud, PointCloud]]


@dataclass
class GeoCdConfig:
    k: int = 5
    n_hops: int = 2
    sentinel: float = 1.0
    symmetrize: bool = False
    mask: MaskConfig = field(default_factory=MaskConfig)


@dataclass
class LossReport:
    value: float
    grad_pred: np.ndarray | None = None
    grad_gt: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class PairResult:
    index: int
    report: LossReport | None = None
    error: str | None = None


def softmin(row) -> float:
    """-log(sum_j exp(-d_j)), shifted by the row minimum for stability.

    A smooth lower bound of min(d): min(d) - log(len(d)) <= softmin(d) <= min(d).
    """
    row = np.asarray(row, dtype=np.float64)
    m = float(row.min())
    return m - float(np.log(np.exp(-(row - m)).sum()))


def _softmin_rows(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise softmin values and softmax(-d) weights of a matrix."""
    m = d.min(axis=1, keepdims=True)
    w = np.exp(-(d - m))
    s = w.sum(axis=1, keepdims=True)
    return (m - np.log(s)).ravel(), w / s


def chamfer(
    pred: PointCloud,
    gt: PointCloud,
    with_grad: bool = False,
    with_gt_grad: bool = False,
) -> LossReport:
    """Symmetric mean of squared nearest-neighbour distances.

    Nearest-neighbour ties break toward the lower index. The gradient
    follows the (piecewise-constant) assignment.
    """
    p, q = pred.points, gt.points
    n, m = p.shape[0], q.shape[0]
    sq = pairwise_distances(p, q, squared=True)
    j_star = sq.argmin(axis=1)
    i_star = sq.argmin(axis=0)
    value = float(sq[np.arange(n), j_star].mean() + sq[i_star, np.arange(m)].mean())

    grad_pred = grad_gt = None
    if with_grad:
        grad_pred = (2.0 / n) * (p - q[j_star])
        np.add.at(grad_pred, i_star, (2.0 / m) * (p[i_star] - q))
        if with_gt_grad:
            grad_gt = (2.0 / m) * (q - p[i_star])
            np.add.at(grad_gt, j_star, (2.0 / n) * (q[j_star] - p))
    return LossReport(value, grad_pred, grad_gt)


def geocd(
    pred: PointCloud,
    gt: PointCloud,
    cfg: GeoCdConfig | None = None,
    with_grad: bool = False,
    with_gt_grad: bool = False,
) -> LossReport:
    """Softmin loss over multi-hop graph distances of the merged set.

    Expects jointly normalized clouds (all pairwise distances < 1, see
    ``normalize_pair``). Sentinel entries take part in every softmin sum but
    are constants: they carry no coordinate gradient. Real entries
    distribute their softmin weight along the recorded shortest walk, one
    unit-vector contribution per edge.
    """
    cfg = cfg or GeoCdConfig()
    t0 = time.perf_counter()
    z = merge(pred, gt)
    adj = knn_adjacency(z, cfg.k, cfg.sentinel, cfg.symmetrize)
    t1 = time.perf_counter()
    geo = propagate(z, adj, cfg.n_hops, cfg.mask)
    t2 = time.perf_counter()

    vx, wx = _softmin_rows(geo.d_xy)
    vy, wy = _softmin_rows(geo.d_yx)
    n, m = z.n_pred, z.n_gt
    value = float(vx.mean() + vy.mean())

    diagnostics = {
        "sentinel_fraction": geo.sentinel_fraction,
        "masked_fraction": geo.masked_per_hop[-1] if geo.masked_per_hop else 0.0,
        "hops_used": geo.hops_used,
        "mean_cross_distance": geo.mean_cross_distance(),
        "degenerate_edges": 0,
    }

    grad_pred = grad_gt = None
    if with_grad:
        grad_full, degenerate = _path_gradients(geo, wx / n, wy / m)
        diagnostics["degenerate_edges"] = degenerate
        grad_pred = grad_full[:n]
        if with_gt_grad:
            grad_gt = grad_full[n:]
    t3 = time.perf_counter()
    diagnostics["timings"] = {"graph": t1 - t0, "propagation": t2 - t1, "loss": t3 - t2}
    return LossReport(value, grad_pred, grad_gt, diagnostics)


def _path_gradients(
    geo: GeoDistances, wx: np.ndarray, wy: np.ndarray
) -> tuple[np.ndarray, int]:
    """Scatter softmin weights along every recorded cross-set walk.

    For a walk edge (a, b) with weight w, grad[a] += w * (z_a - z_b)/|z_a - z_b|
    and grad[b] gets the negation. Walks are unrolled level by level from
    the last hop, mirroring the recursive reconstruction.
    """
    z = geo.merged.points
    n, m = geo.merged.n_pred, geo.merged.n_gt
    final = geo.states[-1]
    grad = np.zeros((n + m, 3))
    degenerate = 0

    const = (final.pred == NO_PRED) & ~geo.adj.edge_mask
    xi, xj = np.nonzero(~const[:n, n:])
    yi, yj = np.nonzero(~const[n:, :n])
    starts = np.concatenate([xi, yi + n])
    ends = np.concatenate([xj + n, yj])
    weights = np.concatenate([wx[xi, xj], wy[yi, yj]])

    cur = ends.copy()
    alive = np.ones(starts.size, dtype=bool)
    for h in range(len(geo.states), 0, -1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        k = geo.states[h - 1].pred[starts[idx], cur[idx]]
        direct = k == NO_PRED
        # settled walks close with their 1-hop edge; others emit the last
        # edge of the recorded detour and continue one level down
        a = np.where(direct, starts[idx], k)
        degenerate += _emit_edges(grad, z, a, cur[idx], weights[idx])
        cur[idx[~direct]] = k[~direct]
        alive[idx[direct]] = False
    return grad, degenerate


def _emit_edges(grad, z, a, b, w) -> int:
    d = z[a] - z[b]
    length = np.sqrt((d * d).sum(axis=1))
    ok = length > DEGENERATE_EDGE
    unit = np.zeros_like(d)
    unit[ok] = d[ok] / length[ok, None]
    contrib = w[:, None] * unit
    np.add.at(grad, a, contrib)
    np.add.at(grad, b, -contrib)
    return int((~ok).sum())


def geocd_batch(
    batch: Batch,
    cfg: GeoCdConfig | None = None,
    with_grad: bool = False,
    threads: int = 1,
) -> list[PairResult]:
    """Map ``geocd`` over independent pairs, collecting per-pair errors.

    A failing pair yields an error entry instead of aborting the batch.
    Results keep input order regardless of the worker count.
    """

    def run(item):
        index, (pred, gt) = item
        try:
            return PairResult(index, report=geocd(pred, gt, cfg, with_grad))
        except (GeoCdError, ValueError) as exc:
            return PairResult(index, error=f"{type(exc).__name__}: {exc}")

    items = list(enumerate(batch))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(run, items))
    return [run(item) for item in items]
