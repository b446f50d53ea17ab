"""Evaluation metrics: Hausdorff distance and F1 at a bbox-relative threshold.

Hausdorff uses plain (unsquared) norms while the Chamfer value in
``MetricsReport`` keeps its squared convention; the asymmetry is
intentional and documented in the README.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .distances import pairwise_distances
from .errors import DegenerateCloudError
from .loss import chamfer


@dataclass
class F1Score:
    precision: float
    recall: float
    f1: float
    threshold_used: float


@dataclass
class MetricsReport:
    cd: float
    hd: float
    f1: float
    precision: float
    recall: float
    threshold_used: float


def hausdorff(p: PointCloud, q: PointCloud) -> float:
    """Largest minimal distance between the two sets (symmetric)."""
    d = pairwise_distances(p.points, q.points)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def f1_at(
    pred: PointCloud,
    gt: PointCloud,
    tau_fraction: float = 0.01,
    diag_source: str = "gt",
) -> F1Score:
    """Precision/recall/F1 with threshold tau = tau_fraction x bbox diagonal.

    The diagonal comes from the ground-truth cloud by default (the reference
    shape defines the scale); ``diag_source="union"`` uses the joint box.
    """
    if tau_fraction <= 0:
        raise ValueError("tau_fraction must be positive")
    if diag_source == "gt":
        diag = gt.bbox_diagonal()
    elif diag_source == "union":
        both = np.vstack([pred.points, gt.points])
        diag = float(np.linalg.norm(both.max(axis=0) - both.min(axis=0)))
    else:
        raise ValueError(f"diag_source must be 'gt' or 'union', got {diag_source!r}")
    if diag == 0.0:
        raise DegenerateCloudError("bounding-box diagonal is zero; F1 threshold undefined")

    tau = tau_fraction * diag
    d = pairwise_distances(pred.points, gt.points)
    precision = float((d.min(axis=1) <= tau).mean())
    recall = float((d.min(axis=0) <= tau).mean())
    f1 = 0.0 if precision + recall == 0.0 else 2.0 * precision * recall / (precision + recall)
    return F1Score(precision, recall, f1, tau)


def evaluate(
    pred: PointCloud,
    gt: PointCloud,
    tau_fraction: float = 0.01,
    diag_source: str = "gt",
) -> MetricsReport:
    """Chamfer + Hausdorff + F1 in one report."""
    f = f1_at(pred, gt, tau_fraction, diag_source)
    return MetricsReport(
        cd=chamfer(pred, gt).value,
        hd=hausdorff(pred, gt),
        f1=f.f1,
        precision=f.precision,
        recall=f.recall,
        threshold_used=f.threshold_used,
    )
