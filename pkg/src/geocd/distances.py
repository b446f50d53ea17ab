"""Blockwise pairwise Euclidean distances.

The per-component expression ``sqrt((dx*dx + dy*dy) + dz*dz)`` matches a
scalar double loop bit for bit, which the reference checks in the test
suite rely on. Row blocks cap peak memory for large clouds.
"""

from __future__ import annotations

import numpy as np


def pairwise_distances(a: np.ndarray, b: np.ndarray, squared: bool = False, block: int = 1024) -> np.ndarray:
    """Dense (len(a), len(b)) matrix of Euclidean distances."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.float64)
    bx, by, bz = b[:, 0], b[:, 1], b[:, 2]
    for i0 in range(0, a.shape[0], block):
        sl = slice(i0, min(i0 + block, a.shape[0]))
        dx = a[sl, 0][:, None] - bx[None, :]
        dy = a[sl, 1][:, None] - by[None, :]
        dz = a[sl, 2][:, None] - bz[None, :]
        sq = (dx * dx + dy * dy) + dz * dz
        out[sl] = sq if squared else np.sqrt(sq)
    return out
