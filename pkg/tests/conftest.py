import numpy as np
import pytest

from geocd import PointCloud, normalize_pair


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_cloud(rng, n, name=None):
    return PointCloud(rng.random((n, 3)), name=name)


def random_normalized_pair(rng, n, m):
    pred = random_cloud(rng, n)
    gt = random_cloud(rng, m)
    pred_n, gt_n, _ = normalize_pair(pred, gt)
    return pred_n, gt_n
