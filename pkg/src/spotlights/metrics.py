"""Point-cloud evaluation metrics: Chamfer distance, one-directional
accuracy and completeness, ray hit ratio, and cross-frame consistency.

Nearest neighbors come from an exact k-d tree query (`scipy.spatial.cKDTree`);
the test suite pins the results against an O(n*m) brute-force oracle. The
``norm`` flag selects the per-pair point distance: ``"l2"`` (Euclidean, the
Chamfer default) or ``"l1"`` (sum of absolute coordinate differences, more
robust to outliers and the default for accuracy).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .core import PointCloud
from .model import DepthArray

__all__ = [
    "MetricError",
    "MetricReport",
    "nearest_neighbor_distances",
    "chamfer",
    "accuracy",
    "completeness",
    "consistency",
    "hit_ratio",
]

_NORM_P = {"l1": 1, "l2": 2}


class MetricError(ValueError):
    """Raised when a metric is undefined for the given inputs."""


@dataclass(frozen=True)
class MetricReport:
    """One computed metric plus the context needed to compare numbers."""

    name: str
    value: float
    norm: str
    size_a: int
    size_b: int

    def as_csv_row(self) -> str:
        return f"{self.name},{self.norm},{self.value:.12g},{self.size_a},{self.size_b}"


def _points(cloud) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise MetricError(f"expected (n, 3) points, got shape {pts.shape}")
    if len(pts) == 0:
        raise MetricError("undefined metric: empty point cloud")
    return pts


def _norm_p(norm: str) -> int:
    try:
        return _NORM_P[norm]
    except KeyError:
        raise ValueError(f"unknown norm {norm!r}, expected 'l1' or 'l2'") from None


def nearest_neighbor_distances(query, reference, norm: str = "l2") -> np.ndarray:
    """Distance from each query point to its nearest reference point."""
    q = _points(query)
    r = _points(reference)
    dist, _ = cKDTree(r).query(q, k=1, p=_norm_p(norm))
    return dist


def chamfer(p, q, norm: str = "l2") -> float:
    """Symmetric Chamfer distance: mean nearest-neighbor distance from ``p``
    to ``q`` plus the mean from ``q`` to ``p``."""
    return float(nearest_neighbor_distances(p, q, norm).mean()
                 + nearest_neighbor_distances(q, p, norm).mean())


def accuracy(pred, gt_dense, norm: str = "l1") -> float:
    """One-directional Chamfer term from the prediction to a dense reference:
    how close each predicted point is to the true surface."""
    return float(nearest_neighbor_distances(pred, gt_dense, norm).mean())


def completeness(sample, gt_dense, norm: str = "l2") -> float:
    """One-directional Chamfer term from the dense reference to the sample:
    how much of the surface the sample covers. Adding sample points can only
    decrease it."""
    return float(nearest_neighbor_distances(gt_dense, sample, norm).mean())


def consistency(predictions: Sequence | Iterable, norm: str = "l2") -> float:
    """Mean pairwise Chamfer distance over several clouds of the same object
    (all expressed in the object frame)."""
    clouds = list(predictions)
    if len(clouds) < 2:
        raise MetricError("consistency needs at least two clouds")
    pair_values = [chamfer(a, b, norm) for a, b in combinations(clouds, 2)]
    return float(np.mean(pair_values))


def hit_ratio(depths) -> float:
    """Fraction of rays that hit the surface (non-zero depth entries)."""
    v = depths.values if isinstance(depths, DepthArray) else np.asarray(depths, dtype=np.float64)
    if v.size == 0:
        raise MetricError("undefined metric: empty depth array")
    return float(np.count_nonzero(v > 0.0) / v.size)
