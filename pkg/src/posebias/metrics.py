"""ADD / ADD-S pose-error metrics, correctness criterion and aggregation."""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .errors import InvalidArgumentError
from .geometry import transform_point

DEFAULT_KM = 0.1
_BRUTE_DIAMETER_LIMIT = 20000


class MetricKind(str, Enum):
    ADD = "ADD"
    ADD_S = "ADD-S"


@dataclass(frozen=True)
class ModelInfo:
    diameter: float  # mm
    symmetric: bool

    def __post_init__(self):
        if not self.diameter > 0:
            raise InvalidArgumentError("model diameter must be positive")


@dataclass(frozen=True)
class ErrorRecord:
    frame_id: str
    error: float  # mm
    metric: MetricKind
    correct: bool

    def __post_init__(self):
        if self.error < 0:
            raise InvalidArgumentError("pose error cannot be negative")


@dataclass(frozen=True)
class AccuracyTable:
    accuracy_a: float
    accuracy_b: float
    cross_average: float


def _as_points(model):
    pts = np.asarray(model, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
        raise InvalidArgumentError("model must be a nonempty Nx3 point array")
    if not np.all(np.isfinite(pts)):
        raise InvalidArgumentError("model points must be finite")
    return pts


def add_error(model, est, gt):
    """Mean distance between corresponding model points under the two poses."""
    pts = _as_points(model)
    d = transform_point(est, pts) - transform_point(gt, pts)
    return float(np.linalg.norm(d, axis=1).mean())


def adds_error(model, est, gt):
    """Mean distance from each estimated point to its nearest ground-truth
    point, accelerated with a kd-tree on the ground-truth cloud."""
    pts = _as_points(model)
    est_pts = transform_point(est, pts)
    gt_pts = transform_point(gt, pts)
    dist, _ = cKDTree(gt_pts).query(est_pts, k=1)
    return float(dist.mean())


def adds_error_bruteforce(model, est, gt):
    """O(N^2) reference for adds_error; kept as oracle and fallback."""
    pts = _as_points(model)
    est_pts = transform_point(est, pts)
    gt_pts = transform_point(gt, pts)
    # Chunked so N ~ 1e4 stays within memory.
    mins = np.empty(len(est_pts))
    step = max(1, int(4e7) // max(1, len(gt_pts)))
    for i in range(0, len(est_pts), step):
        block = est_pts[i:i + step]
        d2 = ((block[:, None, :] - gt_pts[None, :, :]) ** 2).sum(axis=2)
        mins[i:i + step] = np.sqrt(d2.min(axis=1))
    return float(mins.mean())


def is_correct(e, info, k_m=DEFAULT_KM):
    """Strict threshold: correct iff e < k_m * diameter."""
    if e < 0:
        raise InvalidArgumentError("error must be >= 0")
    if not k_m > 0:
        raise InvalidArgumentError("k_m must be positive")
    return e < k_m * info.diameter


def metric_dispatch(info):
    return MetricKind.ADD_S if info.symmetric else MetricKind.ADD


def aggregate(records):
    """Fraction of correct records; counts accumulated as integers so the
    result is independent of record order and parallel scheduling."""
    records = list(records)
    if not records:
        raise InvalidArgumentError("cannot aggregate zero records")
    n_correct = sum(1 for r in records if r.correct)
    return n_correct / len(records)


def cross_table(acc_a, acc_b):
    for a in (acc_a, acc_b):
        if not 0.0 <= a <= 1.0:
            raise InvalidArgumentError(f"accuracy {a} outside [0, 1]")
    return AccuracyTable(acc_a, acc_b, (acc_a + acc_b) / 2.0)


def model_diameter(model):
    """Largest pairwise distance; exact. Large clouds are first reduced to
    their convex hull, which preserves the answer exactly."""
    pts = _as_points(model)
    if len(pts) < 2:
        raise InvalidArgumentError("diameter needs at least two points")
    if len(pts) > _BRUTE_DIAMETER_LIMIT:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except Exception:
            pass  # degenerate (coplanar etc.) clouds fall back to brute force
    best = 0.0
    step = max(1, int(4e7) // len(pts))
    for i in range(0, len(pts), step):
        d2 = ((pts[i:i + step, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))
