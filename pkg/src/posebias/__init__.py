"""posebias: audit background-induced bias in 6-DoF pose datasets.

Subpackages:
  geometry   - rigid transforms, axis-angle, pinhole projection
  metrics    - ADD / ADD-S, correctness criterion, accuracy aggregation
  masking    - fiducial-board masking and marker-density maps
  saliency   - regression-adapted saliency maps from exported tensors
  tensorfile - float32 tensor container (NPY v1.0 grammar)
  plyio      - PLY vertex reader (ascii / binary_little_endian)
  pngio      - deterministic 8-bit PNG read/write
  dataset    - manifest loading and the synthetic scene generator
  cli        - `posebias` command-line entry point
"""

from .geometry import (
    CameraIntrinsics,
    Pose,
    axis_angle_to_matrix,
    backproject_center,
    matrix_to_axis_angle,
    pose_to_homogeneous,
    project,
    transform_point,
)
from .metrics import (
    AccuracyTable,
    ErrorRecord,
    MetricKind,
    ModelInfo,
    add_error,
    adds_error,
    adds_error_bruteforce,
    aggregate,
    cross_table,
    is_correct,
    metric_dispatch,
    model_diameter,
)

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics", "Pose", "axis_angle_to_matrix", "matrix_to_axis_angle",
    "transform_point", "project", "backproject_center", "pose_to_homogeneous",
    "ModelInfo", "ErrorRecord", "AccuracyTable", "MetricKind",
    "add_error", "adds_error", "adds_error_bruteforce", "is_correct",
    "metric_dispatch", "aggregate", "cross_table", "model_diameter",
    "__version__",
]
