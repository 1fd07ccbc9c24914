"""Walkthrough: ADD vs ADD-S on a toy model, the correctness threshold,
and the two-testset cross average.

Run:  python3 demos/demo_pose_metrics.py
"""

import numpy as np

from posebias.geometry import Pose, axis_angle_to_matrix
from posebias.metrics import (
    ModelInfo,
    add_error,
    adds_error,
    cross_table,
    is_correct,
    model_diameter,
)

rng = np.random.default_rng(0)

# A ring of points is rotation-symmetric about z: ADD punishes a spin about
# that axis, ADD-S does not.
angles = np.linspace(0, 2 * np.pi, 60, endpoint=False)
ring = np.column_stack([40 * np.cos(angles), 40 * np.sin(angles), np.zeros(60)])

gt = Pose(np.eye(3), np.array([0.0, 0.0, 900.0]))
spun = Pose(axis_angle_to_matrix(np.array([0, 0, np.pi / 7])), gt.translation)

print(f"model diameter: {model_diameter(ring):.1f} mm")
print(f"ADD   under a z-spin: {add_error(ring, spun, gt):8.3f} mm  (punished)")
print(f"ADD-S under a z-spin: {adds_error(ring, spun, gt):8.3f} mm  (forgiven)")

# The correctness criterion is strict: e < 0.1 * diameter.
info = ModelInfo(diameter=model_diameter(ring), symmetric=True)
for e in (0.0, 0.099 * info.diameter, 0.1 * info.diameter):
    print(f"error {e:6.2f} mm -> correct: {is_correct(e, info)}")

# Accuracies from two test splits combine by plain arithmetic mean.
table = cross_table(0.8771, 0.0162)
print(f"cross average of (0.8771, 0.0162): {table.cross_average:.5f}")
