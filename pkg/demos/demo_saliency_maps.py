"""Walkthrough: the three saliency modes on hand-built tensors.

Run:  python3 demos/demo_saliency_maps.py
Outputs land in demos/output/saliency/.
"""

from pathlib import Path

import numpy as np

from posebias.pngio import write_png
from posebias.saliency import (
    concat_channels,
    finalize_map,
    gradcam_classification,
    gradcam_regression,
    vanilla_map,
)

out = Path(__file__).parent / "output" / "saliency"
out.mkdir(parents=True, exist_ok=True)
rng = np.random.default_rng(1)

# --- Vanilla gradient map: sign is kept, so a strongly negative gradient
# region renders dark and a positive one bright.
grad = rng.normal(0, 0.05, size=(48, 64, 3))
grad[10:20, 10:25] += 1.0   # positive blob
grad[30:40, 40:55] -= 1.0   # negative blob
m = vanilla_map(grad)
write_png(m.rendered, out / "vanilla.png")
print(f"vanilla: raw range [{m.min_raw:.2f}, {m.max_raw:.2f}] -> {out / 'vanilla.png'}")

# --- Regression map: three pyramid-level feature maps are concatenated on
# the channel axis; channel weights are L2-pooled gradients and the weighted
# features enter by absolute value (no ReLU), so negative evidence counts.
levels_f = [rng.normal(size=(12, 16, 8)) for _ in range(3)]
levels_g = [rng.normal(size=(12, 16, 8)) * 0.01 for _ in range(3)]
levels_g[1][4:8, 6:12, :] += 2.0    # one level reacts strongly in a patch
f_t = concat_channels(*levels_f)
g_t = concat_channels(*levels_g)
m = finalize_map(gradcam_regression(f_t, g_t), 64, 48)
write_png(m.rendered, out / "regression_cam.png")
print(f"regression cam: degenerate={m.degenerate} -> {out / 'regression_cam.png'}")

# --- Classification reference mode: mean-pooled weights + ReLU. With the
# same tensors the ReLU zeroes everything the regression form keeps.
m = finalize_map(gradcam_classification(f_t, g_t), 64, 48)
write_png(m.rendered, out / "classification_cam.png")
print(f"classification cam: degenerate={m.degenerate} -> {out / 'classification_cam.png'}")
