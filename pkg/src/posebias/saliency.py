"""Saliency maps for pose regression from externally exported tensors.

Three flavors:
  * vanilla gradient maps with the sign retained (channel mean, min-max),
  * regression-adapted class activation maps: per-channel L2-pooled
    gradients, absolute-value weighting, no ReLU,
  * the classic classification form (mean-pooled weights + ReLU) kept as a
    reference mode.

The network itself is never executed here; inputs are plain float tensors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray   # HxW in [0, 1]
    degenerate: bool     # constant raw map collapsed to zeros
    min_raw: float
    max_raw: float

    @property
    def rendered(self):
        return np.round(255.0 * self.values).astype(np.uint8)


@dataclass(frozen=True)
class CandidateSet:
    rotations: np.ndarray     # Nx3 axis-angle candidates
    confidences: np.ndarray   # N

    def __post_init__(self):
        rot = np.asarray(self.rotations, dtype=float)
        conf = np.asarray(self.confidences, dtype=float)
        if rot.ndim != 2 or rot.shape[1] != 3 or rot.shape[0] < 1:
            raise InvalidArgumentError("rotations must be a nonempty Nx3 array")
        if conf.shape != (rot.shape[0],):
            raise InvalidArgumentError("confidences must match candidate count")
        object.__setattr__(self, "rotations", rot)
        object.__setattr__(self, "confidences", conf)


def select_best_candidate(candidates):
    """Highest-confidence candidate; ties break to the lowest index."""
    idx = int(np.argmax(candidates.confidences))
    return idx, candidates.rotations[idx]


def _normalize(raw):
    lo, hi = float(raw.min()), float(raw.max())
    if hi == lo:
        return np.zeros_like(raw, dtype=float), True, lo, hi
    return (raw - lo) / (hi - lo), False, lo, hi


def vanilla_map(grad):
    """Signed channel mean of an HxWx3 input gradient, min-max normalized.
    A constant map (e.g. all-zero gradient) collapses to zeros."""
    grad = np.asarray(grad, dtype=float)
    if grad.ndim != 3 or grad.shape[2] != 3:
        raise InvalidArgumentError(f"expected HxWx3 gradient, got {grad.shape}")
    raw = grad.mean(axis=2)
    values, degenerate, lo, hi = _normalize(raw)
    return SaliencyMap(values=values, degenerate=degenerate, min_raw=lo, max_raw=hi)


def concat_channels(f1, f2, f3):
    """Stack three WxHxC feature maps along the channel axis."""
    maps = [np.asarray(f, dtype=float) for f in (f1, f2, f3)]
    shape = maps[0].shape
    if any(m.ndim != 3 for m in maps) or any(m.shape != shape for m in maps):
        raise InvalidArgumentError("feature maps must share an identical WxHxC shape")
    return np.concatenate(maps, axis=2)


def l2_pooled_gradient(g_t):
    """Per-channel L2 norm of the gradient over spatial positions."""
    g = np.asarray(g_t, dtype=float)
    if g.ndim != 3:
        raise InvalidArgumentError(f"expected rank-3 gradient, got rank {g.ndim}")
    # Channel-first contiguous layout pins the accumulation order per
    # channel, independent of how the input was sliced or permuted.
    gc = np.ascontiguousarray(np.moveaxis(g, 2, 0))
    return np.sqrt((gc ** 2).reshape(gc.shape[0], -1).sum(axis=1))


def gradcam_regression(f_t, g_t):
    """Raw regression map: sum over channels of |alpha_k * F_k|, with alpha
    the L2-pooled gradient. No ReLU; magnitudes matter, not sign."""
    f = np.asarray(f_t, dtype=float)
    g = np.asarray(g_t, dtype=float)
    if f.ndim != 3 or f.shape != g.shape:
        raise InvalidArgumentError(f"feature/gradient shape mismatch: {f.shape} vs {g.shape}")
    alpha = l2_pooled_gradient(g)
    terms = np.abs(alpha[None, None, :] * f)
    # Sorting fixes the summation order, so the map is bit-identical under
    # any simultaneous channel permutation of features and gradients.
    return np.ascontiguousarray(np.sort(terms, axis=2)).sum(axis=2)


def gradcam_classification(a, grad):
    """Classic form: spatial-mean weights, ReLU-clamped weighted sum."""
    a = np.asarray(a, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if a.ndim != 3 or a.shape != grad.shape:
        raise InvalidArgumentError(f"feature/gradient shape mismatch: {a.shape} vs {grad.shape}")
    alpha = grad.mean(axis=(0, 1))
    return np.maximum((alpha[None, None, :] * a).sum(axis=2), 0.0)


def combine_component_maps(maps):
    """L2-combine per-rotation-component raw maps into a single raw map."""
    stack = np.stack([np.asarray(m, dtype=float) for m in maps])
    return np.sqrt((stack ** 2).sum(axis=0))


def finalize_map(raw, out_w, out_h):
    """Min-max normalize then bilinearly resize to (out_w, out_h)."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.size == 0:
        raise InvalidArgumentError("raw map must be a nonempty 2D array")
    if out_w < 1 or out_h < 1:
        raise InvalidArgumentError("output dimensions must be positive")
    values, degenerate, lo, hi = _normalize(raw)
    resized = _bilinear_resize(values, out_w, out_h)
    if not degenerate:
        # Resampling can shave interior extrema; restretch so the displayed
        # map always spans the full range.
        resized, _, _, _ = _normalize(resized)
    return SaliencyMap(values=resized, degenerate=degenerate, min_raw=lo, max_raw=hi)


def _bilinear_resize(img, out_w, out_h):
    """Bilinear resampling with corner pixel centers aligned."""
    in_h, in_w = img.shape
    if (in_w, in_h) == (out_w, out_h):
        return img.copy()
    # Map output pixel centers onto the input grid (align-corners style so
    # extrema are preserved and hand verification stays simple).
    xs = np.linspace(0.0, in_w - 1.0, out_w) if out_w > 1 else np.array([(in_w - 1) / 2.0])
    ys = np.linspace(0.0, in_h - 1.0, out_h) if out_h > 1 else np.array([(in_h - 1) / 2.0])
    x0 = np.clip(np.floor(xs).astype(int), 0, in_w - 1)
    x1 = np.clip(x0 + 1, 0, in_w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, in_h - 1)
    y1 = np.clip(y0 + 1, 0, in_h - 1)
    wx = xs - x0
    wy = ys - y0
    top = img[np.ix_(y0, x0)] * (1 - wx) + img[np.ix_(y0, x1)] * wx
    bot = img[np.ix_(y1, x0)] * (1 - wx) + img[np.ix_(y1, x1)] * wx
    return top * (1 - wy)[:, None] + bot * wy[:, None]
