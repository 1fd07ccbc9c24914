"""Extract input gradients, tapped feature maps, feature gradients and
rotation candidates from a pose-regression model into tensor container
files (NPY v1.0, little-endian float32, channel-last).

Gradients are written raw: no normalization, no sign changes. All saliency
math belongs downstream.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image


class ExportError(Exception):
    pass


@dataclass
class ExportSession:
    model: torch.nn.Module
    tap_points: tuple[str, str, str]
    frame_paths: list[Path]
    out_dir: Path
    scalarize: bool = False      # export d||r||/dF instead of per-component grads
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.tap_points) != 3:
            raise ExportError("exactly three tap points are required")


def save_tensor(arr, path):
    """Write float32 C-order NPY v1.0 bytes regardless of filename suffix."""
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    with open(path, "wb") as fh:
        np.save(fh, arr)


def _resolve_taps(model, tap_points):
    modules = dict(model.named_modules())
    missing = [t for t in tap_points if t not in modules]
    if missing:
        available = sorted(n for n in modules if n)
        raise ExportError(
            f"tap point(s) not found: {missing}; available layers: {available}")
    return [modules[t] for t in tap_points]


def _load_image(path):
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1).unsqueeze(0)


def _chw_to_hwc(t):
    return t.detach()[0].permute(1, 2, 0).cpu().numpy()


def export_frame(session, image_path):
    """Export all quantities for one frame; returns the written file map."""
    model = session.model
    taps = _resolve_taps(model, session.tap_points)
    features = {}
    handles = []
    for name, module in zip(session.tap_points, taps):
        def hook(mod, inp, out, name=name):
            out.retain_grad()
            features[name] = out
        handles.append(module.register_forward_hook(hook))

    x = _load_image(image_path)
    x.requires_grad_(True)
    try:
        rotations, confidences = model(x)
    finally:
        for h in handles:
            h.remove()
    if set(features) != set(session.tap_points):
        raise ExportError("not every tap point produced an activation")
    best = int(confidences[0].argmax())
    r = rotations[0, best]

    frame = Path(image_path).stem
    out = Path(session.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}

    def emit(quantity, arr):
        path = out / f"{frame}_{quantity}.f32t"
        save_tensor(arr, path)
        written[quantity] = path

    for i, name in enumerate(session.tap_points, start=1):
        emit(f"feat{i}", _chw_to_hwc(features[name]))
    emit("rotations", rotations.detach()[0].cpu().numpy())
    emit("confidences", confidences.detach()[0].cpu().numpy())

    shapes = {tuple(features[n].shape[2:]) for n in session.tap_points}
    if len(shapes) != 1:
        raise ExportError(f"tap points disagree on spatial dims: {sorted(shapes)}")

    if session.scalarize:
        targets = [("norm", torch.linalg.vector_norm(r))]
    else:
        targets = [(c, r[j]) for j, c in enumerate("xyz")]

    input_grads = {}
    feat_grads = {i: {} for i in range(1, 4)}
    for label, scalar in targets:
        model.zero_grad(set_to_none=True)
        x.grad = None
        for name in session.tap_points:
            features[name].grad = None
        scalar.backward(retain_graph=True)
        input_grads[label] = _chw_to_hwc(x.grad)
        emit(f"input_grad_{label}", input_grads[label])
        for i, name in enumerate(session.tap_points, start=1):
            g = features[name].grad
            if g is None:
                raise ExportError(f"no gradient reached tap point {name}")
            feat_grads[i][label] = _chw_to_hwc(g)
            emit(f"feat{i}_grad_{label}", feat_grads[i][label])

    if not session.scalarize:
        # Stacked exports let consumers verify the concatenation law.
        emit("input_grad_stacked", np.stack([input_grads[c] for c in "xyz"]))
        for i in range(1, 4):
            emit(f"feat{i}_grad_stacked", np.stack([feat_grads[i][c] for c in "xyz"]))

    meta = {
        "frame": frame,
        "tap_points": list(session.tap_points),
        "scalarization": "norm" if session.scalarize else "per-component",
        "best_candidate": best,
        "files": {k: str(v.name) for k, v in written.items()},
        **session.metadata,
    }
    (out / f"{frame}_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return written


def export_tensors(session):
    """Run export_frame over the session's frame list."""
    results = {}
    for path in session.frame_paths:
        results[Path(path).stem] = export_frame(session, path)
    return results
