"""Convert legacy per-object YAML annotations to the canonical manifest.

Legacy layout (per object NN):
    <root>/data/NN/gt.yml        frame -> [{cam_R_m2c: 9 floats, cam_t_m2c: 3 floats (mm), obj_id}]
    <root>/data/NN/info.yml      frame -> {cam_K: 9 floats}
    <root>/data/NN/rgb/*.png     images
    <root>/models/models_info.yml  obj -> {diameter: mm, ...}
    <root>/models/obj_NN.ply

Output is manifest JSON schema 1 (units mm, row-major rotations).
"""

import json
from pathlib import Path

import numpy as np
import yaml
from PIL import Image


class ConversionError(Exception):
    """Legacy data missing or malformed; message lists per-frame problems."""


def _load_yaml(path):
    if not path.exists():
        raise ConversionError(f"missing file: {path}")
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not doc:
        raise ConversionError(f"empty or unparsable file: {path}")
    return doc


def _check_rotation(r):
    residual = float(np.max(np.abs(r.T @ r - np.eye(3))))
    det = float(np.linalg.det(r))
    if residual > 1e-5:
        return f"rotation not orthonormal (residual {residual:.2e})"
    if det < 0:
        return f"rotation determinant {det:.3f} < 0 (reflection)"
    return None


def convert_annotations(legacy_root, object_id, out_path, symmetric=False):
    """Build a manifest dict for one object, with paths relative to the
    manifest location out_path. Raises ConversionError with a per-frame
    problem listing if anything is malformed."""
    import os

    root = Path(legacy_root)
    out_base = Path(out_path).resolve().parent
    obj_dir = root / "data" / f"{object_id:02d}"
    gt = _load_yaml(obj_dir / "gt.yml")
    info = _load_yaml(obj_dir / "info.yml")
    models_info = _load_yaml(root / "models" / "models_info.yml")
    if object_id not in models_info or "diameter" not in models_info[object_id]:
        raise ConversionError(f"models_info.yml lacks a diameter for object {object_id}")
    diameter = float(models_info[object_id]["diameter"])

    problems = []
    frames = []
    cam = None
    for frame_key in sorted(gt.keys()):
        entries = gt[frame_key]
        entry = next((e for e in entries if e.get("obj_id") == object_id), None)
        if entry is None:
            problems.append(f"frame {frame_key}: no annotation for object {object_id}")
            continue
        try:
            r = np.asarray(entry["cam_R_m2c"], dtype=float).reshape(3, 3)
            t = np.asarray(entry["cam_t_m2c"], dtype=float).reshape(3)
        except (KeyError, ValueError, TypeError) as exc:
            problems.append(f"frame {frame_key}: malformed pose ({exc})")
            continue
        bad = _check_rotation(r)
        if bad:
            problems.append(f"frame {frame_key}: {bad}")
            continue
        if frame_key not in info or "cam_K" not in info[frame_key]:
            problems.append(f"frame {frame_key}: missing cam_K")
            continue
        k = np.asarray(info[frame_key]["cam_K"], dtype=float).reshape(3, 3)
        if cam is None:
            cam = k
        elif not np.allclose(cam, k):
            problems.append(f"frame {frame_key}: intrinsics differ from frame 0")
            continue
        image_rel = Path("rgb") / f"{frame_key:04d}.png"
        if not (obj_dir / image_rel).exists():
            problems.append(f"frame {frame_key}: missing image {image_rel}")
            continue
        frames.append({
            "frame_id": f"{frame_key:06d}",
            "image_path": os.path.relpath((obj_dir / image_rel).resolve(), out_base),
            "rotation": [float(x) for x in r.reshape(-1)],
            "translation": [float(x) for x in t],
        })
    if problems:
        raise ConversionError("conversion failed:\n  " + "\n  ".join(problems))
    if not frames:
        raise ConversionError("no frames converted")
    if cam is None:
        raise ConversionError("no intrinsics found")

    with Image.open(out_base / frames[0]["image_path"]) as im:
        width, height = im.size

    return {
        "schema": 1,
        "units": "mm",
        "object_id": f"{object_id:02d}",
        "intrinsics": {
            "fx": float(cam[0, 0]), "fy": float(cam[1, 1]),
            "px": float(cam[0, 2]), "py": float(cam[1, 2]),
            "width": width, "height": height,
        },
        "model_path": os.path.relpath(
            (root / "models" / f"obj_{object_id:02d}.ply").resolve(), out_base),
        "model_info": {"diameter_mm": diameter, "symmetric": bool(symmetric)},
        "frames": frames,
    }


def write_manifest(doc, out_path):
    Path(out_path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
