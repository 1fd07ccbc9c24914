"""Dataset manifests and a deterministic synthetic scene generator.

The manifest is the toolkit's canonical JSON description of a dataset
split: object id, intrinsics, model reference and per-frame ground-truth
poses. Units are millimetres, enforced on load.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, ParseError
from .geometry import CameraIntrinsics, Pose, axis_angle_to_matrix
from .masking import BoardCorners, MaskGeometry, mask_for_pose
from .metrics import ModelInfo
from .pngio import write_png

SCHEMA_VERSION = 1
_ORTHO_TOL = 1e-6


@dataclass(frozen=True)
class Frame:
    frame_id: str
    image_path: Path
    pose: Pose


@dataclass(frozen=True)
class DatasetManifest:
    object_id: str
    intrinsics: CameraIntrinsics
    model_path: Path
    model_info: ModelInfo
    frames: list[Frame] = field(default_factory=list)


def _reorthonormalize(m):
    """Project onto SO(3); annotations carry rounding error up to 1e-6."""
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    residual = float(np.max(np.abs(r - m)))
    return r, residual


def load_manifest(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("manifest root must be an object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ParseError(f"unsupported manifest schema {doc.get('schema')!r}")
    if doc.get("units") != "mm":
        raise ParseError(f"unsupported units {doc.get('units')!r}; manifests must be mm")
    for key in ("object_id", "intrinsics", "model_path", "model_info", "frames"):
        if key not in doc:
            raise ParseError(f"manifest missing required key {key!r}")
    k = doc["intrinsics"]
    try:
        intrinsics = CameraIntrinsics(
            fx=float(k["fx"]), fy=float(k["fy"]),
            px=float(k["px"]), py=float(k["py"]),
            width=int(k["width"]), height=int(k["height"]))
    except (KeyError, TypeError, ValueError, InvalidArgumentError) as exc:
        raise ParseError(f"bad intrinsics: {exc}") from None
    mi = doc["model_info"]
    try:
        model_info = ModelInfo(diameter=float(mi["diameter_mm"]), symmetric=bool(mi["symmetric"]))
    except (KeyError, TypeError, ValueError, InvalidArgumentError) as exc:
        raise ParseError(f"bad model_info: {exc}") from None

    base = path.parent
    frames = []
    seen = set()
    for i, fr in enumerate(doc["frames"]):
        try:
            frame_id = str(fr["frame_id"])
            image_path = base / fr["image_path"]
            t = np.asarray(fr["translation"], dtype=float)
            if "rotation" in fr:
                r = np.asarray(fr["rotation"], dtype=float).reshape(3, 3)
            elif "axis_angle" in fr:
                r = axis_angle_to_matrix(np.asarray(fr["axis_angle"], dtype=float))
            else:
                raise KeyError("rotation")
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"frame {i}: malformed entry ({exc})") from None
        if frame_id in seen:
            raise ParseError(f"duplicate frame id {frame_id!r}")
        seen.add(frame_id)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise ParseError(f"frame {frame_id}: translation must be a finite 3-vector")
        if not np.all(np.isfinite(r)):
            raise ParseError(f"frame {frame_id}: non-finite rotation")
        r_fixed, residual = _reorthonormalize(r)
        if residual > _ORTHO_TOL:
            raise ParseError(
                f"frame {frame_id}: rotation deviates from SO(3) by {residual:.2e} (> {_ORTHO_TOL})")
        frames.append(Frame(frame_id=frame_id, image_path=image_path,
                            pose=Pose(r_fixed, t)))
    return DatasetManifest(object_id=str(doc["object_id"]), intrinsics=intrinsics,
                           model_path=base / doc["model_path"], model_info=model_info,
                           frames=frames)


def write_manifest(manifest, path):
    path = Path(path)
    base = path.parent
    k = manifest.intrinsics
    doc = {
        "schema": SCHEMA_VERSION,
        "units": "mm",
        "object_id": manifest.object_id,
        "intrinsics": {"fx": k.fx, "fy": k.fy, "px": k.px, "py": k.py,
                       "width": k.width, "height": k.height},
        "model_path": _relativize(manifest.model_path, base),
        "model_info": {"diameter_mm": manifest.model_info.diameter,
                       "symmetric": manifest.model_info.symmetric},
        "frames": [
            {"frame_id": f.frame_id,
             "image_path": _relativize(f.image_path, base),
             "rotation": [float(x) for x in f.pose.rotation.reshape(-1)],
             "translation": [float(x) for x in f.pose.translation]}
            for f in manifest.frames
        ],
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _relativize(p, base):
    p = Path(p)
    try:
        return p.relative_to(base).as_posix()
    except ValueError:
        return str(p)


@dataclass(frozen=True)
class SyntheticSceneSpec:
    frame_count: int
    intrinsics: CameraIntrinsics
    corners: BoardCorners
    distance_range_mm: tuple[float, float] = (900.0, 1100.0)
    lateral_range_mm: float = 20.0
    cone_half_angle_rad: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.frame_count < 1:
            raise InvalidArgumentError("frame count must be >= 1")
        lo, hi = self.distance_range_mm
        if not (0 < lo <= hi):
            raise InvalidArgumentError("distance range must satisfy 0 < lo <= hi")


def _sample_pose(rng, spec):
    lo, hi = spec.distance_range_mm
    tz = rng.uniform(lo, hi)
    tx = rng.uniform(-spec.lateral_range_mm, spec.lateral_range_mm)
    ty = rng.uniform(-spec.lateral_range_mm, spec.lateral_range_mm)
    # Random axis inside the cone around the optical axis view.
    v = rng.normal(size=3)
    norm = np.linalg.norm(v)
    axis = v / norm if norm > 0 else np.array([0.0, 0.0, 1.0])
    angle = rng.uniform(0.0, spec.cone_half_angle_rad)
    return Pose(axis_angle_to_matrix(axis * angle), np.array([tx, ty, tz]))


def _render_frame(spec, pose):
    """Flat board under a pose: textured ring standing in for markers,
    plain center standing in for the object zone."""
    k = spec.intrinsics
    ring = mask_for_pose(spec.corners, MaskGeometry.FRAME, pose, k, k.width, k.height)
    outer = mask_for_pose(spec.corners, MaskGeometry.FILLED_QUAD, pose, k, k.width, k.height)
    center = outer & ~ring
    img = np.full((k.height, k.width, 3), 64, dtype=np.uint8)
    img[center] = (170, 170, 170)
    # Deterministic high-contrast texture keyed to pixel coordinates.
    vv, uu = np.nonzero(ring)
    checker = ((uu // 4 + vv // 4) % 2 * 200 + 30).astype(np.uint8)
    img[vv, uu] = np.stack([checker, checker, np.full_like(checker, 40)], axis=1)
    return img, ring


def _board_model_points(corners):
    pts = [corners.outer]
    if corners.inner is not None:
        pts.append(corners.inner)
    pts.append(np.zeros((1, 3)))
    return np.concatenate(pts, axis=0)


def _write_ply(points, path):
    lines = ["ply", "format ascii 1.0",
             f"element vertex {len(points)}",
             "property float x", "property float y", "property float z",
             "end_header"]
    lines += [f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f}" for p in points]
    Path(path).write_text("\n".join(lines) + "\n")


def generate_synthetic(spec, out_dir):
    """Write frames + model + manifest; byte-identical for a fixed seed.
    Returns (manifest, ring_masks) so tests can check masking exactness."""
    from .metrics import model_diameter

    out_dir = Path(out_dir)
    (out_dir / "rgb").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    frames = []
    ring_masks = []
    for i in range(spec.frame_count):
        pose = _sample_pose(rng, spec)
        img, ring = _render_frame(spec, pose)
        frame_id = f"{i:06d}"
        rel = Path("rgb") / f"{frame_id}.png"
        write_png(img, out_dir / rel)
        frames.append(Frame(frame_id=frame_id, image_path=out_dir / rel, pose=pose))
        ring_masks.append(ring)

    model_pts = _board_model_points(spec.corners)
    _write_ply(model_pts, out_dir / "model.ply")
    manifest = DatasetManifest(
        object_id="synthetic_board",
        intrinsics=spec.intrinsics,
        model_path=out_dir / "model.ply",
        model_info=ModelInfo(diameter=model_diameter(model_pts), symmetric=False),
        frames=frames)
    write_manifest(manifest, out_dir / "manifest.json")
    return manifest, ring_masks


def load_synth_spec(path):
    """Synthetic spec from a TOML file."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    k = cfg["intrinsics"]
    intrinsics = CameraIntrinsics(fx=k["fx"], fy=k["fy"], px=k["px"], py=k["py"],
                                  width=k["width"], height=k["height"])
    from .masking import corners_from_offsets
    outer = corners_from_offsets(*cfg["board"]["outer_offsets"])
    inner = corners_from_offsets(*cfg["board"]["inner_offsets"])
    corners = BoardCorners(outer=outer, inner=inner)
    return SyntheticSceneSpec(
        frame_count=cfg.get("frame_count", 20),
        intrinsics=intrinsics,
        corners=corners,
        distance_range_mm=tuple(cfg.get("distance_range_mm", (900.0, 1100.0))),
        lateral_range_mm=cfg.get("lateral_range_mm", 20.0),
        cone_half_angle_rad=cfg.get("cone_half_angle_rad", 0.3),
        seed=cfg.get("seed", 0))
