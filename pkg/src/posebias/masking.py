"""Fiducial-board masking: corner projection, polygon rasterization,
black-square occlusion and marker-density accumulation.

Pixel-inclusion rule: a pixel belongs to the mask iff its center (integer
coordinates) lies inside or on the boundary of the projected convex quad.
Inclusion uses exact signs of double-precision cross products, so results
are deterministic and invariant under cyclic vertex rotation.
"""

import json
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import BehindCameraError, DegenerateQuadWarning, InvalidArgumentError
from .geometry import project, transform_point
from .pngio import read_png, write_png

_PLANARITY_TOL = 1e-6


class MaskGeometry(str, Enum):
    FILLED_QUAD = "filled"
    FRAME = "frame"


@dataclass(frozen=True)
class BoardCorners:
    """Board-frame corner quads, ordered UL, UR, LR, LL."""

    outer: np.ndarray            # 4x3, mm
    inner: np.ndarray | None = None

    def __post_init__(self):
        outer = np.asarray(self.outer, dtype=float)
        if outer.shape != (4, 3) or not np.all(np.isfinite(outer)):
            raise InvalidArgumentError("outer corners must be a finite 4x3 array")
        _check_planar(outer, "outer")
        object.__setattr__(self, "outer", outer)
        if self.inner is not None:
            inner = np.asarray(self.inner, dtype=float)
            if inner.shape != (4, 3) or not np.all(np.isfinite(inner)):
                raise InvalidArgumentError("inner corners must be a finite 4x3 array")
            _check_planar(inner, "inner")
            _check_contains(outer, inner)
            object.__setattr__(self, "inner", inner)


def _check_planar(quad, label):
    # Residual of the 4th point against the plane of the first 3.
    n = np.cross(quad[1] - quad[0], quad[2] - quad[0])
    norm = np.linalg.norm(n)
    if norm == 0:
        return  # degenerate quads are caught at rasterization time
    residual = abs(np.dot(quad[3] - quad[0], n / norm))
    if residual > _PLANARITY_TOL:
        raise InvalidArgumentError(f"{label} quad not planar (residual {residual:.2e} mm)")


def _check_contains(outer, inner):
    # Project into the board plane and run point-in-convex-polygon per corner.
    n = np.cross(outer[1] - outer[0], outer[2] - outer[0])
    norm = np.linalg.norm(n)
    if norm == 0:
        return
    n /= norm
    u = outer[1] - outer[0]
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    o2 = (outer - outer[0]) @ np.stack([u, v], axis=1)
    i2 = (inner - outer[0]) @ np.stack([u, v], axis=1)
    area2 = _signed_area(o2)
    for p in i2:
        for a, b in zip(o2, np.roll(o2, -1, axis=0)):
            cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            if cross * np.sign(area2) <= 0:
                raise InvalidArgumentError("inner quad must lie strictly inside the outer quad")


def _signed_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def corners_from_offsets(dx, dy, dz):
    """Planar quad at height dz from symmetric axis offsets, ordered
    UL(-dx,-dy), UR(+dx,-dy), LR(+dx,+dy), LL(-dx,+dy)."""
    if not (dx > 0 and dy > 0):
        raise InvalidArgumentError("dx and dy offsets must be positive")
    return np.array([
        [-dx, -dy, dz],
        [dx, -dy, dz],
        [dx, dy, dz],
        [-dx, dy, dz],
    ], dtype=float)


def project_quad(corners, pose, k):
    """Project 4 board-frame corners to pixel space, preserving order."""
    corners = np.asarray(corners, dtype=float)
    uv = np.empty((len(corners), 2))
    for i, corner in enumerate(corners):
        cam = transform_point(pose, corner)
        if cam[2] <= 0:
            raise BehindCameraError(cam, index=i)
        uv[i] = project(cam, k)
    return uv


def rasterize_polygon(quad, width, height):
    """Boolean HxW mask of pixel centers inside or on the convex quad."""
    quad = np.asarray(quad, dtype=float)
    if quad.shape != (4, 2):
        raise InvalidArgumentError("quad must be 4 (u, v) points")
    area = _signed_area(quad)
    if area == 0.0:
        warnings.warn("zero-area quad rasterized to empty mask", DegenerateQuadWarning)
        return np.zeros((height, width), dtype=bool)
    # Convexity: every cross product must agree with the winding sign.
    sign = np.sign(area)
    mask = np.ones((height, width), dtype=bool)
    edges = list(zip(quad, np.roll(quad, -1, axis=0)))
    ahead = np.roll(quad, -2, axis=0)
    for (a, b), c in zip(edges, ahead):
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if cross * sign < 0:
            raise InvalidArgumentError("quad is not convex")

    lo = np.floor(quad.min(axis=0)).astype(int)
    hi = np.ceil(quad.max(axis=0)).astype(int)
    u0, v0 = max(lo[0], 0), max(lo[1], 0)
    u1, v1 = min(hi[0], width - 1), min(hi[1], height - 1)
    out = np.zeros((height, width), dtype=bool)
    if u0 > u1 or v0 > v1:
        return out
    uu, vv = np.meshgrid(np.arange(u0, u1 + 1, dtype=float),
                         np.arange(v0, v1 + 1, dtype=float))
    inside = np.ones(uu.shape, dtype=bool)
    for a, b in edges:
        cross = (b[0] - a[0]) * (vv - a[1]) - (b[1] - a[1]) * (uu - a[0])
        inside &= sign * cross >= 0
    out[v0:v1 + 1, u0:u1 + 1] = inside
    return out


def frame_mask(outer, inner):
    """Ring mask: outer AND NOT inner."""
    if outer.shape != inner.shape:
        raise InvalidArgumentError("mask dimensions differ")
    return outer & ~inner


def apply_mask(image, mask):
    """Blacken masked pixels; everything else is bit-identical."""
    image = np.asarray(image)
    if image.shape[:2] != mask.shape:
        raise InvalidArgumentError("image and mask dimensions differ")
    out = image.copy()
    out[mask] = 0
    return out


def accumulate_density(masks):
    """Per-pixel fraction of frames covered; integer count accumulation."""
    counts = None
    n = 0
    for mask in masks:
        if counts is None:
            counts = np.zeros(mask.shape, dtype=np.int64)
        elif mask.shape != counts.shape:
            raise InvalidArgumentError("mask dimensions differ across frames")
        counts += mask
        n += 1
    if n == 0:
        raise InvalidArgumentError("no masks to accumulate")
    return DensityMap(counts=counts, frame_count=n)


@dataclass(frozen=True)
class DensityMap:
    counts: np.ndarray  # HxW int64
    frame_count: int

    @property
    def values(self):
        return self.counts / self.frame_count

    def to_png_array(self):
        return np.round(255.0 * self.values).astype(np.uint8)


def mask_for_pose(corners, geometry, pose, k, width, height):
    """Build the marker mask for a single frame's ground-truth pose."""
    outer = rasterize_polygon(project_quad(corners.outer, pose, k), width, height)
    if geometry == MaskGeometry.FRAME:
        if corners.inner is None:
            raise InvalidArgumentError("frame geometry needs inner corners")
        inner = rasterize_polygon(project_quad(corners.inner, pose, k), width, height)
        return frame_mask(outer, inner)
    return outer


def mask_dataset(manifest, corners, geometry, out_dir, fill=(0, 0, 0)):
    """Mask every frame of a manifest; returns a summary dict and retains
    per-frame masks for density accumulation."""
    if not manifest.frames:
        raise InvalidArgumentError("manifest has no frames")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    k = manifest.intrinsics
    counts = np.zeros((k.height, k.width), dtype=np.int64)
    masked_pixels = 0
    n_done = 0
    skipped = []
    fill = np.asarray(fill, dtype=np.uint8)
    for frame in manifest.frames:
        try:
            image = read_png(frame.image_path)
        except Exception as exc:
            skipped.append({"frame_id": frame.frame_id, "reason": f"unreadable image: {exc}"})
            continue
        try:
            mask = mask_for_pose(corners, geometry, frame.pose, k, k.width, k.height)
        except BehindCameraError as exc:
            skipped.append({"frame_id": frame.frame_id, "reason": str(exc)})
            continue
        if image.shape[:2] != mask.shape:
            skipped.append({"frame_id": frame.frame_id,
                            "reason": f"image size {image.shape[:2]} != intrinsics"})
            continue
        out = image.copy()
        out[mask] = fill
        write_png(out, out_dir / f"{frame.frame_id}.png")
        counts += mask
        masked_pixels += int(mask.sum())
        n_done += 1
    summary = {
        "frames_masked": n_done,
        "frames_skipped": len(skipped),
        "skipped": skipped,
        "masked_pixels_total": masked_pixels,
        "masked_pixels_mean": masked_pixels / n_done if n_done else 0.0,
        "geometry": geometry.value,
    }
    density = DensityMap(counts=counts, frame_count=n_done) if n_done else None
    return summary, density


def load_corner_config(path):
    """Corner config: TOML key/value file with outer/inner quads or the
    outer_offsets = [dx, dy, dz] shorthand."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        try:
            cfg = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise InvalidArgumentError(f"bad corner config: {exc}") from None
    if "outer" in cfg:
        outer = np.asarray(cfg["outer"], dtype=float)
    elif "outer_offsets" in cfg:
        off = cfg["outer_offsets"]
        if len(off) != 3:
            raise InvalidArgumentError("outer_offsets must be [dx, dy, dz]")
        outer = corners_from_offsets(*off)
    else:
        raise InvalidArgumentError("corner config needs 'outer' or 'outer_offsets'")
    inner = None
    if "inner" in cfg:
        inner = np.asarray(cfg["inner"], dtype=float)
    elif "inner_offsets" in cfg:
        off = cfg["inner_offsets"]
        if len(off) != 3:
            raise InvalidArgumentError("inner_offsets must be [dx, dy, dz]")
        inner = corners_from_offsets(*off)
    return cfg.get("object_id"), BoardCorners(outer=outer, inner=inner)


def write_density_outputs(density, out_prefix):
    """Write a density map as 8-bit PNG plus float32 tensor container."""
    from .tensorfile import write_tensor

    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    write_png(density.to_png_array(), out_prefix.with_suffix(".png"))
    write_tensor(density.values.astype(np.float32), out_prefix.with_suffix(".f32t"))
    meta = {"frame_count": density.frame_count,
            "max_density": float(density.values.max()),
            "mean_density": float(density.values.mean())}
    out_prefix.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")
    return meta
