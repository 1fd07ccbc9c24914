"""Rigid-body transforms, axis-angle conversions and pinhole projection.

Conventions: points and translations in millimetres, rotations as 3x3
row-major matrices, pixel origin at the top-left with pixel centers on
integer coordinates (u rightward, v downward).
"""

from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, InvalidArgumentError

ROTATION_TOL = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    px: float
    py: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidArgumentError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise InvalidArgumentError("image dimensions must be >= 1")


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotation (3x3) plus translation (3,) in mm."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3) or t.shape != (3,):
            raise InvalidArgumentError("pose needs a 3x3 rotation and 3-vector translation")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise InvalidArgumentError("pose components must be finite")
        check_rotation(r)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def compose(self, other):
        """self after other: x -> self(other(x))."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)


def check_rotation(m, tol=ROTATION_TOL):
    """Raise unless m is orthonormal with determinant +1 within tol."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise InvalidArgumentError("rotation must be a finite 3x3 matrix")
    residual = np.max(np.abs(m.T @ m - np.eye(3)))
    if residual > tol:
        raise InvalidArgumentError(f"matrix is not orthonormal (residual {residual:.3e})")
    det = np.linalg.det(m)
    if abs(det - 1.0) > tol:
        raise InvalidArgumentError(f"matrix determinant {det} is not +1")
    return m


def axis_angle_to_matrix(r):
    """Rodrigues rotation: 3-vector whose norm is the angle in radians."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,) or not np.all(np.isfinite(r)):
        raise InvalidArgumentError("axis-angle must be a finite 3-vector")
    angle = np.linalg.norm(r)
    if angle < 1e-12:
        return np.eye(3)
    axis = r / angle
    k = np.array([[0.0, -axis[2], axis[1]],
                  [axis[2], 0.0, -axis[0]],
                  [-axis[1], axis[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def matrix_to_axis_angle(m):
    """Inverse of axis_angle_to_matrix; angle canonicalized to [0, pi]."""
    m = check_rotation(m, tol=1e-6)
    trace = np.clip((np.trace(m) - 1.0) / 2.0, -1.0, 1.0)
    sin_vec = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]]) / 2.0
    sin_norm = float(np.linalg.norm(sin_vec))
    # atan2 keeps precision at both ends; arccos alone degrades near 0.
    angle = float(np.arctan2(sin_norm, trace))
    if angle < 1e-12:
        return np.zeros(3)
    if angle > np.pi - 1e-4:
        # Near pi the antisymmetric part cancels; recover the axis from the
        # outer product a a^T hidden in the symmetric part:
        # (R + R^T)/2 = I + (1 - cos) (a a^T - I).
        sym = (m + m.T) / 2.0
        outer = (sym - trace * np.eye(3)) / (1.0 - trace)
        axis = np.array([np.sqrt(max(outer[i, i], 0.0)) for i in range(3)])
        # Off-diagonals fix the relative signs.
        i = int(np.argmax(axis))
        if axis[i] > 0:
            for j in range(3):
                if j != i:
                    axis[j] = outer[i, j] / axis[i]
        norm = np.linalg.norm(axis)
        if norm == 0.0:
            raise InvalidArgumentError("cannot extract rotation axis")
        axis /= norm
        # The antisymmetric residual still carries the axis sign and a
        # better angle estimate as long as sin(angle) is above noise.
        sin_angle = float(np.dot(sin_vec, axis))
        if sin_angle < 0:
            axis = -axis
            sin_angle = -sin_angle
        if sin_angle > 1e-12:
            angle = float(np.arctan2(sin_angle, trace))
        else:
            # Exactly a half turn: axis sign is ambiguous, fix by convention
            # (first nonzero component positive).
            angle = np.pi
            for c in axis:
                if abs(c) > 1e-9:
                    if c < 0:
                        axis = -axis
                    break
        return axis * angle
    return sin_vec / sin_norm * angle


def transform_point(pose, p):
    """Apply the rigid transform: R @ p + t. Accepts (3,) or (N, 3)."""
    p = np.asarray(p, dtype=float)
    return p @ pose.rotation.T + pose.translation


def project(p_cam, k):
    """Pinhole projection of camera-frame point(s) to pixel coordinates."""
    p = np.asarray(p_cam, dtype=float)
    single = p.ndim == 1
    pts = np.atleast_2d(p)
    bad = np.nonzero(pts[:, 2] <= 0)[0]
    if bad.size:
        i = int(bad[0])
        raise BehindCameraError(pts[i], index=None if single else i)
    u = k.fx * pts[:, 0] / pts[:, 2] + k.px
    v = k.fy * pts[:, 1] / pts[:, 2] + k.py
    uv = np.stack([u, v], axis=-1)
    return (float(uv[0, 0]), float(uv[0, 1])) if single else uv


def backproject_center(cx, cy, tz, k):
    """Recover (tx, ty, tz) from an image point and a known depth."""
    if not tz > 0:
        raise InvalidArgumentError(f"depth must be positive, got {tz}")
    tx = (cx - k.px) * tz / k.fx
    ty = (cy - k.py) * tz / k.fy
    return np.array([tx, ty, tz], dtype=float)


def pose_to_homogeneous(pose):
    h = np.eye(4)
    h[:3, :3] = pose.rotation
    h[:3, 3] = pose.translation
    return h
