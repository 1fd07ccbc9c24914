import numpy as np
import pytest

from posebias.geometry import CameraIntrinsics, Pose, axis_angle_to_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def intrinsics():
    return CameraIntrinsics(fx=572.4114, fy=573.5704, px=325.2611, py=242.0489,
                            width=640, height=480)


def random_rotation(rng):
    """Independent oracle: rotation matrix built from a random unit quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return quat_to_matrix(q)


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def axis_angle_to_quat(axis, angle):
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * np.asarray(axis)])


def random_pose(rng, t_scale=100.0):
    return Pose(random_rotation(rng), rng.uniform(-t_scale, t_scale, size=3))


def random_axis(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def pose_from_axis_angle(r, t):
    return Pose(axis_angle_to_matrix(np.asarray(r, dtype=float)),
                np.asarray(t, dtype=float))
