"""Scalar-first unit quaternion helpers (body-to-world rotations)."""
import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def multiply(p, q):
    w1, x1, y1, z1 = p
    w2, x2, y2, z2 = q
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def from_rotvec(r):
    r = np.asarray(r, dtype=np.float64)
    angle = np.linalg.norm(r)
    if angle < 1e-12:
        # second-order series keeps small steps accurate
        return normalize(np.concatenate([[1.0 - angle ** 2 / 8], 0.5 * r]))
    axis = r / angle
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])


def from_rotvec_many(r) -> np.ndarray:
    """Vectorised ``from_rotvec`` over rows of ``r``."""
    r = np.asarray(r, dtype=np.float64).reshape(-1, 3)
    angle = np.linalg.norm(r, axis=1)
    small = angle < 1e-12
    safe = np.where(small, 1.0, angle)
    out = np.empty((r.shape[0], 4))
    out[:, 0] = np.where(small, 1.0 - angle ** 2 / 8, np.cos(angle / 2))
    out[:, 1:] = np.where(small, 0.5, np.sin(angle / 2) / safe)[:, None] * r
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def normalize(q):
    return q / np.linalg.norm(q)


def to_matrix(q) -> np.ndarray:
    """Rotation matrices for a single quaternion ``(4,)`` or a stack ``(n, 4)``."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = np.moveaxis(q, -1, 0)
    m = np.stack([
        1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
    ], axis=-1)
    return m.reshape(q.shape[:-1] + (3, 3))


def from_tilt(accel_mean) -> np.ndarray:
    """Level attitude (zero yaw) whose body z axis measures ``accel_mean`` as up."""
    ax, ay, az = accel_mean
    roll = np.arctan2(ay, az)
    pitch = np.arctan2(-ax, np.hypot(ay, az))
    return from_euler(roll, pitch, 0.0)


def from_euler(roll, pitch, yaw) -> np.ndarray:
    cr, sr = np.cos(roll / 2), np.sin(roll / 2)
    cp, sp = np.cos(pitch / 2), np.sin(pitch / 2)
    cy, sy = np.cos(yaw / 2), np.sin(yaw / 2)
    return np.array([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])


def pitch_of(q) -> float:
    w, x, y, z = q
    return float(np.arcsin(np.clip(2 * (w * y - z * x), -1.0, 1.0)))


def axis_angle_matrix(axis, angle) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)
