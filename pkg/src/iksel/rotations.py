"""Rotation-vector <-> rotation-matrix conversions, single and batched.

Rotation vectors are canonicalized so that the angle lies in [0, pi].  At
exactly pi the representative whose largest-magnitude component is
non-negative is chosen, which keeps database keys deterministic.
"""
import math

import numpy as np

# below this angle the series expansion of theta / (2 sin theta) is used
_SMALL_ANGLE = 1e-6
# within this distance of pi the axis is recovered from the symmetric part
_NEAR_PI = 1e-2
# sin(theta) magnitude below which the sign cannot be read off the skew part
_SIGN_UNRESOLVED = 1e-9


def skew(v):
    """Cross-product matrix of a 3-vector."""
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def rotation_matrix(rotvec):
    """Rodrigues formula for a single rotation vector."""
    w = np.asarray(rotvec, dtype=float)
    theta = math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    if theta < _SMALL_ANGLE:
        K = skew(w)
        return np.eye(3) + K + 0.5 * (K @ K)
    K = skew(w / theta)
    return np.eye(3) + math.sin(theta) * K + (1.0 - math.cos(theta)) * (K @ K)


def rotation_matrices(rotvecs):
    """Batched Rodrigues formula, ``(..., 3) -> (..., 3, 3)``."""
    w = np.asarray(rotvecs, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    # small angles: sin(t)/t -> 1, (1-cos t)/t^2 -> 1/2
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    K = np.zeros(w.shape[:-1] + (3, 3))
    K[..., 0, 1] = -w[..., 2]
    K[..., 0, 2] = w[..., 1]
    K[..., 1, 0] = w[..., 2]
    K[..., 1, 2] = -w[..., 0]
    K[..., 2, 0] = -w[..., 1]
    K[..., 2, 1] = w[..., 0]
    return np.eye(3) + a[..., None, None] * K + b[..., None, None] * (K @ K)


def _canonical_sign(axis):
    i = int(np.argmax(np.abs(axis)))
    return axis if axis[i] >= 0.0 else -axis


def _axis_near_pi(R, cos_theta):
    # (R + R^T)/2 = cos(t) I + (1 - cos(t)) a a^T
    S = 0.5 * (R + R.T) - cos_theta * np.eye(3)
    S /= 1.0 - cos_theta
    i = int(np.argmax(np.diag(S)))
    axis = S[:, i] / math.sqrt(max(S[i, i], 1e-300))
    return axis / np.linalg.norm(axis)


def rotation_vector(R):
    """Rotation vector (axis * angle, angle in [0, pi]) of a rotation matrix."""
    R = np.asarray(R, dtype=float)
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    sin2 = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])  # 2 sin(theta)
    cos2 = R[0, 0] + R[1, 1] + R[2, 2] - 1.0  # 2 cos(theta)
    theta = math.atan2(sin2, cos2)
    if theta < _SMALL_ANGLE:
        return (0.5 + theta * theta / 12.0) * v
    if math.pi - theta < _NEAR_PI:
        axis = _axis_near_pi(R, 0.5 * cos2)
        if 0.5 * sin2 < _SIGN_UNRESOLVED:
            axis = _canonical_sign(axis)
        elif axis @ v < 0.0:
            axis = -axis
        return theta * axis
    return (theta / sin2) * v


def rotation_vectors(Rs):
    """Batched :func:`rotation_vector`, ``(..., 3, 3) -> (..., 3)``."""
    Rs = np.asarray(Rs, dtype=float)
    shape = Rs.shape[:-2]
    flat = Rs.reshape(-1, 3, 3)
    v = np.stack([flat[:, 2, 1] - flat[:, 1, 2],
                  flat[:, 0, 2] - flat[:, 2, 0],
                  flat[:, 1, 0] - flat[:, 0, 1]], axis=-1)
    sin2 = np.linalg.norm(v, axis=-1)
    cos2 = np.trace(flat, axis1=1, axis2=2) - 1.0
    theta = np.arctan2(sin2, cos2)
    small = theta < _SMALL_ANGLE
    near_pi = np.pi - theta < _NEAR_PI
    scale = np.where(small, 0.5 + theta**2 / 12.0,
                     theta / np.where(small | near_pi, 1.0, sin2))
    out = scale[:, None] * v
    for i in np.flatnonzero(near_pi):
        out[i] = rotation_vector(flat[i])
    return out.reshape(shape + (3,))
