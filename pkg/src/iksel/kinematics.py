"""Serial-chain robot model, forward kinematics, Jacobian and pose arithmetic.

A chain is described joint by joint: each joint carries a fixed origin
transform relative to the previous joint frame and a revolute axis in its
own frame.  The tool frame sits at a fixed transform after the last joint::

    T(q) = O_1 Rot(a_1, q_1) O_2 Rot(a_2, q_2) ... O_n Rot(a_n, q_n) T_tcp

All quantities are expressed in the base (world) frame.
"""
from dataclasses import dataclass, field
import hashlib
import json
import math

import numpy as np

from .errors import ContractViolation
from .rotations import rotation_matrices, rotation_matrix, rotation_vector, rotation_vectors, skew

MAX_DOF = 16


@dataclass(frozen=True, eq=False)
class Transform:
    """Rigid transform: translation (m) and rotation matrix."""

    p: np.ndarray
    R: np.ndarray

    @classmethod
    def identity(cls):
        return cls(np.zeros(3), np.eye(3))

    @classmethod
    def from_rotvec(cls, translation, rotvec):
        return cls(np.asarray(translation, dtype=float), rotation_matrix(rotvec))

    def as_matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.R
        T[:3, 3] = self.p
        return T


# a pose is a transform whose frame happens to be the TCP
Pose = Transform


def _check_rotation(R, what, tol=1e-9):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise ContractViolation(f"{what}: rotation must be a finite 3x3 matrix")
    if np.abs(R @ R.T - np.eye(3)).max() > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise ContractViolation(f"{what}: rotation is not orthonormal with det +1")


@dataclass(frozen=True, eq=False)
class JointSpec:
    axis: np.ndarray
    origin: Transform
    lower: float
    upper: float
    name: str = ""
    kind: str = "revolute"

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", axis)
        if self.kind != "revolute":
            raise ContractViolation(f"joint {self.name!r}: only revolute joints are supported")
        if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ContractViolation(f"joint {self.name!r}: axis must be a unit 3-vector")
        if not self.lower < self.upper:
            raise ContractViolation(f"joint {self.name!r}: lower limit must be below upper limit")
        _check_rotation(self.origin.R, f"joint {self.name!r} origin")


@dataclass(frozen=True, eq=False)
class RobotModel:
    name: str
    joints: tuple
    tcp: Transform = field(default_factory=Transform.identity)
    # per-scale grid divisions declared by the model file (optional)
    scales: dict = field(default_factory=dict)
    # canonical description the fingerprint is computed from
    document: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if not 1 <= len(self.joints) <= MAX_DOF:
            raise ContractViolation(f"dof must be between 1 and {MAX_DOF}, got {len(self.joints)}")
        _check_rotation(self.tcp.R, "tcp transform")
        object.__setattr__(self, "_cache", _ChainArrays(self))

    @property
    def dof(self):
        return len(self.joints)

    @property
    def lower(self):
        return self._cache.lower

    @property
    def upper(self):
        return self._cache.upper

    @property
    def fingerprint(self):
        """SHA-256 of the canonical JSON form of the model document."""
        doc = self.document if self.document is not None else self.to_document()
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).digest()

    def to_document(self):
        def tf(t):
            return {"translation": [float(x) for x in t.p],
                    "rotation": [float(x) for x in rotation_vector(t.R)]}

        return {
            "name": self.name,
            "dof": self.dof,
            "joints": [{"name": j.name, "type": j.kind,
                        "axis": [float(x) for x in j.axis],
                        "origin": tf(j.origin),
                        "limits": [float(j.lower), float(j.upper)]} for j in self.joints],
            "tcp": tf(self.tcp),
            "database_scales": {k: list(v) for k, v in self.scales.items()},
        }

    def check_config(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dof,):
            raise ContractViolation(f"expected {self.dof} joint values, got shape {q.shape}")
        return q


class _ChainArrays:
    """Stacked per-joint constants, precomputed once per model."""

    def __init__(self, model):
        joints = model.joints
        self.origin_p = np.array([j.origin.p for j in joints], dtype=float)
        self.origin_R = np.array([j.origin.R for j in joints], dtype=float)
        self.axis = np.array([j.axis for j in joints], dtype=float)
        self.K = np.array([skew(a) for a in self.axis])
        self.K2 = self.K @ self.K
        self.lower = np.array([j.lower for j in joints], dtype=float)
        self.upper = np.array([j.upper for j in joints], dtype=float)
        self.tcp_p = np.asarray(model.tcp.p, dtype=float)
        self.tcp_R = np.asarray(model.tcp.R, dtype=float)


def _chain(model, q):
    """Walk the chain; return TCP pose plus per-joint base-frame origins and axes."""
    c = model._cache
    n = model.dof
    R = np.eye(3)
    p = np.zeros(3)
    origins = np.empty((n, 3))
    axes = np.empty((n, 3))
    for i in range(n):
        p = p + R @ c.origin_p[i]
        R = R @ c.origin_R[i]
        origins[i] = p
        axes[i] = R @ c.axis[i]
        s, co = math.sin(q[i]), math.cos(q[i])
        R = R @ (np.eye(3) + s * c.K[i] + (1.0 - co) * c.K2[i])
    p = p + R @ c.tcp_p
    R = R @ c.tcp_R
    return p, R, origins, axes


def forward_kinematics(model, q):
    """Base-frame TCP pose at joint configuration ``q`` (limits not enforced)."""
    q = model.check_config(q)
    p, R, _, _ = _chain(model, q)
    return Pose(p, R)


def jacobian(model, q):
    """Geometric Jacobian (6 x dof): linear rows on top, angular rows below."""
    q = model.check_config(q)
    return fk_and_jacobian(model, q)[1]


def fk_and_jacobian(model, q):
    p, R, origins, axes = _chain(model, q)
    J = np.empty((6, model.dof))
    J[:3] = np.cross(axes, p - origins).T
    J[3:] = axes.T
    return Pose(p, R), J


def batch_forward_kinematics(model, qs, with_jacobian=False):
    """Vectorized FK over ``qs`` of shape (N, dof).

    Returns ``(p, R)`` arrays of shape (N, 3) and (N, 3, 3), plus the (N, 6, dof)
    Jacobians when ``with_jacobian`` is set.
    """
    c = model._cache
    qs = np.asarray(qs, dtype=float)
    if qs.ndim != 2 or qs.shape[1] != model.dof:
        raise ContractViolation(f"expected shape (N, {model.dof}), got {qs.shape}")
    N, n = qs.shape
    R = np.broadcast_to(np.eye(3), (N, 3, 3)).copy()
    p = np.zeros((N, 3))
    if with_jacobian:
        origins = np.empty((N, n, 3))
        axes = np.empty((N, n, 3))
    for i in range(n):
        p = p + R @ c.origin_p[i]
        R = R @ c.origin_R[i]
        if with_jacobian:
            origins[:, i] = p
            axes[:, i] = R @ c.axis[i]
        s = np.sin(qs[:, i])[:, None, None]
        co = np.cos(qs[:, i])[:, None, None]
        R = R @ (np.eye(3) + s * c.K[i] + (1.0 - co) * c.K2[i])
    p = p + R @ c.tcp_p
    R = R @ c.tcp_R
    if not with_jacobian:
        return p, R
    J = np.empty((N, 6, n))
    J[:, :3] = np.cross(axes, p[:, None, :] - origins).transpose(0, 2, 1)
    J[:, 3:] = axes.transpose(0, 2, 1)
    return p, R, J


def pose_error(current, target):
    """6-vector [target.p - current.p; rotvec(target.R @ current.R^T)]."""
    e = np.empty(6)
    e[:3] = target.p - current.p
    e[3:] = rotation_vector(target.R @ current.R.T)
    return e


def batch_pose_error(p, R, target):
    """:func:`pose_error` from many current poses (N, 3)/(N, 3, 3) to one target."""
    e = np.empty((len(p), 6))
    e[:, :3] = target.p - p
    e[:, 3:] = rotation_vectors(target.R @ R.transpose(0, 2, 1))
    return e


def regularized_pinv(J, rel_cutoff=1e-4):
    """Pseudo-inverse V S^+ U^T with singular values below rel_cutoff * s_max dropped."""
    if not 0.0 < rel_cutoff < 1.0:
        raise ContractViolation("rel_cutoff must lie in (0, 1)")
    J = np.asarray(J, dtype=float)
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    s_inv = np.zeros_like(s)
    if s.size and s[0] > 0.0:
        keep = s >= rel_cutoff * s[0]
        s_inv[keep] = 1.0 / s[keep]
    return (Vt.T * s_inv) @ U.T


def batch_regularized_pinv(Js, rel_cutoff=1e-4):
    """:func:`regularized_pinv` over a stack of matrices (N, m, n) -> (N, n, m)."""
    if not 0.0 < rel_cutoff < 1.0:
        raise ContractViolation("rel_cutoff must lie in (0, 1)")
    U, s, Vt = np.linalg.svd(Js, full_matrices=False)
    smax = s[:, :1]
    keep = (s >= rel_cutoff * smax) & (smax > 0.0)
    s_inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    return (Vt.transpose(0, 2, 1) * s_inv[:, None, :]) @ U.transpose(0, 2, 1)


def within_limits(model, q):
    """True iff every joint value lies in its closed [lower, upper] interval."""
    q = model.check_config(q)
    c = model._cache
    return bool(np.all(q >= c.lower) and np.all(q <= c.upper))


def pose_from_vector(values):
    """Pose from 6 numbers (p + rotvec) or 12 numbers (p + row-major R)."""
    v = np.asarray(values, dtype=float)
    if v.shape == (6,):
        return Pose(v[:3].copy(), rotation_matrix(v[3:]))
    if v.shape == (12,):
        R = v[3:].reshape(3, 3)
        _check_rotation(R, "target")
        return Pose(v[:3].copy(), R.copy())
    raise ContractViolation("a pose takes 6 (p + rotvec) or 12 (p + R) numbers")


__all__ = [
    "Transform", "Pose", "JointSpec", "RobotModel", "forward_kinematics", "jacobian",
    "fk_and_jacobian", "batch_forward_kinematics", "pose_error", "batch_pose_error",
    "regularized_pinv", "batch_regularized_pinv", "within_limits", "pose_from_vector",
    "rotation_matrices",
]
