"""Seed database: grid-sampled joint configurations indexed by TCP pose.

Every record holds a joint configuration, its pose key and the regularized
Jacobian pseudo-inverse at that configuration.  The key is the 6-vector
``[p; rotation_weight * rotvec(R)]`` so that plain Euclidean distance in key
space is the weighted workspace metric.

On-disk layout (little-endian)::

    header  magic "IKSELDB1" | version u32 | model fingerprint (32 B)
            | dof u32 | record count u64 | rotation weight f64
            | rel_cutoff f64 | divisions (dof x u32)
    body    records in grid order: q (dof f64), key (6 f64),
            jpinv (dof x 6 f64, row-major)
    footer  SHA-256 of the body (32 B)
"""
from dataclasses import dataclass
import hashlib
import logging
import struct

import numpy as np

from .errors import ContractViolation, DatabaseFormatError, DatabaseTooLargeError, IncompatibleModelError
from .kdtree import KDTree
from .kinematics import Pose, batch_forward_kinematics, batch_regularized_pinv, rotation_matrices
from .rotations import rotation_vector, rotation_vectors

log = logging.getLogger(__name__)

MAGIC = b"IKSELDB1"
FORMAT_VERSION = 1
MAX_RECORDS = 10**7
_HEADER = struct.Struct("<8sI32sIQdd")
_CHUNK = 20000


@dataclass(frozen=True, eq=False)
class SeedRecord:
    index: int
    q: np.ndarray
    key: np.ndarray
    jpinv: np.ndarray

    def pose(self, rotation_weight):
        return Pose(self.key[:3].copy(), rotation_matrices(self.key[3:] / rotation_weight))


def pose_key(pose, rotation_weight):
    key = np.empty(6)
    key[:3] = pose.p
    key[3:] = rotation_weight * rotation_vector(pose.R)
    return key


class SeedDatabase:
    """Immutable set of seed records plus the KD-tree over their keys."""

    def __init__(self, model_fingerprint, rotation_weight, rel_cutoff, divisions, q, keys, jpinv):
        if len(q) < 1:
            raise ContractViolation("a seed database needs at least one record")
        self.model_fingerprint = bytes(model_fingerprint)
        self.rotation_weight = float(rotation_weight)
        self.rel_cutoff = float(rel_cutoff)
        self.divisions = tuple(int(d) for d in divisions)
        self.q = q
        self.keys = keys
        self.jpinv = jpinv
        for a in (q, keys, jpinv):
            a.flags.writeable = False
        self.tree = KDTree(keys)

    def __len__(self):
        return len(self.q)

    @property
    def dof(self):
        return self.q.shape[1]

    def record(self, i):
        return SeedRecord(int(i), self.q[i], self.keys[i], self.jpinv[i])

    def key_of(self, pose):
        return pose_key(pose, self.rotation_weight)

    def record_poses(self, idx):
        """Positions and rotation matrices recovered from the stored keys."""
        k = self.keys[idx]
        return k[:, :3], rotation_matrices(k[:, 3:] / self.rotation_weight)

    def check_model(self, model):
        if model.fingerprint != self.model_fingerprint:
            raise IncompatibleModelError(
                f"database was built for model fingerprint {self.model_fingerprint.hex()[:16]}..., "
                f"not {model.name!r} ({model.fingerprint.hex()[:16]}...)")


def grid_configurations(model, divisions):
    """Cartesian grid of joint values at cell centres, first joint slowest."""
    axes = [model.lower[j] + (np.arange(n) + 0.5) * (model.upper[j] - model.lower[j]) / n
            for j, n in enumerate(divisions)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def build_database(model, divisions, rotation_weight=1.0, rel_cutoff=1e-4, max_records=MAX_RECORDS):
    """Sample the joint grid and build a :class:`SeedDatabase`.

    ``divisions`` is either a per-joint sequence of positive integers or the
    name of a scale preset declared by the model file (``"small"``, ...).
    """
    if isinstance(divisions, str):
        try:
            divisions = model.scales[divisions]
        except KeyError:
            raise ContractViolation(f"model {model.name!r} declares no {divisions!r} scale") from None
    divisions = tuple(int(d) for d in divisions)
    if len(divisions) != model.dof or min(divisions) < 1:
        raise ContractViolation(f"need {model.dof} positive division counts, got {divisions}")
    if not rotation_weight > 0:
        raise ContractViolation("rotation_weight must be positive")
    count = int(np.prod(divisions, dtype=object))
    if count > max_records:
        raise DatabaseTooLargeError(f"{count} records requested, ceiling is {max_records}")

    q = grid_configurations(model, divisions)
    keys = np.empty((count, 6))
    jpinv = np.empty((count, model.dof, 6))
    for s in range(0, count, _CHUNK):
        chunk = slice(s, s + _CHUNK)
        p, R, J = batch_forward_kinematics(model, q[chunk], with_jacobian=True)
        keys[chunk, :3] = p
        keys[chunk, 3:] = rotation_weight * rotation_vectors(R)
        jpinv[chunk] = batch_regularized_pinv(J, rel_cutoff)
    log.info("built %d seed records for %s", count, model.name)
    return SeedDatabase(model.fingerprint, rotation_weight, rel_cutoff, divisions, q, keys, jpinv)


def _record_dtype(dof):
    return np.dtype([("q", "<f8", (dof,)), ("key", "<f8", (6,)), ("jpinv", "<f8", (dof, 6))])


def save_database(db, path):
    body = np.empty(len(db), dtype=_record_dtype(db.dof))
    body["q"] = db.q
    body["key"] = db.keys
    body["jpinv"] = db.jpinv
    body_bytes = body.tobytes()
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, db.model_fingerprint, db.dof, len(db),
                          db.rotation_weight, db.rel_cutoff)
    header += struct.pack(f"<{db.dof}I", *db.divisions)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body_bytes)
        fh.write(hashlib.sha256(body_bytes).digest())


def load_database(path, model):
    """Read a database file and check it against ``model``.

    Raises :class:`IncompatibleModelError` on a fingerprint mismatch and
    :class:`DatabaseFormatError` for truncated or corrupt files.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise DatabaseFormatError("file too short for header", offset=len(data))
    magic, version, fingerprint, dof, count, weight, cutoff = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DatabaseFormatError(f"bad magic {magic!r}", offset=0)
    if version != FORMAT_VERSION:
        raise DatabaseFormatError(f"unsupported format version {version}", offset=8)
    if fingerprint != model.fingerprint:
        raise IncompatibleModelError(f"database {path} was built for a different robot model")
    if dof != model.dof:
        raise DatabaseFormatError(f"dof {dof} does not match model dof {model.dof}", offset=44)
    offset = _HEADER.size
    if len(data) < offset + 4 * dof:
        raise DatabaseFormatError("truncated division table", offset=len(data))
    divisions = struct.unpack_from(f"<{dof}I", data, offset)
    offset += 4 * dof

    dtype = _record_dtype(dof)
    body_end = offset + count * dtype.itemsize
    if len(data) < body_end:
        raise DatabaseFormatError(
            f"truncated body: expected {count} records of {dtype.itemsize} bytes", offset=len(data))
    if len(data) != body_end + 32:
        raise DatabaseFormatError("missing or oversized checksum footer", offset=body_end)
    body_bytes = data[offset:body_end]
    if hashlib.sha256(body_bytes).digest() != data[body_end:]:
        raise DatabaseFormatError("body checksum mismatch", offset=body_end)
    body = np.frombuffer(body_bytes, dtype=dtype)
    return SeedDatabase(fingerprint, weight, cutoff, divisions,
                        np.ascontiguousarray(body["q"]), np.ascontiguousarray(body["key"]),
                        np.ascontiguousarray(body["jpinv"]))


def query_k_nearest(db, target, k):
    """The ``k`` records nearest to ``target`` in key space, as (record, distance)."""
    if k < 1:
        raise ContractViolation("k must be at least 1")
    idx, d2 = db.tree.query(db.key_of(target), k)
    return [(db.record(i), float(np.sqrt(d))) for i, d in zip(idx, d2)]


def query_within(db, target, delta):
    """All records whose squared key distance to ``target`` is at most ``delta``."""
    if delta < 0:
        raise ContractViolation("delta must be non-negative")
    idx, d2 = db.tree.query_radius(db.key_of(target), delta)
    return [(db.record(i), float(np.sqrt(d))) for i, d in zip(idx, d2)]
