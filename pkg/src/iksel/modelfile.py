"""Loading robot models from YAML documents.

A model file looks like::

    name: planar-2r
    dof: 2
    joints:
      - name: j1
        type: revolute
        axis: [0, 0, 1]
        origin: {translation: [0, 0, 0], rotation: [0, 0, 0]}
        limits: [-3.14159, 3.14159]
      - ...
    tcp: {translation: [1, 0, 0], rotation: [0, 0, 0]}
    database_scales:          # optional grid presets for build_database
      small: [4, 4]

Rotations are rotation vectors in radians, translations are in meters.
"""
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ContractViolation, ModelFileError
from .kinematics import JointSpec, RobotModel, Transform

BUNDLED_MODELS = ("planar_2r", "ur3", "redundant_7r")


def _vector(value, n, where):
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ModelFileError(f"{where}: expected {n} numbers, got {value!r}") from None
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise ModelFileError(f"{where}: expected {n} finite numbers, got {value!r}")
    return v


def _transform(doc, where):
    if doc is None:
        return Transform.identity()
    if not isinstance(doc, dict):
        raise ModelFileError(f"{where}: expected a mapping with translation/rotation")
    t = _vector(doc.get("translation", [0, 0, 0]), 3, f"{where}.translation")
    r = _vector(doc.get("rotation", [0, 0, 0]), 3, f"{where}.rotation")
    return Transform.from_rotvec(t, r)


def model_from_document(doc):
    """Build a :class:`RobotModel` from an already-parsed document."""
    if not isinstance(doc, dict):
        raise ModelFileError("model document must be a mapping")
    for key in ("name", "dof", "joints"):
        if key not in doc:
            raise ModelFileError(f"missing required key {key!r}")
    joints_doc = doc["joints"]
    if not isinstance(joints_doc, list):
        raise ModelFileError("'joints' must be a list")
    if doc["dof"] != len(joints_doc):
        raise ModelFileError(f"declared dof {doc['dof']} disagrees with {len(joints_doc)} listed joints")

    joints = []
    for i, jd in enumerate(joints_doc):
        where = f"joints[{i}]"
        if not isinstance(jd, dict):
            raise ModelFileError(f"{where}: expected a mapping")
        limits = _vector(jd.get("limits"), 2, f"{where}.limits")
        try:
            joints.append(JointSpec(
                axis=_vector(jd.get("axis"), 3, f"{where}.axis"),
                origin=_transform(jd.get("origin"), f"{where}.origin"),
                lower=float(limits[0]),
                upper=float(limits[1]),
                name=str(jd.get("name", f"joint{i + 1}")),
                kind=jd.get("type", "revolute"),
            ))
        except ContractViolation as exc:
            raise ModelFileError(f"{where}: {exc}") from None

    scales = {}
    for label, divs in (doc.get("database_scales") or {}).items():
        if len(divs) != len(joints) or any(int(d) < 1 for d in divs):
            raise ModelFileError(f"database_scales.{label}: need {len(joints)} positive divisions")
        scales[str(label)] = tuple(int(d) for d in divs)

    try:
        return RobotModel(name=str(doc["name"]), joints=joints,
                          tcp=_transform(doc.get("tcp"), "tcp"),
                          scales=scales, document=doc)
    except ContractViolation as exc:
        raise ModelFileError(str(exc)) from None


def load_model(path):
    """Parse a model file, or a bundled model given by bare name (e.g. ``"ur3"``)."""
    if str(path) in BUNDLED_MODELS:
        text = resources.files("iksel.models").joinpath(f"{path}.yaml").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ModelFileError(f"cannot read model file {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelFileError(f"malformed model file {path}: {exc}") from None
    return model_from_document(doc)


def bundled_model_path(name):
    return Path(str(resources.files("iksel.models").joinpath(f"{name}.yaml")))
