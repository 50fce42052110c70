"""Iterative IK refinement from a given seed.

All update rules are applied without a step-scaling coefficient; a good seed
is what keeps the linearization valid.
"""
from dataclasses import dataclass, field, replace
import enum
import math

import numpy as np

from .errors import ContractViolation
from .kinematics import fk_and_jacobian, pose_error, regularized_pinv

STAGNATION = 1e-12


class SolverKind(str, enum.Enum):
    DLS = "DLS"
    PINV = "PINV"
    PINV_RR = "PINV_RR"
    CWLN = "CWLN"
    CWPI = "CWPI"


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    ITERATION_LIMIT = "IterationLimit"
    LIMIT_VIOLATION = "LimitViolation"
    LOCAL_MINIMUM = "LocalMinimum"


_MONOTONE_BY_DEFAULT = {SolverKind.DLS, SolverKind.PINV, SolverKind.PINV_RR}


@dataclass(frozen=True)
class SolverConfig:
    kind: SolverKind = SolverKind.DLS
    max_iterations: int = 7
    position_tolerance: float = 1e-6
    rotation_tolerance: float = 1e-6
    damping: float = 1e-3
    rel_cutoff: float = 1e-4
    # None picks the per-kind default: on for DLS/PINV/PINV_RR, off for CWLN/CWPI
    enforce_monotone: bool = None
    # weight of the rotation part in the monotone-decrease norm
    rotation_weight: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SolverKind(self.kind))
        if self.enforce_monotone is None:
            object.__setattr__(self, "enforce_monotone", self.kind in _MONOTONE_BY_DEFAULT)
        if self.max_iterations < 1:
            raise ContractViolation("max_iterations must be at least 1")
        if not (self.position_tolerance > 0 and self.rotation_tolerance > 0):
            raise ContractViolation("tolerances must be positive")
        if not self.damping > 0:
            raise ContractViolation("damping must be positive")
        if not 0 < self.rel_cutoff < 1:
            raise ContractViolation("rel_cutoff must lie in (0, 1)")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class IterationOutcome:
    status: Status
    q: np.ndarray
    iterations: int
    error: np.ndarray
    # weighted error norm before the first update and after each update
    error_norms: list = field(default_factory=list)
    restarts: int = 0

    @property
    def converged(self):
        return self.status is Status.CONVERGED


def weighted_error_norm(e, rotation_weight=1.0):
    """sqrt(|e_pos|^2 + w^2 |e_rot|^2)."""
    if not rotation_weight > 0:
        raise ContractViolation("rotation_weight must be positive")
    pos = e[0] * e[0] + e[1] * e[1] + e[2] * e[2]
    rot = e[3] * e[3] + e[4] * e[4] + e[5] * e[5]
    return math.sqrt(pos + rotation_weight * rotation_weight * rot)


def _pose_converged(e, cfg):
    return (math.sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]) <= cfg.position_tolerance
            and math.sqrt(e[3] * e[3] + e[4] * e[4] + e[5] * e[5]) <= cfg.rotation_tolerance)


def _in_box(q, lower, upper):
    return bool(np.all(q >= lower) and np.all(q <= upper))


def _dls_step(J, e, damping):
    JJt = J @ J.T
    JJt[np.diag_indices(6)] += damping * damping
    return J.T @ np.linalg.solve(JJt, e)


def _limit_gradient(q, lower, upper):
    """|dH/dq| of H = sum (u - l)^2 / (4 (q - l)(u - q)), inf at or past a limit."""
    a = q - lower
    b = upper - q
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.abs((upper - lower) ** 2 * (2.0 * q - upper - lower) / (4.0 * a * a * b * b))
    g[(a <= 0.0) | (b <= 0.0)] = np.inf
    return g


class _ClampingWeights:
    """Joint weights for the clamping weighted least-norm family.

    A joint's weight is ``1 + |dH/dq|`` while it moves toward a limit and 1
    while it moves away, as in the classic weighted least-norm scheme.  Joints
    clamped on the previous step are frozen (zero inverse weight) for one step.
    """

    def __init__(self, lower, upper):
        self.lower = lower
        self.upper = upper
        self.prev_grad = None
        self.frozen = np.zeros(len(lower), dtype=bool)

    def inverse(self, q):
        grad = _limit_gradient(q, self.lower, self.upper)
        if self.prev_grad is None:
            w = 1.0 + grad
        else:
            w = np.where(grad >= self.prev_grad, 1.0 + grad, 1.0)
        self.prev_grad = grad
        w_inv = np.where(np.isfinite(w), 1.0 / w, 0.0)
        # a joint resting exactly on a limit may still move inward
        w_inv[~np.isfinite(w) & ~self.frozen] = 1.0
        w_inv[self.frozen] = 0.0
        return w_inv

    def clamp(self, q):
        clipped = np.clip(q, self.lower, self.upper)
        self.frozen = clipped != q
        return clipped


def _cwln_step(J, e, w_inv, damping):
    JW = J * w_inv
    A = JW @ J.T
    A[np.diag_indices(6)] += damping * damping
    return w_inv * (J.T @ np.linalg.solve(A, e))


def _cwpi_step(J, e, w_inv, rel_cutoff):
    s = np.sqrt(w_inv)
    return s * (regularized_pinv(J * s, rel_cutoff) @ e)


def iterate(model, seed, target, cfg=SolverConfig(), stream=0):
    """Refine ``seed`` toward ``target``; returns an :class:`IterationOutcome`.

    ``stream`` (an int or tuple of ints) separates the random-restart streams
    of PINV_RR calls that share one ``cfg.rng_seed``.
    """
    q = model.check_config(seed).copy()
    lower, upper = model.lower, model.upper
    kind = cfg.kind
    clamping = kind in (SolverKind.CWLN, SolverKind.CWPI)
    weights = _ClampingWeights(lower, upper) if clamping else None
    rng = None
    restarts = 0

    pose, J = fk_and_jacobian(model, q)
    e = pose_error(pose, target)
    norm = weighted_error_norm(e, cfg.rotation_weight)
    norms = [norm]
    reference = norm

    def outcome(status, it):
        return IterationOutcome(status, q, it, e, norms, restarts)

    for it in range(cfg.max_iterations + 1):
        if _pose_converged(e, cfg):
            if _in_box(q, lower, upper):
                return outcome(Status.CONVERGED, it)
            if kind is not SolverKind.PINV_RR or it == cfg.max_iterations:
                return outcome(Status.LIMIT_VIOLATION, it)
        if it == cfg.max_iterations:
            return outcome(Status.ITERATION_LIMIT, it)

        if kind is SolverKind.DLS:
            dq = _dls_step(J, e, cfg.damping)
        elif kind is SolverKind.CWLN:
            dq = _cwln_step(J, e, weights.inverse(q), cfg.damping)
        elif kind is SolverKind.CWPI:
            dq = _cwpi_step(J, e, weights.inverse(q), cfg.rel_cutoff)
        else:
            dq = regularized_pinv(J, cfg.rel_cutoff) @ e

        if not np.all(np.isfinite(dq)):
            return outcome(Status.DIVERGED, it)
        stalled = float(np.linalg.norm(dq)) < STAGNATION
        if stalled and kind is not SolverKind.PINV_RR:
            return outcome(Status.LOCAL_MINIMUM, it)

        q = q + dq
        if clamping:
            q = weights.clamp(q)
        if kind is SolverKind.PINV_RR and (stalled or not _in_box(q, lower, upper)):
            if rng is None:
                rng = np.random.default_rng([cfg.rng_seed, *np.atleast_1d(stream)])
            q = rng.uniform(lower, upper)
            restarts += 1
            reference = np.inf

        pose, J = fk_and_jacobian(model, q)
        e = pose_error(pose, target)
        norm = weighted_error_norm(e, cfg.rotation_weight)
        norms.append(norm)
        if not math.isfinite(norm):
            return outcome(Status.DIVERGED, it + 1)
        if cfg.enforce_monotone and norm >= reference and not _pose_converged(e, cfg):
            return outcome(Status.DIVERGED, it + 1)
        reference = norm
    raise AssertionError("unreachable")
