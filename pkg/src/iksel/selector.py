"""Seed selection, re-selection and the top-level solve loop.

Candidates come from the seed database by workspace proximity.  Each one is
scored by the joint-space adjustment its stored Jacobian pseudo-inverse
predicts for reaching the target; the smallest adjustment is tried first.
After a failure the next seed is the pool member farthest (max-min joint
distance) from all seeds that have failed so far.
"""
from dataclasses import dataclass, field
import enum
import time

import numpy as np

from .errors import ContractViolation, NoCandidatesError, PoolExhaustedError
from .kinematics import batch_pose_error
from .solvers import SolverConfig, iterate


class SelectionMetric(str, enum.Enum):
    WORKSPACE_PROXIMITY = "WorkspaceProximity"
    JOINT_ADJUSTMENT = "JointAdjustment"


class ReselectPolicy(str, enum.Enum):
    FARTHEST_FROM_FAILURES = "FarthestFromFailures"
    NEXT_SMALLEST_ADJUSTMENT = "NextSmallestAdjustment"
    NEXT_NEAREST_WORKSPACE = "NextNearestWorkspace"


@dataclass(frozen=True)
class SelectorConfig:
    k_candidates: int = 200
    # total attempts, the first one included
    max_attempts: int = 1
    reselect_pool_size: int = 20
    metric: SelectionMetric = SelectionMetric.JOINT_ADJUSTMENT
    reselect_policy: ReselectPolicy = ReselectPolicy.FARTHEST_FROM_FAILURES
    # when set, candidates are the delta-ball {d^2 <= delta} instead of k-NN
    delta: float = None
    joint_weights: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "metric", SelectionMetric(self.metric))
        object.__setattr__(self, "reselect_policy", ReselectPolicy(self.reselect_policy))
        if self.k_candidates < 1 or self.max_attempts < 1:
            raise ContractViolation("k_candidates and max_attempts must be at least 1")
        if not 1 <= self.reselect_pool_size <= self.k_candidates:
            raise ContractViolation("reselect_pool_size must lie in [1, k_candidates]")
        if self.delta is not None and self.delta < 0:
            raise ContractViolation("delta must be non-negative")


@dataclass
class Candidate:
    index: int
    q: np.ndarray
    workspace_distance: float
    dq: np.ndarray
    adjustment: float


class CandidateList:
    """Candidates in ranked order, with column arrays kept for vectorized scans."""

    def __init__(self, index, q, distance, dq, order):
        self.index = index[order]
        self.q = q[order]
        self.distance = distance[order]
        self.dq = dq[order]
        self.adjustment = np.linalg.norm(self.dq, axis=1)

    def __len__(self):
        return len(self.index)

    def __getitem__(self, i):
        return Candidate(int(self.index[i]), self.q[i], float(self.distance[i]),
                         self.dq[i], float(self.adjustment[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def rank_candidates(db, target, cfg=SelectorConfig()):
    """Fetch nearby records and order them by the configured metric.

    Ties on the primary metric are broken by the other metric, then by record
    index.
    """
    key = db.key_of(target)
    if cfg.delta is None:
        idx, d2 = db.tree.query(key, cfg.k_candidates)
    else:
        idx, d2 = db.tree.query_radius(key, cfg.delta)
    if len(idx) == 0:
        raise NoCandidatesError("no seed records near the target")
    p, R = db.record_poses(idx)
    e = batch_pose_error(p, R, target)
    dq = np.einsum("nij,nj->ni", db.jpinv[idx], e)
    adjustment = np.linalg.norm(dq, axis=1)
    distance = np.sqrt(d2)
    if cfg.metric is SelectionMetric.JOINT_ADJUSTMENT:
        order = np.lexsort((idx, distance, adjustment))
    else:
        order = np.lexsort((idx, adjustment, distance))
    return CandidateList(idx, db.q[idx], distance, dq, order)


def _is_failed(q, failed):
    return any(np.array_equal(q, f) for f in failed)


def reselect(candidates, failed, cfg=SelectorConfig()):
    """Next seed after failures, according to ``cfg.reselect_policy``.

    With the default policy the pool is the ``reselect_pool_size`` candidates
    of smallest adjustment; among those not yet tried, the one maximizing the
    minimum joint-space distance to every failed seed wins.
    """
    if not failed:
        raise ContractViolation("reselect needs at least one failed seed")
    if len(candidates) == 0:
        raise NoCandidatesError("empty candidate list")

    policy = cfg.reselect_policy
    if policy is ReselectPolicy.FARTHEST_FROM_FAILURES:
        by_adjustment = np.lexsort((candidates.index, candidates.adjustment))
        pool = by_adjustment[:cfg.reselect_pool_size]
    elif policy is ReselectPolicy.NEXT_SMALLEST_ADJUSTMENT:
        pool = np.lexsort((candidates.index, candidates.distance, candidates.adjustment))
    else:
        pool = np.lexsort((candidates.index, candidates.adjustment, candidates.distance))
    pool = np.array([i for i in pool if not _is_failed(candidates.q[i], failed)], dtype=np.intp)
    if len(pool) == 0:
        raise PoolExhaustedError("every candidate in the re-selection pool has failed")
    if policy is not ReselectPolicy.FARTHEST_FROM_FAILURES:
        return candidates[pool[0]]

    w = 1.0 if cfg.joint_weights is None else np.asarray(cfg.joint_weights, dtype=float)
    F = np.asarray(failed)
    diff = (candidates.q[pool][:, None, :] - F[None, :, :]) * w
    min_dist = np.sqrt((diff * diff).sum(axis=2)).min(axis=1)
    best = np.lexsort((candidates.index[pool], candidates.adjustment[pool], -min_dist))[0]
    return candidates[pool[best]]


class SolveStatus(str, enum.Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"


@dataclass
class SolveReport:
    status: SolveStatus
    q: np.ndarray = None
    attempts: int = 0
    iterations: int = 0
    outcomes: list = field(default_factory=list)
    wall_time: float = 0.0
    seeds: list = field(default_factory=list)

    @property
    def success(self):
        return self.status is SolveStatus.SUCCESS

    def to_dict(self):
        return {
            "status": self.status.value,
            "q": None if self.q is None else [float(x) for x in self.q],
            "attempts": self.attempts,
            "iterations": self.iterations,
            "outcomes": [{"status": o.status.value, "iterations": o.iterations,
                          "position_error": float(np.linalg.norm(o.error[:3])),
                          "rotation_error": float(np.linalg.norm(o.error[3:]))}
                         for o in self.outcomes],
            "wall_time_s": self.wall_time,
        }


def solve(model, db, target, solver_cfg=SolverConfig(), selector_cfg=SelectorConfig(), stream=0):
    """Solve IK for ``target`` using seeds drawn from ``db``."""
    start = time.perf_counter()
    report = SolveReport(SolveStatus.FAILURE)
    try:
        candidates = rank_candidates(db, target, selector_cfg)
    except NoCandidatesError:
        report.wall_time = time.perf_counter() - start
        return report

    failed = []
    seed = candidates[0]
    while True:
        outcome = iterate(model, seed.q, target, solver_cfg, stream=(stream, report.attempts))
        report.attempts += 1
        report.iterations += outcome.iterations
        report.outcomes.append(outcome)
        report.seeds.append(seed.index)
        if outcome.converged:
            report.status = SolveStatus.SUCCESS
            report.q = outcome.q
            break
        failed.append(seed.q)
        if report.attempts >= selector_cfg.max_attempts:
            break
        try:
            seed = reselect(candidates, failed, selector_cfg)
        except PoolExhaustedError:
            break
    report.wall_time = time.perf_counter() - start
    return report
