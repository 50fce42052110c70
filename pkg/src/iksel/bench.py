"""Batch trials and ablation sweeps over random reachable IK targets.

Targets are FK images of joint configurations drawn uniformly inside the
joint limits, so every target is reachable.  Only the ``solve`` call is
timed; target generation, database construction and report I/O are not.
"""
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, replace
import enum
import hashlib
import io
import json
import logging
from pathlib import Path
import time

import numpy as np

from .errors import ContractViolation
from .kinematics import forward_kinematics, pose_error
from .modelfile import load_model
from .rotations import rotation_vector
from .seedstore import build_database, load_database
from .selector import SelectorConfig, solve
from .solvers import SolverConfig

log = logging.getLogger(__name__)

CSV_COLUMNS = ("axis_value", "success_rate_pct", "mean_ms", "std_ms", "min_ms", "max_ms",
               "trials", "rng_seed")
TIMING_FIELDS = frozenset({"mean_ms", "std_ms", "min_ms", "max_ms", "time_ms"})


class Axis(str, enum.Enum):
    DATABASE_SCALE = "DatabaseScale"
    SOLVER_KIND = "SolverKind"
    SELECTION_METRIC = "SelectionMetric"
    RESELECT_ATTEMPTS = "ReselectAttempts"


@dataclass(frozen=True)
class TrialSpec:
    model: str
    rng_seed: int
    # either a database file or a grid (preset name or per-joint divisions)
    database: str = None
    divisions: object = "medium"
    rotation_weight: float = 1.0
    trials: int = 2000
    solver: SolverConfig = field(default_factory=SolverConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    fmt: str = "json"
    output: str = None
    jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ContractViolation("trial count must be at least 1")
        if self.rng_seed is None:
            raise ContractViolation("rng_seed is mandatory")
        if self.fmt not in ("json", "csv"):
            raise ContractViolation(f"unknown output format {self.fmt!r}")
        if self.jobs < 1:
            raise ContractViolation("jobs must be at least 1")


@dataclass
class RunSummary:
    axis_value: str
    success_rate: float
    mean_ms: float
    std_ms: float
    min_ms: float
    max_ms: float
    trials: int
    rng_seed: int
    records: list = field(default_factory=list)

    def row(self):
        return {"axis_value": self.axis_value, "success_rate_pct": self.success_rate,
                "mean_ms": self.mean_ms, "std_ms": self.std_ms, "min_ms": self.min_ms,
                "max_ms": self.max_ms, "trials": self.trials, "rng_seed": self.rng_seed}

    @property
    def successes(self):
        return sum(r["status"] == "Success" for r in self.records)


def generate_targets(model, n, rng_seed):
    """``n`` reachable target poses: FK of uniform in-limit configurations."""
    if n < 1:
        raise ContractViolation("n must be at least 1")
    rng = np.random.default_rng(rng_seed)
    qs = rng.uniform(model.lower, model.upper, size=(n, model.dof))
    return [forward_kinematics(model, q) for q in qs]


def target_digest(pose):
    return hashlib.sha256(np.concatenate((pose.p, pose.R.ravel())).tobytes()).hexdigest()[:16]


_DB_CACHE = {}


def resolve_database(spec, model):
    """Load ``spec.database`` or build (and memoize) the grid database it names."""
    if spec.database is not None:
        return load_database(spec.database, model)
    divisions = spec.divisions
    if isinstance(divisions, str):
        divisions = model.scales.get(divisions) or _parse_divisions(divisions)
    key = (model.fingerprint, tuple(divisions), spec.rotation_weight, spec.solver.rel_cutoff)
    if key not in _DB_CACHE:
        _DB_CACHE.clear()  # keep at most one resident grid
        _DB_CACHE[key] = build_database(model, divisions, spec.rotation_weight,
                                        spec.solver.rel_cutoff)
    return _DB_CACHE[key]


def _parse_divisions(text):
    try:
        return tuple(int(x) for x in str(text).replace("x", ",").split(","))
    except ValueError:
        raise ContractViolation(f"unknown scale or division list {text!r}") from None


# worker-process state for parallel batches
_WORKER = {}


def _init_worker(model, db, targets, solver_cfg, selector_cfg):
    _WORKER.update(model=model, db=db, targets=targets, solver=solver_cfg, selector=selector_cfg)


def _run_trials(indices):
    return [_trial(_WORKER["model"], _WORKER["db"], _WORKER["targets"][i], i,
                   _WORKER["solver"], _WORKER["selector"]) for i in indices]


def _trial(model, db, target, i, solver_cfg, selector_cfg):
    t0 = time.perf_counter()
    report = solve(model, db, target, solver_cfg, selector_cfg, stream=i)
    elapsed = time.perf_counter() - t0
    record = {
        "trial": i,
        "target": [float(x) for x in np.concatenate((target.p, rotation_vector(target.R)))],
        "target_digest": target_digest(target),
        "status": report.status.value,
        "attempts": report.attempts,
        "iterations": report.iterations,
        "seeds": [int(s) for s in report.seeds],
        "q": None,
        "position_error": None,
        "rotation_error": None,
        "time_ms": elapsed * 1e3,
    }
    if report.success:
        # replay FK on the returned joints rather than trusting the solver's error
        e = pose_error(forward_kinematics(model, report.q), target)
        record.update(q=[float(x) for x in report.q],
                      position_error=float(np.linalg.norm(e[:3])),
                      rotation_error=float(np.linalg.norm(e[3:])))
    return record


def summarize(records, axis_value, rng_seed):
    times = np.array([r["time_ms"] for r in records])
    n = len(records)
    ok = sum(r["status"] == "Success" for r in records)
    return RunSummary(axis_value=str(axis_value), success_rate=100.0 * ok / n,
                      mean_ms=float(times.mean()), std_ms=float(times.std()),
                      min_ms=float(times.min()), max_ms=float(times.max()),
                      trials=n, rng_seed=rng_seed, records=records)


def _execute(spec, model, db, targets, axis_value):
    if spec.jobs == 1:
        records = [_trial(model, db, t, i, spec.solver, spec.selector) for i, t in enumerate(targets)]
    else:
        chunks = np.array_split(np.arange(len(targets)), spec.jobs * 4)
        with ProcessPoolExecutor(spec.jobs, initializer=_init_worker,
                                 initargs=(model, db, targets, spec.solver, spec.selector)) as ex:
            records = [r for part in ex.map(_run_trials, [c.tolist() for c in chunks]) for r in part]
    return summarize(records, axis_value, spec.rng_seed)


def run_batch(spec, model=None, db=None, targets=None, axis_value="-"):
    """Run ``spec.trials`` solves and return (and optionally write) the summary.

    ``model``, ``db`` and ``targets`` may be passed in to reuse resident
    objects; otherwise they are derived from ``spec``.  A database built for a
    different model is rejected before any trial runs.
    """
    model = model if model is not None else load_model(spec.model)
    db = db if db is not None else resolve_database(spec, model)
    db.check_model(model)
    if targets is None:
        targets = generate_targets(model, spec.trials, spec.rng_seed)
    summary = _execute(spec, model, db, targets, axis_value)
    log.info("%s: %.2f%% success, mean %.3f ms", axis_value, summary.success_rate, summary.mean_ms)
    if spec.output:
        write_report([summary], spec.output, spec.fmt, axis="none")
    return summary


def _apply_axis(spec, axis, value):
    if axis is Axis.DATABASE_SCALE:
        return replace(spec, database=None, divisions=str(value))
    if axis is Axis.SOLVER_KIND:
        return replace(spec, solver=replace(spec.solver, kind=str(value), enforce_monotone=None))
    if axis is Axis.SELECTION_METRIC:
        return replace(spec, selector=replace(spec.selector, metric=str(value)))
    if axis is Axis.RESELECT_ATTEMPTS:
        return replace(spec, selector=replace(spec.selector, max_attempts=int(value)))
    raise ContractViolation(f"unknown axis {axis!r}")


def ablation_sweep(base, axis, values, model=None):
    """One :func:`run_batch` per axis value, all on the same frozen target set."""
    axis = Axis(axis)
    values = list(values)
    if not values:
        raise ContractViolation("a sweep needs at least one axis value")
    model = model if model is not None else load_model(base.model)
    targets = generate_targets(model, base.trials, base.rng_seed)
    rows = []
    for value in values:
        spec = _apply_axis(base, axis, value)
        db = resolve_database(spec, model)
        rows.append(run_batch(replace(spec, output=None), model=model, db=db, targets=targets,
                              axis_value=str(value)))
    if base.output:
        write_report(rows, base.output, base.fmt, axis=axis.value)
    return rows


def render_report(rows, fmt, axis="none"):
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow(r.row())
        return buf.getvalue()
    doc = {"axis": axis, "rows": [dict(r.row(), trials_detail=r.records) for r in rows]}
    return json.dumps(doc, indent=1) + "\n"


def write_report(rows, path, fmt, axis="none"):
    Path(path).write_text(render_report(rows, fmt, axis))


def strip_timing(obj):
    """Copy of a parsed report with every timing field removed."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_FIELDS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj
