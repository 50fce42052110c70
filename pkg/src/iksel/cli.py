"""Command-line harness: ``iksel build | solve | bench | sweep``.

Every flag can also be supplied through an environment variable named
``IKSEL_<FLAG>`` (upper case, dashes as underscores), e.g. ``IKSEL_RNG_SEED``.
Command-line values win over the environment.

Exit codes: 0 success, 2 usage error, 3 incompatible database, 4 I/O or
format error.
"""
import argparse
import json
import logging
import os
import sys

from . import bench
from .errors import (ContractViolation, DatabaseFormatError, DatabaseTooLargeError,
                     IncompatibleModelError, ModelFileError)
from .kinematics import pose_from_vector
from .modelfile import load_model
from .seedstore import build_database, save_database
from .selector import ReselectPolicy, SelectionMetric, SelectorConfig, solve
from .solvers import SolverConfig, SolverKind

EXIT_OK, EXIT_USAGE, EXIT_INCOMPATIBLE, EXIT_IO = 0, 2, 3, 4
ENV_PREFIX = "IKSEL_"


def _numbers(text):
    return [float(x) for x in text.replace(",", " ").split()]


def _add_model(p):
    p.add_argument("--model", required=True,
                   help="model file, or a bundled model name (planar_2r, ur3, redundant_7r)")


def _add_grid(p, default_scale=None):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--scale", default=default_scale,
                   help="grid preset declared by the model file (small, medium, large)")
    g.add_argument("--divisions", help="comma-separated per-joint division counts")
    p.add_argument("--rotation-weight", type=float, default=1.0)


def _add_solver(p):
    p.add_argument("--solver", choices=[k.value for k in SolverKind], default="DLS")
    p.add_argument("--max-iterations", type=int, default=7)
    p.add_argument("--position-tolerance", type=float, default=1e-6)
    p.add_argument("--rotation-tolerance", type=float, default=1e-6)
    p.add_argument("--damping", type=float, default=SolverConfig.damping)
    p.add_argument("--rel-cutoff", type=float, default=1e-4)
    p.add_argument("--solver-seed", type=int, default=0, help="random-restart seed (PINV_RR)")
    p.add_argument("--k", type=int, default=200, help="nearest records fetched per query")
    p.add_argument("--attempts", type=int, default=1, help="total attempts, first one included")
    p.add_argument("--pool", type=int, default=20, help="re-selection pool size")
    p.add_argument("--metric", choices=[m.value for m in SelectionMetric],
                   default=SelectionMetric.JOINT_ADJUSTMENT.value)
    p.add_argument("--policy", choices=[m.value for m in ReselectPolicy],
                   default=ReselectPolicy.FARTHEST_FROM_FAILURES.value)
    p.add_argument("--delta", type=float, help="use the squared-distance ball instead of k-NN")


def _add_bench(p):
    _add_model(p)
    p.add_argument("--db", help="database file (otherwise built from --scale/--divisions)")
    _add_grid(p, default_scale="medium")
    _add_solver(p)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--rng-seed", type=int, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", help="report path (default: print to stdout)")
    p.add_argument("--jobs", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="iksel", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="sample a joint grid and write a seed database")
    _add_model(p)
    _add_grid(p)
    p.add_argument("--rel-cutoff", type=float, default=1e-4)
    p.add_argument("--output", required=True)

    p = sub.add_parser("solve", help="solve one IK query and print the report as JSON")
    _add_model(p)
    p.add_argument("--db", help="database file (otherwise built from --scale/--divisions)")
    _add_grid(p, default_scale="medium")
    _add_solver(p)
    p.add_argument("--target", type=float, nargs="+", required=True,
                   help="6 numbers (position + rotation vector) or 12 (position + row-major R)")

    p = sub.add_parser("bench", help="run a batch of random reachable targets")
    _add_bench(p)

    p = sub.add_parser("sweep", help="run one batch per value of an ablation axis")
    _add_bench(p)
    p.add_argument("--axis", required=True, choices=[a.value for a in bench.Axis])
    p.add_argument("--values", nargs="+", required=True)
    return parser


def _apply_env(parser, environ):
    """Turn IKSEL_* variables into argument defaults, recursively for subparsers."""
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sp in action.choices.values():
                _apply_env(sp, environ)
            continue
        if not action.option_strings or action.dest in ("help",):
            continue
        value = environ.get(ENV_PREFIX + action.dest.upper())
        if value is None:
            continue
        if action.nargs in ("+", "*"):
            items = value.replace(",", " ").split()
            action.default = [action.type(v) if action.type else v for v in items]
        elif isinstance(action, argparse._StoreTrueAction):
            action.default = value.lower() in ("1", "true", "yes")
        else:
            action.default = action.type(value) if action.type else value
        action.required = False


def _solver_config(a):
    return SolverConfig(kind=a.solver, max_iterations=a.max_iterations,
                        position_tolerance=a.position_tolerance,
                        rotation_tolerance=a.rotation_tolerance, damping=a.damping,
                        rel_cutoff=a.rel_cutoff, rotation_weight=a.rotation_weight,
                        rng_seed=a.solver_seed)


def _selector_config(a):
    return SelectorConfig(k_candidates=a.k, max_attempts=a.attempts, reselect_pool_size=a.pool,
                          metric=a.metric, reselect_policy=a.policy, delta=a.delta)


def _grid(a):
    if a.divisions:
        return bench._parse_divisions(a.divisions)
    return a.scale


def _trial_spec(a):
    return bench.TrialSpec(model=a.model, rng_seed=a.rng_seed, database=a.db, divisions=_grid(a),
                           rotation_weight=a.rotation_weight, trials=a.trials,
                           solver=_solver_config(a), selector=_selector_config(a),
                           fmt=a.format, output=a.output, jobs=a.jobs)


def _run(a):
    if a.command == "build":
        if _grid(a) is None:
            raise ContractViolation("build needs --scale or --divisions")
        model = load_model(a.model)
        db = build_database(model, _grid(a), a.rotation_weight, a.rel_cutoff)
        save_database(db, a.output)
        print(json.dumps({"records": len(db), "divisions": list(db.divisions), "output": a.output}))
        return
    if a.command == "solve":
        model = load_model(a.model)
        spec = bench.TrialSpec(model=a.model, rng_seed=0, database=a.db, divisions=_grid(a),
                               rotation_weight=a.rotation_weight, solver=_solver_config(a))
        db = bench.resolve_database(spec, model)
        db.check_model(model)
        report = solve(model, db, pose_from_vector(a.target), _solver_config(a), _selector_config(a))
        print(json.dumps(report.to_dict(), indent=1))
        return
    spec = _trial_spec(a)
    if a.command == "bench":
        rows = [bench.run_batch(spec)]
        axis = "none"
    else:
        rows = bench.ablation_sweep(spec, a.axis, a.values)
        axis = a.axis
    if not a.output:
        sys.stdout.write(bench.render_report(rows, a.format, axis))


def main(argv=None, environ=None):
    parser = build_parser()
    _apply_env(parser, os.environ if environ is None else environ)
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(a)
    except IncompatibleModelError as exc:
        print(f"iksel: incompatible database: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (DatabaseFormatError, ModelFileError, OSError) as exc:
        print(f"iksel: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ContractViolation, DatabaseTooLargeError, ValueError) as exc:
        print(f"iksel: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
