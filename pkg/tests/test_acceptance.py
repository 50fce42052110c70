"""Acceptance criteria 1-11 at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal
summary.  The benchmark criteria share one frozen set of 2,000 UR3 targets and
resident Small/Medium/Large databases; runs are cached so that e.g. the
convergence-quality check covers every batch executed here.
"""
import json
import time

import numpy as np
import pytest

from iksel import (SelectorConfig, SolverConfig, build_database, forward_kinematics, jacobian,
                   load_model, pose_error, query_k_nearest, query_within, regularized_pinv)
from iksel.bench import TrialSpec, ablation_sweep, generate_targets, render_report, run_batch, strip_timing

from conftest import ACCEPTANCE_LINES, brute_force
from test_kinematics import MatrixOracle, fd_jacobian

TARGET_SEED = 2024
N_TARGETS = 2000
REA_VALUES = (1, 3, 5, 10, 20)
SUITE_BUDGET_S = 15 * 60


def report(name, ok, detail):
    ACCEPTANCE_LINES.append((name, ok, detail))
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


class Bench:
    """Resident model, databases and frozen targets, with memoized runs."""

    def __init__(self):
        self.model = load_model("ur3")
        self.targets = generate_targets(self.model, N_TARGETS, TARGET_SEED)
        self.dbs = {s: build_database(self.model, s) for s in ("small", "medium", "large")}
        self.runs = {}
        self.sweeps = []

    def spec(self, scale="medium", kind="DLS", attempts=1, metric="JointAdjustment"):
        return TrialSpec(model="ur3", rng_seed=TARGET_SEED, divisions=scale, trials=N_TARGETS,
                         solver=SolverConfig(kind=kind),
                         selector=SelectorConfig(max_attempts=attempts, metric=metric))

    def run(self, scale="medium", kind="DLS", attempts=1, metric="JointAdjustment"):
        key = (scale, kind, attempts, metric)
        if key not in self.runs:
            self.runs[key] = run_batch(self.spec(*key), model=self.model, db=self.dbs[scale],
                                       targets=self.targets, axis_value="/".join(map(str, key)))
        return self.runs[key]

    def rea_sweep(self):
        rows = ablation_sweep(self.spec(), "ReselectAttempts", REA_VALUES, model=self.model)
        self.sweeps.append(rows)
        return rows


@pytest.fixture(scope="module", autouse=True)
def suite_clock():
    return time.perf_counter()


@pytest.fixture(scope="module")
def bench():
    return Bench()


def rates(rows):
    return [round(r.success_rate, 2) for r in rows]


# -- criteria 1-4: numerical core -------------------------------------------

def test_c01_fk_oracle_equivalence():
    worst, elapsed = 0.0, 0.0
    rng = np.random.default_rng(101)
    for name in ("planar_2r", "ur3"):
        model, oracle = load_model(name), MatrixOracle(name)
        qs = rng.uniform(model.lower, model.upper, size=(1000, model.dof))
        t0 = time.perf_counter()
        poses = [forward_kinematics(model, q) for q in qs]
        elapsed = max(elapsed, time.perf_counter() - t0)
        worst = max(worst, max(np.abs(p.as_matrix() - oracle.fk(q)).max() for q, p in zip(qs, poses)))
    report("C1 kinematics oracle", worst <= 1e-12 and elapsed < 5.0,
           f"max |FK - oracle| = {worst:.1e} (<= 1e-12), slowest model {elapsed:.2f} s (< 5 s)")


def test_c02_jacobian_finite_difference():
    worst = 0.0
    rng = np.random.default_rng(102)
    for name in ("planar_2r", "ur3", "redundant_7r"):
        model = load_model(name)
        for q in rng.uniform(model.lower, model.upper, size=(100, model.dof)):
            J, J_fd = jacobian(model, q), fd_jacobian(model, q)
            scale = np.maximum(np.linalg.norm(J, axis=0), 1.0)
            worst = max(worst, (np.linalg.norm(J - J_fd, axis=0) / scale).max())
    report("C2 Jacobian check", worst <= 1e-5, f"max column relative error {worst:.1e} (<= 1e-5)")


def test_c03_pseudo_inverse():
    model = load_model("ur3")
    rng = np.random.default_rng(103)
    well, ill = [], []
    while len(well) < 100:
        J = jacobian(model, rng.uniform(model.lower, model.upper))
        if np.linalg.cond(J) < 1e3:
            well.append(J)
    for i in range(100):
        q = rng.uniform(model.lower, model.upper)
        q[[2, 4][i % 2]] = 10.0 ** rng.uniform(-12, -6)  # elbow or wrist singularity
        ill.append(jacobian(model, q) * 10.0 ** rng.uniform(-2, 2))
    mp = 0.0
    for J in well:
        P = regularized_pinv(J, 1e-4)
        mp = max(mp, np.abs(J @ P @ J - J).max(), np.abs(P @ J @ P - P).max(),
                 np.abs((J @ P).T - J @ P).max(), np.abs((P @ J).T - P @ J).max())
    slack = min(1.0 / (1e-4 * np.linalg.norm(J, 2)) + 1e-9 - np.linalg.norm(regularized_pinv(J, 1e-4), 2)
                for J in ill)
    conds = [np.linalg.cond(J) for J in ill]
    report("C3 pseudo-inverse", mp <= 1e-9 and slack >= 0.0,
           f"Moore-Penrose residual {mp:.1e} (<= 1e-9); truncation bound slack {slack:.3g} >= 0 "
           f"on 100 cases with cond >= {min(conds):.1e}")


def test_c04_kdtree_exactness():
    model = load_model("ur3")
    db = build_database(model, "medium")
    rng = np.random.default_rng(104)
    targets = generate_targets(model, 1000, 104)
    t0 = time.perf_counter()
    mismatches = 0
    for target in targets:
        x = db.key_of(target)
        want_idx, want_d2 = brute_force(db.keys, x)
        k = int(rng.integers(1, 201))
        got = query_k_nearest(db, target, k)
        mismatches += [r.index for r, _ in got] != list(want_idx[:k])
        mismatches += not np.array_equal([d for _, d in got], np.sqrt(want_d2[:k]))
        delta = float(np.median(want_d2[rng.choice(len(db), 100, replace=False)])) * 0.05
        got = query_within(db, target, delta)
        mismatches += [r.index for r, _ in got] != list(want_idx[want_d2 <= delta])
    elapsed = time.perf_counter() - t0
    report("C4 KDTree exactness", len(db) == 40320 and mismatches == 0 and elapsed < 30.0,
           f"{len(db)} records, {mismatches} mismatches over 1000 k-NN + 1000 radius queries, "
           f"{elapsed:.1f} s (< 30 s)")


# -- criteria 5-11: benchmark behaviour --------------------------------------

def test_c05_selection_metric_gap(bench):
    ja = bench.run(metric="JointAdjustment").success_rate
    wp = bench.run(metric="WorkspaceProximity").success_rate
    report("C5 selection-metric gap", ja - wp >= 5.0,
           f"JointAdjustment {ja:.2f}% vs WorkspaceProximity {wp:.2f}% (gap {ja - wp:.2f} >= 5)")


def test_c06_reselection_monotonicity(bench):
    rows = bench.rea_sweep()
    r = rates(rows)
    monotone = all(b >= a for a, b in zip(r, r[1:]))
    violations = 0
    for short, long in zip(rows, rows[1:]):
        for a, b in zip(short.records, long.records):
            if a["status"] == "Success":
                violations += b["status"] != "Success" or b["q"] != a["q"]
            violations += b["seeds"][:len(a["seeds"])] != a["seeds"]
    ok = monotone and r[-1] - r[0] >= 5.0 and violations == 0
    report("C6 re-selection monotonicity", ok,
           f"#ReA {list(REA_VALUES)} -> {r}; #ReA20 - #ReA1 = {r[-1] - r[0]:.2f} (>= 5); "
           f"{violations} prefix-determinism violations")


def test_c07_database_scale_trend(bench):
    r = [bench.run(scale=s).success_rate for s in ("small", "medium", "large")]
    ok = all(b >= a - 1.0 for a, b in zip(r, r[1:]))
    report("C7 database-scale trend", ok,
           "Small/Medium/Large -> " + " / ".join(f"{x:.2f}%" for x in r) + " (non-decreasing within 1 point)")


def test_c09_solver_variants(bench):
    dls = bench.run(kind="DLS").success_rate
    cwln = bench.run(kind="CWLN").success_rate
    pinv = bench.run(kind="PINV").success_rate
    ok = cwln >= dls and abs(pinv - dls) <= 1.0
    report("C9 solver-variant sanity", ok,
           f"DLS {dls:.2f}%, CWLN {cwln:.2f}% (>= DLS), PINV {pinv:.2f}% (|PINV - DLS| = "
           f"{abs(pinv - dls):.2f} <= 1)")


def test_paper_example_large_rea1_band(bench):
    rate = bench.run(scale="large").success_rate
    report("Large #ReA1 band", abs(rate - 87.19) <= 10.0, f"{rate:.2f}% (87.19 +/- 10)")


def test_paper_example_large_rea5(bench):
    rate = bench.run(scale="large", attempts=5).success_rate
    report("Large #ReA5 band", rate >= 87.80 - 10.0, f"{rate:.2f}% (>= 87.80 - 10)")


def test_c11_determinism(bench):
    first = bench.sweeps[0] if bench.sweeps else bench.rea_sweep()
    second = bench.rea_sweep()
    a = strip_timing(json.loads(render_report(first, "json", "ReselectAttempts")))
    b = strip_timing(json.loads(render_report(second, "json", "ReselectAttempts")))
    csv_a = [strip_timing(r.row()) for r in first]
    csv_b = [strip_timing(r.row()) for r in second]
    report("C11 determinism", a == b and csv_a == csv_b,
           f"two #ReA sweeps ({len(first)} rows x {N_TARGETS} trials) identical modulo timing")


def test_c08_convergence_quality(bench):
    model = bench.model
    checked = bad = 0
    batches = list(bench.runs.values()) + [r for rows in bench.sweeps for r in rows]
    for summary in batches:
        for rec, target in zip(summary.records, bench.targets):
            if rec["status"] != "Success":
                continue
            e = pose_error(forward_kinematics(model, rec["q"]), target)
            checked += 1
            bad += np.linalg.norm(e[:3]) > 1e-6 or np.linalg.norm(e[3:]) > 1e-6
    report("C8 convergence quality", checked > 0 and bad == 0,
           f"{checked} successes over {len(batches)} batches re-verified by FK, {bad} exceed 1e-6")


def test_c10_performance_envelope(bench, suite_clock):
    summary = bench.run(scale="large")
    times = np.array([r["time_ms"] for r in summary.records])
    suite = time.perf_counter() - suite_clock
    ok = times.mean() <= 10.0 and times.max() <= 100.0 and suite < SUITE_BUDGET_S
    report("C10 performance envelope", ok,
           f"Large DLS #ReA1 --jobs 1: mean {times.mean():.2f} ms (<= 10), max {times.max():.2f} ms "
           f"(<= 100); acceptance suite {suite:.0f} s (< {SUITE_BUDGET_S} s)")
