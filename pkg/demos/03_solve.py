"""Solve IK with database seeds, ranked by predicted joint adjustment.

Run: python demos/03_solve.py
"""
import numpy as np

from iksel import (SelectorConfig, SolverConfig, build_database, forward_kinematics, load_model,
                   pose_error, rank_candidates, solve)
from iksel.bench import generate_targets

np.set_printoptions(precision=4, suppress=True)

ur3 = load_model("ur3")
db = build_database(ur3, "medium")
target = generate_targets(ur3, 1, rng_seed=7)[0]

# The same 200 nearest records, ordered two ways.
by_adjustment = rank_candidates(db, target, SelectorConfig(metric="JointAdjustment"))
by_distance = rank_candidates(db, target, SelectorConfig(metric="WorkspaceProximity"))
print("best seed by adjustment:", by_adjustment[0].index, "|dq| =", round(by_adjustment[0].adjustment, 4))
print("best seed by distance:  ", by_distance[0].index, "d =", round(by_distance[0].workspace_distance, 4))

# Up to five attempts; after a failure the next seed is the pool member farthest
# (in joint space) from every seed that already failed.
report = solve(ur3, db, target, SolverConfig(kind="DLS"), SelectorConfig(max_attempts=5))
print("\nstatus", report.status.value, "after", report.attempts, "attempt(s),",
      report.iterations, "iterations in total")
for seed, outcome in zip(report.seeds, report.outcomes):
    print(f"  seed {seed:6d}: {outcome.status.value}")
if report.success:
    e = pose_error(forward_kinematics(ur3, report.q), target)
    print("q =", report.q)
    print(f"replayed error: {np.linalg.norm(e[:3]):.2e} m, {np.linalg.norm(e[3:]):.2e} rad")

# Over a batch, more attempts help.
targets = generate_targets(ur3, 200, rng_seed=8)
for attempts in (1, 5):
    ok = sum(solve(ur3, db, t, selector_cfg=SelectorConfig(max_attempts=attempts), stream=i).success
             for i, t in enumerate(targets))
    print(f"#ReA{attempts}: {ok / 2:.1f}% of 200 targets")
