"""Ablation sweeps over one axis at a time, on a frozen target set.

The same tables are available from the command line, e.g.
    iksel sweep --model ur3 --rng-seed 1 --trials 2000 --axis ReselectAttempts --values 1 3 5 10 20

Run: python demos/04_ablation.py
"""
from iksel.bench import TrialSpec, ablation_sweep, render_report

base = TrialSpec(model="ur3", rng_seed=1, divisions="medium", trials=300)

for axis, values in [("SelectionMetric", ["JointAdjustment", "WorkspaceProximity"]),
                     ("SolverKind", ["DLS", "PINV", "PINV_RR", "CWLN", "CWPI"]),
                     ("ReselectAttempts", [1, 3, 5, 10, 20]),
                     ("DatabaseScale", ["small", "medium", "large"])]:
    rows = ablation_sweep(base, axis, values)
    print(f"== {axis}")
    print(render_report(rows, "csv", axis))
