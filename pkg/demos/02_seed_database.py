"""Build a seed database, save it, reload it and query it.

Run: python demos/02_seed_database.py
"""
from pathlib import Path
import tempfile
import time

from iksel import build_database, forward_kinematics, load_model, load_database, save_database
from iksel import query_k_nearest, query_within

ur3 = load_model("ur3")
print("scale presets:", ur3.scales)

t0 = time.perf_counter()
db = build_database(ur3, "medium")
print(f"built {len(db)} records in {time.perf_counter() - t0:.2f} s, divisions {db.divisions}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "ur3_medium.db"
    save_database(db, path)
    print(f"saved {path.stat().st_size / 1e6:.1f} MB")
    db = load_database(path, ur3)  # checks magic, model fingerprint and checksum

# A target taken from a stored record is an exact hit.
record = db.record(1234)
target = forward_kinematics(ur3, record.q)
hits = query_k_nearest(db, target, 5)
for rec, dist in hits:
    print(f"record {rec.index:6d}  distance {dist:.4f}")

# The delta-ball query returns everything within a squared key distance.
ball = query_within(db, target, 0.05)
print(f"{len(ball)} records within squared distance 0.05")
