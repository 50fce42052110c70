"""Forward kinematics, the geometric Jacobian and the truncated pseudo-inverse.

Run: python demos/01_kinematics.py
"""
import numpy as np

from iksel import forward_kinematics, jacobian, load_model, pose_error, regularized_pinv

np.set_printoptions(precision=4, suppress=True)

# The planar 2R arm is small enough to check by hand: unit links, both axes +z.
planar = load_model("planar_2r")
for q in ([0.0, 0.0], [np.pi / 2, 0.0], [0.3, 0.4]):
    pose = forward_kinematics(planar, q)
    print(f"2R q={q} -> p={pose.p}")

# The UR3-class arm: pose and Jacobian at an arbitrary configuration.
ur3 = load_model("ur3")
q = np.array([0.2, -1.0, 1.2, -0.3, 0.8, 0.1])
pose = forward_kinematics(ur3, q)
J = jacobian(ur3, q)
print("\nUR3 tool position", pose.p)
print("Jacobian singular values", np.linalg.svd(J, compute_uv=False))

# One linearized step: the seed's pose error mapped through J+ predicts the
# joint change needed to reach a nearby target.  Its norm is the ranking metric.
target = forward_kinematics(ur3, q + 0.05)
e = pose_error(pose, target)
dq = regularized_pinv(J) @ e
print("\npose error", e)
print("predicted dq", dq, "(true dq is 0.05 on every joint)")

# Near the wrist singularity the small singular value gets truncated instead of
# blowing up the inverse.
q_sing = q.copy()
q_sing[4] = 1e-9
J_sing = jacobian(ur3, q_sing)
print("\nsingular config: |J+| =", np.linalg.norm(regularized_pinv(J_sing), 2),
      "bound", 1 / (1e-4 * np.linalg.norm(J_sing, 2)))
