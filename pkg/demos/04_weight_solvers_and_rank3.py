#!/usr/bin/env python3
"""Integer-weight feasibility, frame gauges, doubling, and rank three.

Walks the constructive toolbox: the parabolic weight solver on an
upper-triangular representation, the permutation/triangular-gauge frame
solver for a prescribed splitting type, the double-rank embedding with
its cyclic eigenvector, and the partial rank-three decision.
"""

import numpy as np

from logconn import (
    MatrixSeries,
    Representation,
    SplittingType,
    bq_frame,
    cyclic_weight_plan,
    double_rank_embedding,
    rank3_decide,
    solve_weights_parabolic,
    splitting_bound_check,
)

rng = np.random.default_rng(3)

# --- upper-triangular monodromy: exact integer weights
a, b = np.exp(0.31j), np.exp(1.7j)
g1 = np.diag([a, b, a, b]) + 0.2 * np.triu(rng.normal(size=(4, 4)), 1)
g2 = np.diag([b, a, b, a]) + 0.2 * np.triu(rng.normal(size=(4, 4)), 1)
g3 = np.linalg.inv(g1 @ g2)
rep = Representation([0.0, 1.0, 2.0], [g1, g2, g3], tol=1e-7)
family = solve_weights_parabolic(rep, mode="strict-a")
print("integer weights per puncture (rows) and index (columns):")
for row in family.phi:
    print("  ", row)
print("per-column equalities hold:", family.satisfies_equalities)

# --- splitting bounds: two punctures force constant type
print("\nn=2 bound on splitting type (1,0):",
      "violated" if not splitting_bound_check(SplittingType((1, 0)), 2, 2).gaps_ok else "ok")

# --- frame solver: permutation + unit-triangular polynomial gauge
q = MatrixSeries(rng.normal(size=(4, 3, 3)) + 1j * rng.normal(size=(4, 3, 3)))
frame = bq_frame(SplittingType((2, 1, 0)), q)
print("\nframe solver: perm =", frame.perm, " divisibility residual =", f"{frame.residual:.2e}")
print("gauge b(z) degree bounds met; b(0) =\n", np.round(frame.b.coeffs[0], 4))

# --- weight plan from a cyclic eigenvector
g1 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
g2 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
irr = Representation([0.0, 1.0, 2.0], [g1, g2, np.linalg.inv(g1 @ g2)])
_, eigvecs = np.linalg.eig(irr.matrices[0])
vec = eigvecs[:, 0]
plan = cyclic_weight_plan(irr, 0, vec, [0, 0, 0])
print("\ncyclic weight plan: degree", plan.degree, " verdict", plan.verdict.value,
      " weights at the marked puncture:", plan.bundle.flags[0].weights)

# --- double the rank, gain a cyclic eigenvector
doubled = double_rank_embedding(irr)
print("doubled representation rank:", doubled.rank)

# --- rank-three decisions
print("\nrank-3 decisions:")
print("  irreducible sample:", rank3_decide(irr).verdict.value, "/", rank3_decide(irr).certificate)
s = rng.normal(size=(3, 3))
gj = s @ np.diag([1.0, 1.0, 2.0]) @ np.linalg.inv(s)
two_block = Representation([0.0, 1.0], [gj, np.linalg.inv(gj)])
print("  two Jordan blocks:  ", rank3_decide(two_block).verdict.value,
      "/", rank3_decide(two_block).certificate)
u1 = np.array([[1.0, 1, 0], [0, 1, 1], [0, 0, 1]])
u2 = np.array([[1.0, 2, 0.5], [0, 1, 2], [0, 0, 1]])
red = Representation([0.0, 1.0, 2.0], [u1, u2, np.linalg.inv(u1 @ u2)])
print("  reducible unipotent:", rank3_decide(red).verdict.value, "/", rank3_decide(red).certificate)
