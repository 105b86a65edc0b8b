"""Multiple angles between two convex cones and their similarity.

Alternating projections find the closest pair of unit vectors of the two
cones; deflating both cones against the found witnesses gives the next angle.

Run: python3 demos/cone_angles.py
"""

import numpy as np

from mutualcone import AlsConfig, ConvexCone, angles_between, similarity

rng = np.random.default_rng(3)
shared = rng.random(6)
c1 = ConvexCone.from_generators(np.column_stack([shared, rng.random(6), rng.random(6)]))
c2 = ConvexCone.from_generators(np.column_stack([shared + 0.1 * rng.random(6), rng.random(6)]))

spec = angles_between(c1, c2, AlsConfig(seed=0))
print("angles (deg, ascending):", np.round(np.degrees(spec.angles), 3))
print("first angle found by the search (deg):", round(float(np.degrees(spec.first)), 3))
print("similarity:", round(similarity(spec), 6))
for (p, q), th in zip(spec.pairs, spec.angles):
    print(f"  cos theta = {np.cos(th):.6f}   p.q = {p @ q:.6f}")

# sanity: a cone against itself, and against an orthogonal ray
print("sim(C, C) =", similarity(angles_between(c1, c1)))
e = np.eye(7)
print("sim(e1, e2) =", similarity(angles_between(ConvexCone(e[:, 0]), ConvexCone(e[:, 1]))))
