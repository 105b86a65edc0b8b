"""Fit a class cone to a bag of non-negative features with NMF.

The generators found by NMF are the cone's edges.  Exact low-rank data is
reproduced to round-off, although the factors themselves are not unique.

Run: python3 demos/nmf_cone_fitting.py
"""

import numpy as np

from mutualcone import ConvexCone, NmfConfig, factorize

rng = np.random.default_rng(1)
true_basis = rng.random((8, 3))
features = true_basis @ rng.random((3, 40))

res = factorize(features, NmfConfig(rank=3, restarts=5, seed=0))
print("objective ||F - BW||:", res.objective)
print("winning restart:", res.restart, "of", len(res.all_traces), "run")
print("objective trace (first 5):", [f"{v:.3e}" for v in res.trace[:5]])

# every feature vector lies in the fitted cone
cone = ConvexCone.from_generators(res.basis)
proj, _ = cone.project_many(features)
print("largest distance from a feature to the cone:", np.linalg.norm(features - proj, axis=0).max())
