"""Canonical angles between subspaces and the generalized difference subspace.

These are the linear baselines (MSM and CMSM) the cone methods are
compared against.

Run: python3 demos/subspace_baselines.py
"""

import numpy as np

from mutualcone import Subspace, canonical_angles
from mutualcone import subspace

rng = np.random.default_rng(4)
a = Subspace.span(rng.standard_normal((10, 3)))
b = Subspace.span(rng.standard_normal((10, 2)))
spec = canonical_angles(a, b)
print("canonical angles (deg):", np.round(np.degrees(spec.angles), 4))

# cross-check: squared cosines are the leading eigenvalues of P_a P_b
ev = np.sort(np.linalg.eigvals(a.projector @ b.projector).real)[::-1][:2]
print("cos^2:", np.round(np.cos(spec.angles) ** 2, 10), " eig(P_a P_b):", np.round(ev, 10))
print("MSM similarity:", subspace.similarity(spec))

# GDS: drop the directions all class subspaces share
classes = [Subspace.span(rng.random((10, 2))) for _ in range(3)]
g = subspace.gds(classes, 4)
projected = [subspace.project_subspace(g, s) for s in classes]
print("similarity before / after GDS projection (classes 0 vs 1):",
      round(subspace.similarity(canonical_angles(classes[0], classes[1])), 4),
      round(subspace.similarity(canonical_angles(projected[0], projected[1])), 4))
