"""Build the discriminant space that separates several class cones.

Matched vectors across the cones give the between-class scatter, generator
spread gives the within-class scatter, and their generalized eigenvectors
span the discriminant space.

Run: python3 demos/discriminant_space.py
"""

import numpy as np

from mutualcone import ConvexCone
from mutualcone import discriminant

# two rays: the discriminant direction is their difference
e1, e2 = ConvexCone(np.array([1.0, 0.0])), ConvexCone(np.array([0.0, 1.0]))
space = discriminant.build([e1, e2], 1)
print("2-class discriminant basis:", np.round(space.basis[:, 0], 6))

rng = np.random.default_rng(5)
common = rng.random((8, 1))
cones = [ConvexCone.from_generators(np.hstack([common, rng.random((8, 2))])) for _ in range(3)]
cv = discriminant.common_vectors(cones)
pair = discriminant.scatter(cones, cv)
space = discriminant.solve_space(pair, 4)
print("common-vector steps:", cv.steps, " eigenvalues:", np.round(space.eigenvalues, 4))
print("regularization (trace(S_w)/d):", round(space.regularization, 6))

# a direction every class shares carries no class information
u = common[:, 0] / np.linalg.norm(common)
r = rng.standard_normal(8)
print("norm kept on the space: shared direction", round(float(np.linalg.norm(space.basis.T @ u)), 4),
      " random direction", round(float(np.linalg.norm(space.basis.T @ r / np.linalg.norm(r))), 4))
