"""Project vectors onto a convex cone with non-negative least squares.

Run: python3 demos/nnls_and_projection.py
"""

import numpy as np

from mutualcone import ConvexCone, nnls
from mutualcone.cone import angle_to_vector, project

# a 2-generator cone in 3-D: the quarter plane spanned by e1 and e2
c = ConvexCone.from_generators(np.eye(3)[:, :2])

for x in ([2.0, 3.0, 0.0], [-1.0, 5.0, 0.0], [1.0, 1.0, 1.0]):
    x = np.array(x)
    p, w = project(c, x)
    print(f"x = {x}  ->  projection {p}, weights {w}")

# the angle between a vector and the cone comes from its projection
x = np.ones(3) / np.sqrt(3)
print("angle to (1,1,1)/sqrt(3):", angle_to_vector(c, x), "expected", np.arccos(np.sqrt(2 / 3)))

# the solver on its own, with a KKT check
rng = np.random.default_rng(0)
b, x = rng.standard_normal((6, 4)), rng.standard_normal(6)
sol = nnls.solve(b, x)
grad = b.T @ (b @ sol.coefficients - x)
print("coefficients", np.round(sol.coefficients, 4), "residual", round(sol.residual_norm, 6))
print("gradient on the passive set (should be ~0):", np.abs(grad[sol.coefficients > 0]).max(initial=0.0))
