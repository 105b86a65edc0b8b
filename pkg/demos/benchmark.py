"""Compare MCM, CMCM, MSM and CMSM on overlapping synthetic classes.

Run: python3 demos/benchmark.py   (about a minute)
"""

import numpy as np

from mutualcone import Hyperparameters, evaluate, generate_synthetic, train
from mutualcone.data import SyntheticSpec

methods = {"mcm": None, "cmcm": 8, "msm": None, "cmsm": 9}
errors = {m: [] for m in methods}
for seed in range(10):
    spec = SyntheticSpec(classes=5, sets_per_class=4, vectors_per_set=6, dim=10, rays_per_class=2,
                         noise_sigma=0.08, overlap=0.4, seed=seed)
    sets = list(generate_synthetic(spec))
    tr = [s for s in sets if int(s.set_id.split("_s")[1]) < 2]
    te = [s for s in sets if int(s.set_id.split("_s")[1]) >= 2]
    for m, ndim in methods.items():
        model = train(m, tr, Hyperparameters(class_rank=2, query_rank=2, ndim=ndim), seed=seed)
        errors[m].append(evaluate(model, te).error_rate)

print("mean error rate over 10 seeds")
for m, e in errors.items():
    print(f"  {m.upper():5s} {100 * np.mean(e):6.2f}%")
