"""Acceptance criteria 1-10 at their stated tolerances.

Each test records one pass/fail line; ``conftest.py`` prints them at the end
of the run.  ``python3 tests/test_acceptance.py`` runs the suite standalone.
"""

import sys
import time

import numpy as np
import pytest

from mutualcone import classify, cone, discriminant, nmf, nnls, persistence, subspace
from mutualcone.classify import Hyperparameters
from mutualcone.cone import AlsConfig, ConvexCone
from mutualcone.data import SyntheticSpec, generate_synthetic
from mutualcone.subspace import Subspace
from oracles import min_angle_by_rays, nnls_enumeration, projector_eigen_cosines

RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[n]


def split_by_index(dataset, n_train):
    train = [s for s in dataset if int(s.set_id.split("_s")[1]) < n_train]
    test = [s for s in dataset if int(s.set_id.split("_s")[1]) >= n_train]
    return train, test


def test_criterion_01_nnls_oracle():
    rng = np.random.default_rng(1)
    problems = []
    for _ in range(1000):
        d, r = int(rng.integers(1, 9)), int(rng.integers(1, 6))
        problems.append((rng.standard_normal((d, r)), rng.standard_normal(d)))
    t0 = time.perf_counter()
    sols = [nnls.solve(b, x) for b, x in problems]
    elapsed = time.perf_counter() - t0
    worst_gap = worst_kkt = 0.0
    for (b, x), sol in zip(problems, sols):
        w = sol.coefficients
        worst_gap = max(worst_gap, abs(sol.residual_norm - nnls_enumeration(b, x)[1]))
        grad = b.T @ (b @ w - x)
        kkt = max(np.max(np.abs(grad[w > 0]), initial=0.0), np.max(-grad[w == 0], initial=0.0))
        assert np.all(w >= 0)
        worst_kkt = max(worst_kkt, kkt)
    ok = worst_gap <= 1e-8 and worst_kkt <= 1e-8 and elapsed < 5.0
    record(1, ok, f"max |obj - enum| {worst_gap:.1e}, max KKT violation {worst_kkt:.1e}, {elapsed:.2f}s")


def test_criterion_02_nmf_recovery():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst, monotone = 0.0, True
    for i in range(100):
        r = int(rng.integers(1, 5))
        d = int(rng.integers(r, 11))
        n = int(rng.integers(max(r, 4), 21))
        f = rng.random((d, r)) @ rng.random((r, n))
        res = nmf.factorize(f, nmf.NmfConfig(rank=r, restarts=10, max_outer_iterations=2000,
                                             tolerance=1e-12, seed=i))
        worst = max(worst, res.objective)
        monotone &= all(np.all(np.diff(t) <= 0) for t in res.all_traces)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and monotone and elapsed < 30.0
    record(2, ok, f"max best-of-10 objective {worst:.1e}, traces monotone {monotone}, {elapsed:.2f}s")


def test_criterion_03_cone_identities():
    rng = np.random.default_rng(3)
    self_err = 0.0
    for i in range(50):
        d, r = int(rng.integers(2, 9)), int(rng.integers(1, 5))
        c = ConvexCone.from_generators(rng.random((d, r)))
        self_err = max(self_err, abs(cone.similarity(cone.angles_between(c, c, AlsConfig(seed=i))) - 1.0))
    eye = np.eye(5)
    axis_err = max(abs(cone.similarity(cone.angles_between(ConvexCone.from_generators(eye[:, i]),
                                                           ConvexCone.from_generators(eye[:, j]))))
                   for i in range(5) for j in range(5) if i != j)
    ray_err = 0.0
    for _ in range(50):
        a, b = rng.random(6), rng.random(6)
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        th = cone.angles_between(ConvexCone(a), ConvexCone(b)).angles[0]
        ray_err = max(ray_err, abs(th - np.arccos(a @ b)))
    ok = self_err <= 1e-6 and axis_err <= 1e-9 and ray_err <= 1e-10
    record(3, ok, f"|sim(C,C) - 1| {self_err:.1e}, sim(e_i,e_j) {axis_err:.1e}, ray angle err {ray_err:.1e}")


def test_criterion_04_als_vs_ray_grid():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(50):
        r1, r2 = rng.integers(1, 4, 2)
        c1 = ConvexCone.from_generators(rng.random((3, r1)))
        c2 = ConvexCone.from_generators(rng.random((3, r2)))
        theta = cone.angles_between(c1, c2, AlsConfig(restarts=10, seed=i)).first
        worst = max(worst, abs(np.degrees(theta - min_angle_by_rays(c1.generators, c2.generators))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.5 and elapsed < 60.0
    record(4, ok, f"max |theta_1 - grid| {worst:.3f} deg, {elapsed:.2f}s")


def test_criterion_05_canonical_angles():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 12))
        n1, n2 = int(rng.integers(1, d + 1)), int(rng.integers(1, d + 1))
        s1 = Subspace.span(rng.standard_normal((d, n1)))
        s2 = Subspace.span(rng.standard_normal((d, n2)))
        cos2 = np.cos(subspace.canonical_angles(s1, s2).angles) ** 2
        worst = max(worst, np.max(np.abs(cos2 - projector_eigen_cosines(s1.basis, s2.basis))))
    record(5, worst <= 1e-8, f"max |cos^2 - eig(P1 P2)| {worst:.1e}")


def test_criterion_06_discriminant_residual():
    rng = np.random.default_rng(6)
    worst = 0.0
    for i in range(50):
        d = int(rng.integers(4, 10))
        cones = [ConvexCone.from_generators(rng.random((d, int(rng.integers(1, 4))))) for _ in range(3)]
        cv = discriminant.common_vectors(cones, AlsConfig(seed=i))
        pair = discriminant.scatter(cones, cv)
        rank = int(np.sum(np.linalg.eigvalsh(pair.s_b) > discriminant.RANK_RTOL * np.linalg.eigvalsh(pair.s_b)[-1]))
        space = discriminant.solve_space(pair, min(rank, d))
        eps = space.regularization
        scale = np.linalg.norm(pair.s_b) + np.linalg.norm(pair.s_w) + eps
        for g, phi in zip(space.eigenvalues, space.eigenvectors.T):
            res = np.linalg.norm(pair.s_b @ phi - g * (pair.s_w + eps * np.eye(d)) @ phi)
            worst = max(worst, res / scale)
    e1 = ConvexCone.from_generators(np.array([1.0, 0.0]))
    e2 = ConvexCone.from_generators(np.array([0.0, 1.0]))
    v = discriminant.build([e1, e2], 1).basis[:, 0]
    target = np.array([1.0, -1.0]) / np.sqrt(2)
    sym = min(np.linalg.norm(v - target), np.linalg.norm(v + target))
    ok = worst <= 1e-8 and sym <= 1e-8
    record(6, ok, f"max relative eigen-residual {worst:.1e}, 2-class basis error {sym:.1e}")


SEPARABLE = SyntheticSpec(classes=3, sets_per_class=5, vectors_per_set=10, dim=12, rays_per_class=2,
                          noise_sigma=0.0, overlap=0.0, seed=7)
METHOD_NDIM = {"mcm": None, "cmcm": 2, "msm": None, "cmsm": 4}


def test_criterion_07_separable():
    t0 = time.perf_counter()
    train, test = split_by_index(generate_synthetic(SEPARABLE), 3)
    errors = {}
    for m, ndim in METHOD_NDIM.items():
        model = classify.train(m, train, Hyperparameters(class_rank=2, query_rank=2, ndim=ndim))
        errors[m] = classify.evaluate(model, test).error_rate
    elapsed = time.perf_counter() - t0
    ok = all(e == 0.0 for e in errors.values()) and elapsed < 10.0
    record(7, ok, f"error rates {errors}, {elapsed:.2f}s")


def test_criterion_08_noisy_ordering():
    errors = {"mcm": [], "cmcm": []}
    hp = Hyperparameters(class_rank=2, query_rank=2, ndim=8)
    for seed in range(20):
        spec = SyntheticSpec(classes=5, sets_per_class=4, vectors_per_set=6, dim=10, rays_per_class=2,
                             noise_sigma=0.08, overlap=0.4, seed=seed)
        train, test = split_by_index(generate_synthetic(spec), 2)
        for m in errors:
            model = classify.train(m, train, hp, seed=seed)
            errors[m].append(classify.evaluate(model, test).error_rate)
    mcm, cmcm = np.mean(errors["mcm"]), np.mean(errors["cmcm"])
    record(8, cmcm <= mcm, f"mean error CMCM {cmcm:.4f} vs MCM {mcm:.4f} over 20 seeds")


NOISY = SyntheticSpec(classes=3, sets_per_class=4, vectors_per_set=8, dim=12, rays_per_class=2,
                      noise_sigma=0.05, overlap=0.3, seed=10)
NOISY_NDIM = {"mcm": None, "cmcm": 4, "msm": None, "cmsm": 4}


def test_criterion_09_determinism(tmp_path):
    train, test = split_by_index(generate_synthetic(NOISY), 2)
    ok = True
    for m, ndim in NOISY_NDIM.items():
        hp = Hyperparameters(class_rank=2, query_rank=2, ndim=ndim)
        a, b = tmp_path / f"{m}_a.txt", tmp_path / f"{m}_b.txt"
        ma = classify.train(m, train, hp, seed=4)
        mb = classify.train(m, train, hp, seed=4)
        persistence.save_model(ma, a)
        persistence.save_model(mb, b)
        loaded = persistence.load_model(a)
        pa = [classify.predict(ma, s) for s in test]
        ok &= a.read_bytes() == b.read_bytes()
        ok &= pa == [classify.predict(mb, s) for s in test]
        ok &= pa == [classify.predict(loaded, s) for s in test]
    record(9, ok, "model files bit-identical, predictions identical across runs and after save/load")


def test_criterion_10_scale_invariance():
    train, test = split_by_index(generate_synthetic(NOISY), 2)
    worst, labels_ok = 0.0, True
    for m, ndim in NOISY_NDIM.items():
        hp = Hyperparameters(class_rank=2, query_rank=2, ndim=ndim)
        base = classify.train(m, train, hp, seed=1)
        scaled = classify.train(m, [s.scaled(7.3) for s in train], hp, seed=1)
        for s in test:
            p, q = classify.predict(base, s), classify.predict(scaled, s.scaled(7.3))
            labels_ok &= p.label == q.label
            worst = max(worst, float(np.max(np.abs(np.subtract(p.scores, q.scores)))))
    record(10, labels_ok and worst <= 1e-9, f"labels unchanged {labels_ok}, max score change {worst:.1e}")


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    for n in sorted(RESULTS):
        print(RESULTS[n])
    sys.exit(code)
