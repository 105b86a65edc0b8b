import numpy as np
import pytest

from mutualcone import classify, cone, subspace
from mutualcone.classify import Hyperparameters, Prediction
from mutualcone.data import FeatureSet, SyntheticSpec, generate_synthetic
from mutualcone.errors import ClassificationError, ConfigurationError, ContractError


def ray_set(sid, label, direction, n=3):
    v = np.asarray(direction, dtype=float)
    return FeatureSet(sid, label, np.column_stack([v * (k + 1) for k in range(n)]))


@pytest.fixture(scope="module")
def noisy():
    spec = SyntheticSpec(classes=3, sets_per_class=4, vectors_per_set=6, dim=9, rays_per_class=2,
                         noise_sigma=0.05, overlap=0.3, seed=5)
    ds = generate_synthetic(spec)
    train = [s for s in ds if int(s.set_id.split("_s")[1]) < 2]
    test = [s for s in ds if int(s.set_id.split("_s")[1]) >= 2]
    return train, test


def test_two_ray_classes_mcm():
    train = [ray_set("a", "A", [1, 0]), ray_set("b", "B", [0, 1])]
    model = classify.train("mcm", train, Hyperparameters())
    np.testing.assert_allclose(model.references[0].generators[:, 0], [1, 0], atol=1e-12)
    np.testing.assert_allclose(model.references[1].generators[:, 0], [0, 1], atol=1e-12)
    p = classify.predict(model, ray_set("q", None, [2, 0]))
    assert p.label == "A" and p.scores[0] == pytest.approx(1.0, abs=1e-6)


def test_two_ray_classes_cmcm():
    train = [ray_set("a", "A", [1, 0]), ray_set("b", "B", [0, 1])]
    model = classify.train("cmcm", train, Hyperparameters(ndim=1))
    assert model.projection.dim == 1
    assert all(r.ambient_dim == 1 for r in model.references)
    p = classify.predict(model, ray_set("q", None, [1, 0]))
    assert p.label == "A"
    assert p.scores[1] == pytest.approx(0.0, abs=1e-12)


def test_orthogonal_query_is_low_confidence():
    train = [ray_set("a", "A", [1, 0, 0]), ray_set("b", "B", [0, 1, 0])]
    model = classify.train("mcm", train, Hyperparameters())
    p = classify.predict(model, ray_set("q", None, [0, 0, 1]))
    assert p.scores == pytest.approx((0.0, 0.0))
    assert p.label == "A" and p.low_confidence


def test_train_errors():
    one = [ray_set("a", "A", [1, 0])]
    with pytest.raises(ContractError):
        classify.train("mcm", one, Hyperparameters())
    two = [ray_set("a", "A", [1, 0], n=1), ray_set("b", "B", [0, 1], n=1)]
    with pytest.raises(ContractError, match="rank 2"):
        classify.train("mcm", two, Hyperparameters(class_rank=2))
    with pytest.raises(ContractError):
        classify.train("xyz", two, Hyperparameters())
    with pytest.raises(ContractError, match="ndim"):
        classify.train("cmcm", two, Hyperparameters())
    with pytest.raises(ContractError, match="no class label"):
        classify.train("mcm", [FeatureSet("u", None, np.ones((2, 1)))] + two, Hyperparameters())


def test_predict_errors():
    train = [ray_set("a", "A", [1, 0]), ray_set("b", "B", [0, 1])]
    model = classify.train("mcm", train, Hyperparameters())
    with pytest.raises(ContractError, match="expects 2, query has 3"):
        classify.predict(model, ray_set("q", None, [1, 0, 0]))
    with pytest.raises(ContractError):
        classify.predict(model, ray_set("q", None, [1, 0], n=1), query_rank=2)


def test_degenerate_query_projection():
    train = [ray_set("a", "A", [1, 0, 0]), ray_set("b", "B", [0, 1, 0])]
    model = classify.train("cmcm", train, Hyperparameters(ndim=1))
    with pytest.raises(ClassificationError, match="degenerate"):
        classify.predict(model, ray_set("q", None, [0, 0, 1]))


def test_evaluate_arithmetic():
    train = [ray_set("a", "A", [1, 0]), ray_set("b", "B", [0, 1])]
    model = classify.train("mcm", train, Hyperparameters())
    right = [("A", ray_set("q", None, [1, 0.01]))] * 7
    wrong = [("A", ray_set("q", None, [0.01, 1]))] * 3
    ev = classify.evaluate(model, right + wrong)
    assert ev.error_rate == pytest.approx(0.3)
    assert ev.confusion.tolist() == [[7, 3], [0, 0]]
    assert classify.evaluate(model, right).error_rate == 0.0
    assert classify.evaluate(model, wrong).error_rate == 1.0
    with pytest.raises(ContractError):
        classify.evaluate(model, [])


@pytest.mark.parametrize("method,ndim", [("mcm", None), ("cmcm", 4), ("msm", None), ("cmsm", 3)])
def test_rescoring_oracle(noisy, method, ndim):
    train, test = noisy
    model = classify.train(method, train, Hyperparameters(class_rank=2, query_rank=2, ndim=ndim))
    ev = classify.evaluate(model, test)
    # recompute every score independently of predict/evaluate
    wrong = 0
    for fs in test:
        q = classify.query_reference(model, fs)
        scores = []
        for i, ref in enumerate(model.references):
            if method in ("mcm", "cmcm"):
                cfg = cone.AlsConfig(seed=classify.label_seed(model.als.seed, model.class_labels[i]))
                scores.append(cone.similarity(cone.angles_between(q, ref, cfg)))
            else:
                scores.append(subspace.similarity(subspace.canonical_angles(q, ref)))
        wrong += model.class_labels[int(np.argmax(scores))] != fs.class_label
        assert classify.predict(model, fs).scores == tuple(scores)
    assert ev.error_rate == wrong / len(test)
    assert ev.confusion.sum(axis=1).tolist() == [2, 2, 2]


def test_msm_matches_projector_eigenvalues(noisy):
    train, test = noisy
    model = classify.train("msm", train, Hyperparameters(class_rank=2, query_rank=2))
    q = classify.query_reference(model, test[0])
    p = classify.predict(model, test[0])
    for ref, s in zip(model.references, p.scores):
        ev = np.sort(np.linalg.eigvals(q.projector @ ref.projector).real)[::-1][:2]
        assert np.mean(ev) == pytest.approx(s, abs=1e-8)


def test_scale_invariance(noisy):
    train, test = noisy
    hp = Hyperparameters(class_rank=2, query_rank=2, ndim=4)
    a = classify.train("cmcm", train, hp, seed=2)
    b = classify.train("cmcm", [s.scaled(7.3) for s in train], hp, seed=2)
    for fs in test:
        pa, pb = classify.predict(a, fs), classify.predict(b, fs.scaled(7.3))
        assert pa.label == pb.label
        np.testing.assert_allclose(pa.scores, pb.scores, rtol=0, atol=1e-9)


def test_class_order_permutes_scores(noisy):
    train, test = noisy
    hp = Hyperparameters(class_rank=2, query_rank=2)
    a = classify.train("mcm", train, hp)
    # reverse class order but keep set order within each class
    by_label = {}
    for s in train:
        by_label.setdefault(s.class_label, []).append(s)
    b = classify.train("mcm", [s for lab in reversed(by_label) for s in by_label[lab]], hp)
    assert a.class_labels == b.class_labels[::-1]
    for fs in test:
        pa, pb = classify.predict(a, fs), classify.predict(b, fs)
        assert pa.label == pb.label
        assert pa.scores == pb.scores[::-1]


def test_deterministic(noisy):
    train, test = noisy
    hp = Hyperparameters(class_rank=2, query_rank=2, ndim=4)
    a = classify.train("cmcm", train, hp, seed=3)
    b = classify.train("cmcm", train, hp, seed=3)
    assert [classify.predict(a, fs) for fs in test] == [classify.predict(b, fs) for fs in test]


def test_model_invariants():
    c = cone.ConvexCone.from_generators(np.eye(2)[:, :1])
    with pytest.raises(ContractError):
        classify.ClassifierModel("cmcm", ("A",), (c,), Hyperparameters(), cone.AlsConfig(), 0, 2)
    with pytest.raises(ContractError):
        classify.ClassifierModel("mcm", ("A", "B"), (c, cone.ConvexCone.from_generators(np.ones((3, 1)))),
                                 Hyperparameters(), cone.AlsConfig(), 0, 2)


def test_prediction_tie_rule():
    p = Prediction("A", (0.5, 0.5))
    assert p.label == "A"


def test_stratified_folds():
    sets = [ray_set(f"{k}{i}", k, [1, 0]) for k in "AB" for i in range(4)]
    pairs, folds = classify.stratified_folds(sets, 2, seed=0)
    for k in "AB":
        got = sorted(f for (lab, _), f in zip(pairs, folds) if lab == k)
        assert got == [0, 0, 1, 1]
    a = classify.stratified_folds(sets, 2, seed=1)[1]
    assert np.array_equal(a, classify.stratified_folds(sets, 2, seed=1)[1])
    with pytest.raises(ConfigurationError, match="folds"):
        classify.stratified_folds(sets, 5, seed=0)
    with pytest.raises(ConfigurationError):
        classify.stratified_folds(sets, 1, seed=0)


def test_cross_validate_one_cell_and_tie_rule():
    spec = SyntheticSpec(classes=2, sets_per_class=4, vectors_per_set=6, dim=6, rays_per_class=2)
    sets = list(generate_synthetic(spec))
    cv = classify.cross_validate("msm", sets, {"class_rank": [1]}, folds=2)
    assert cv.best.class_rank == 1 and cv.cells == ({"class_rank": 1},)
    cv = classify.cross_validate("msm", sets, [{"class_rank": 2}, {"class_rank": 1}], folds=2)
    assert cv.mean_errors == (0.0, 0.0)
    assert cv.best.class_rank == 1
    with pytest.raises(ConfigurationError):
        classify.cross_validate("msm", sets, [], folds=2)


def test_cross_validate_matches_recomputation(noisy):
    train, _ = noisy
    grid = {"class_rank": [1, 2]}
    cv = classify.cross_validate("mcm", train, grid, folds=2, seed=4)
    pairs, assign = classify.stratified_folds(train, 2, seed=4)
    for cell, mean, per in zip(cv.cells, cv.mean_errors, cv.fold_errors):
        hp = Hyperparameters(**cell)
        errs = []
        for f in range(2):
            tr = [p for p, a in zip(pairs, assign) if a != f]
            te = [p for p, a in zip(pairs, assign) if a == f]
            errs.append(classify.evaluate(classify.train("mcm", tr, hp, seed=4), te).error_rate)
        assert tuple(errs) == per and mean == pytest.approx(np.mean(errs))
    assert cv.mean_errors[cv.cells.index(cv.best_cell)] == min(cv.mean_errors)
