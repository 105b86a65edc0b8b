"""Image-set classifiers: MCM, CMCM (cones) and MSM, CMSM (subspaces).

All four share one pipeline.  Training L2-normalizes every feature vector,
pools each class's sets and fits a reference per class (NMF cone or
uncentered-PCA subspace).  The constrained variants additionally learn a
projection (discriminant space or GDS) and store the projected references.
Prediction builds the same kind of model from the query set, projects it if
needed and scores it against every reference.
"""

import itertools
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import cone as cone_mod
from . import discriminant, subspace
from .cone import AlsConfig, ConvexCone
from .data import FeatureSet
from .errors import ClassificationError, ConfigurationError, ContractError, DegenerateProjectionError
from .nmf import NmfConfig, factorize

METHODS = ("mcm", "cmcm", "msm", "cmsm")
CONE_METHODS = ("mcm", "cmcm")
LOW_CONFIDENCE = 1e-6


@dataclass(frozen=True)
class Hyperparameters:
    """Per-experiment knobs.

    ``class_rank``/``query_rank`` are cone generator counts for MCM/CMCM and
    subspace dimensions for MSM/CMSM.  ``ndim`` is the discriminant-space
    dimension (CMCM) or GDS dimension (CMSM).  ``epsilon=None`` selects the
    default within-class regularization.
    """

    class_rank: int = 1
    query_rank: int = 1
    ndim: int | None = None
    epsilon: float | None = None
    nmf_restarts: int = 3
    nmf_max_iterations: int = 300
    nmf_tolerance: float = 1e-6

    def nmf_config(self, rank, seed):
        return NmfConfig(rank=rank, max_outer_iterations=self.nmf_max_iterations,
                         tolerance=self.nmf_tolerance, restarts=self.nmf_restarts,
                         seed=seed)


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    method: str
    class_labels: tuple
    references: tuple
    hyperparameters: Hyperparameters
    als: AlsConfig
    seed: int
    ambient_dim: int
    projection: object = None
    diagnostics: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ContractError(f"unknown method {self.method!r}; expected one of {METHODS}")
        needs = self.method in ("cmcm", "cmsm")
        if needs != (self.projection is not None):
            raise ContractError(f"{self.method} model {'needs' if needs else 'takes no'} projection")
        dims = {r.ambient_dim for r in self.references}
        if len(dims) != 1:
            raise ContractError("references must share one ambient dimension")


@dataclass(frozen=True)
class Prediction:
    label: str
    scores: tuple
    low_confidence: bool = False


@dataclass(frozen=True)
class Evaluation:
    error_rate: float
    confusion: np.ndarray
    class_labels: tuple
    predictions: tuple


def label_seed(seed, label):
    """Stable sub-seed for one class, independent of class registration order."""
    return int(np.random.SeedSequence([seed, zlib.crc32(str(label).encode("utf-8"))])
               .generate_state(1)[0])


def normalize_columns(vectors):
    v = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(v, axis=0)
    if np.any(norms == 0):
        raise ContractError("feature vectors must be non-zero to be L2-normalized")
    return v / norms


def _as_pairs(training_sets):
    out = []
    for item in training_sets:
        if isinstance(item, FeatureSet):
            if item.class_label is None:
                raise ContractError(f"training set {item.set_id!r} has no class label")
            out.append((item.class_label, item))
        else:
            label, fs = item
            out.append((label, fs))
    return out


def _pool(training_sets):
    pooled = {}
    for label, fs in _as_pairs(training_sets):
        pooled.setdefault(label, []).append(fs.vectors)
    if len(pooled) < 2:
        raise ContractError("at least two classes are required")
    dims = {v.shape[0] for vs in pooled.values() for v in vs}
    if len(dims) != 1:
        raise ContractError(f"training sets have mixed dimensions {sorted(dims)}")
    return {k: normalize_columns(np.hstack(v)) for k, v in pooled.items()}


def _fit_cone(vectors, rank, hp, seed, what):
    if vectors.shape[1] < rank:
        raise ContractError(f"{what}: {vectors.shape[1]} samples cannot support rank {rank}")
    res = factorize(vectors, hp.nmf_config(rank, seed))
    return ConvexCone.from_generators(res.basis), res


def _fit_subspace(vectors, dim, what):
    if vectors.shape[1] < dim:
        raise ContractError(f"{what}: {vectors.shape[1]} samples cannot support dimension {dim}")
    return subspace.from_features(vectors, dim)


def train(method, training_sets, hyperparameters, seed=0, als=AlsConfig()):
    """Fit a classifier.

    Parameters
    ----------
    method : {"mcm", "cmcm", "msm", "cmsm"}
    training_sets : iterable of FeatureSet or (label, FeatureSet)
        Labeled sets; all sets of a class are pooled.
    hyperparameters : Hyperparameters
    seed : int
        Seeds NMF (per class, derived from the label) and the common-vector
        search of CMCM.
    als : AlsConfig
        ALS settings stored in the model and reused at prediction time.
    """
    method = method.lower()
    if method not in METHODS:
        raise ContractError(f"unknown method {method!r}; expected one of {METHODS}")
    hp = hyperparameters
    pooled = _pool(training_sets)
    labels = tuple(pooled)
    d = next(iter(pooled.values())).shape[0]
    diagnostics = {}

    if method in CONE_METHODS:
        refs, traces = [], {}
        for label in labels:
            c, res = _fit_cone(pooled[label], hp.class_rank, hp, label_seed(seed, label),
                               f"class {label!r}")
            refs.append(c)
            traces[label] = list(res.trace)
        diagnostics["nmf_objective_traces"] = traces
        projection = None
        if method == "cmcm":
            if hp.ndim is None:
                raise ContractError("cmcm requires ndim (discriminant space dimension)")
            projection = discriminant.build(refs, hp.ndim, hp.epsilon, replace(als, seed=seed))
            refs = [discriminant.project_cone(projection, c) for c in refs]
            diagnostics["discriminant_eigenvalues"] = projection.eigenvalues.tolist()
            diagnostics["regularization"] = projection.regularization
    else:
        refs = [_fit_subspace(pooled[label], hp.class_rank, f"class {label!r}") for label in labels]
        projection = None
        if method == "cmsm":
            if hp.ndim is None:
                raise ContractError("cmsm requires ndim (GDS dimension)")
            projection = subspace.gds(refs, hp.ndim)
            refs = [subspace.project_subspace(projection, s) for s in refs]
    return ClassifierModel(method, labels, tuple(refs), hp, als, seed, d, projection, diagnostics)


def query_reference(model, query, query_rank=None, config=None):
    """Build the query's cone or subspace, projected the same way as the references."""
    config = model.als if config is None else config
    rank = model.hyperparameters.query_rank if query_rank is None else query_rank
    vectors = query.vectors if isinstance(query, FeatureSet) else np.asarray(query, dtype=float)
    if vectors.shape[0] != model.ambient_dim:
        raise ContractError(
            f"dimension mismatch: model expects {model.ambient_dim}, query has {vectors.shape[0]}"
        )
    vectors = normalize_columns(vectors)
    try:
        if model.method in CONE_METHODS:
            c, _ = _fit_cone(vectors, rank, model.hyperparameters, config.seed, "query")
            if model.method == "cmcm":
                c = discriminant.project_cone(model.projection, c)
            return c
        s = _fit_subspace(vectors, rank, "query")
        if model.method == "cmsm":
            s = subspace.project_subspace(model.projection, s)
        return s
    except DegenerateProjectionError as exc:
        raise ClassificationError(f"query projection is degenerate: {exc}") from exc


def score(model, ref_index, query_ref, config=None):
    """Similarity between a prepared query reference and one class reference."""
    config = model.als if config is None else config
    ref = model.references[ref_index]
    if model.method in CONE_METHODS:
        cfg = replace(config, seed=label_seed(config.seed, model.class_labels[ref_index]))
        return cone_mod.similarity(cone_mod.angles_between(query_ref, ref, cfg))
    return subspace.similarity(subspace.canonical_angles(query_ref, ref))


def predict(model, query, query_rank=None, config=None):
    """Classify one query set; ties go to the lowest class index."""
    q = query_reference(model, query, query_rank, config)
    scores = tuple(score(model, i, q, config) for i in range(len(model.references)))
    best = int(np.argmax(scores))
    return Prediction(model.class_labels[best], scores, scores[best] < LOW_CONFIDENCE)


def evaluate(model, labeled_queries, query_rank=None, config=None):
    """Error rate and confusion counts (rows: true class, columns: predicted)."""
    queries = _as_pairs(labeled_queries)
    if not queries:
        raise ContractError("evaluation needs at least one query")
    index = {label: i for i, label in enumerate(model.class_labels)}
    confusion = np.zeros((len(index), len(index)), dtype=int)
    preds = []
    for label, fs in queries:
        if label not in index:
            raise ContractError(f"query label {label!r} is not a trained class")
        p = predict(model, fs, query_rank, config)
        confusion[index[label], index[p.label]] += 1
        preds.append(p)
    wrong = len(queries) - int(np.trace(confusion))
    return Evaluation(wrong / len(queries), confusion, model.class_labels, tuple(preds))


def expand_grid(grid):
    """Cartesian product of a ``{name: [values]}`` mapping, or a list of cells as-is."""
    if isinstance(grid, dict):
        keys = list(grid)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]
    return [dict(cell) for cell in grid]


def stratified_folds(training_sets, folds, seed):
    """Assign each set a fold index; each class is shuffled then dealt round-robin."""
    pairs = _as_pairs(training_sets)
    if folds < 2:
        raise ConfigurationError("cross-validation needs at least 2 folds")
    by_class = {}
    for i, (label, _) in enumerate(pairs):
        by_class.setdefault(label, []).append(i)
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(pairs), dtype=int)
    for label, idx in by_class.items():
        if len(idx) < folds:
            raise ConfigurationError(
                f"class {label!r} has {len(idx)} sets; every one of {folds} folds needs one"
            )
        perm = rng.permutation(len(idx))
        for pos, k in enumerate(perm):
            assignment[idx[k]] = pos % folds
    return pairs, assignment


@dataclass(frozen=True)
class CrossValidation:
    best: Hyperparameters
    best_cell: dict
    cells: tuple
    mean_errors: tuple
    fold_errors: tuple


def cross_validate(method, training_sets, hyperparameter_grid, folds=5, seed=0,
                   base=Hyperparameters(), als=AlsConfig()):
    """Pick the grid cell with the lowest mean validation error.

    Ties go to the smaller ``class_rank``, then the smaller ``ndim``, then
    grid order.
    """
    cells = expand_grid(hyperparameter_grid)
    if not cells:
        raise ConfigurationError("hyperparameter grid is empty")
    pairs, assignment = stratified_folds(training_sets, folds, seed)
    means, per_fold = [], []
    for cell in cells:
        hp = replace(base, **cell)
        errs = []
        for f in range(folds):
            train_part = [p for p, a in zip(pairs, assignment) if a != f]
            held_out = [p for p, a in zip(pairs, assignment) if a == f]
            model = train(method, train_part, hp, seed=seed, als=als)
            errs.append(evaluate(model, held_out).error_rate)
        per_fold.append(tuple(errs))
        means.append(float(np.mean(errs)))
    hps = [replace(base, **c) for c in cells]
    order = sorted(range(len(cells)), key=lambda i: (
        means[i], hps[i].class_rank, -1 if hps[i].ndim is None else hps[i].ndim, i))
    best = order[0]
    return CrossValidation(hps[best], cells[best], tuple(cells), tuple(means), tuple(per_fold))
