"""Convex-cone representations of non-negative feature sets.

Implements the mutual convex cone method (MCM), its constrained variant
(CMCM) with a learned discriminant space, and the subspace baselines MSM and
CMSM.
"""

from .classify import (
    ClassifierModel,
    Evaluation,
    Hyperparameters,
    Prediction,
    cross_validate,
    evaluate,
    predict,
    train,
)
from .cone import AlsConfig, AngleSpectrum, ConvexCone, angle_to_vector, angles_between, project, similarity
from .data import Dataset, FeatureSet, SyntheticSpec, generate_synthetic, load_csv, save_csv
from .errors import (
    ContractError,
    DataError,
    MutualConeError,
    NumericalError,
    PersistenceError,
)
from .nmf import NmfConfig, NmfResult, factorize
from .nnls import NnlsSolution
from .persistence import load_model, save_model
from .subspace import Subspace, canonical_angles

__version__ = "0.1.0"

__all__ = [
    "AlsConfig", "AngleSpectrum", "ClassifierModel", "ContractError", "ConvexCone", "DataError",
    "Dataset", "Evaluation", "FeatureSet", "Hyperparameters", "MutualConeError", "NmfConfig",
    "NmfResult", "NnlsSolution", "NumericalError", "PersistenceError", "Prediction", "Subspace",
    "SyntheticSpec", "angle_to_vector", "angles_between", "canonical_angles", "cross_validate",
    "evaluate", "factorize", "generate_synthetic", "load_csv", "load_model", "predict", "project",
    "save_csv", "save_model", "similarity", "train",
]
