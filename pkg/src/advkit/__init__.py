"""advkit: evasion attacks, defences, detection and robustness metrics
around a built-in differentiable MLP classifier."""

__version__ = "1.0.0"

from .classifier import (
    ClipValues,
    MlpArchitecture,
    MlpClassifier,
    PredictionOnlyView,
    PreprocessingSpec,
    TrainConfig,
    linear2_classifier,
)
from .data import Dataset
from .datagen import DataGenerator, InMemoryDataGenerator
from .numerics import NormKind, clip, kl_divergence, lp_norm, project, softmax

__all__ = [
    "__version__",
    "ClipValues",
    "MlpArchitecture",
    "MlpClassifier",
    "PredictionOnlyView",
    "PreprocessingSpec",
    "TrainConfig",
    "linear2_classifier",
    "Dataset",
    "DataGenerator",
    "InMemoryDataGenerator",
    "NormKind",
    "clip",
    "kl_divergence",
    "lp_norm",
    "project",
    "softmax",
]
