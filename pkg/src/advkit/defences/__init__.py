from .preprocessor import Preprocessor
from .feature_squeezing import FeatureSqueezing
from .label_smoothing import LabelSmoothing
from .spatial_smoothing import SpatialSmoothing
from .thermometer import ThermometerEncoding
from .variance_minimization import TotalVarianceMinimization, TvmDiagnostics
from .gaussian_augmentation import GaussianAugmentation
from .trainer import AdversarialTrainer, AdversarialTrainLog

__all__ = [
    "Preprocessor",
    "FeatureSqueezing",
    "LabelSmoothing",
    "SpatialSmoothing",
    "ThermometerEncoding",
    "TotalVarianceMinimization",
    "TvmDiagnostics",
    "GaussianAugmentation",
    "AdversarialTrainer",
    "AdversarialTrainLog",
]
