"""Runtime detectors flagging adversarial inputs (label 1) vs clean (label 0)."""

from __future__ import annotations

import numpy as np

from .classifier import MlpClassifier, TrainConfig
from .exceptions import InvalidConfigError, InvalidDataError, InvalidLabelError, NotFittedError
from .utils import check_one_hot


class Detector:
    """Contract: fit on labeled data, then __call__ returns 0/1 per sample."""

    def __init__(self) -> None:
        self._fitted = False

    @property
    def is_fitted(self) -> bool:
        return self._fitted

    def fit(self, x: np.ndarray, y: np.ndarray, config: TrainConfig):
        raise NotImplementedError

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _check_binary_fit_data(y: np.ndarray) -> None:
    y = check_one_hot(y, 2)
    classes = np.unique(np.argmax(y, axis=1))
    if classes.size < 2:
        raise InvalidDataError("detector training data contains a single class")


class BinaryInputDetector(Detector):
    """Binary classifier over raw inputs, fit with a clean/adversarial mix."""

    def __init__(self, inner: MlpClassifier) -> None:
        super().__init__()
        if inner.nb_classes != 2:
            raise InvalidConfigError("detector's inner classifier must have 2 classes")
        self.inner = inner

    def fit(self, x: np.ndarray, y: np.ndarray, config: TrainConfig):
        _check_binary_fit_data(y)
        log = self.inner.fit(x, y, config)
        self._fitted = True
        return log

    def scores(self, x: np.ndarray) -> np.ndarray:
        """Probability of the adversarial class; evaluation plumbing (AUC)."""
        if not self._fitted:
            raise NotFittedError("detector has not been fitted")
        return self.inner.predict(x)[:, 1]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if not self._fitted:
            raise NotFittedError("detector has not been fitted")
        return self.inner.predict_classes(x)


class BinaryActivationDetector(Detector):
    """Binary classifier over one hidden layer's activations of another model."""

    def __init__(self, target: MlpClassifier, layer: int, inner: MlpClassifier) -> None:
        super().__init__()
        if not 0 <= layer < target.num_hidden_layers:
            raise InvalidLabelError(
                f"layer {layer} out of range for a model with "
                f"{target.num_hidden_layers} hidden layers"
            )
        if inner.nb_classes != 2:
            raise InvalidConfigError("detector's inner classifier must have 2 classes")
        width = target.architecture.hidden_sizes[layer]
        if inner.input_dim != width:
            raise InvalidConfigError(
                f"inner classifier expects width {inner.input_dim}, "
                f"target layer {layer} has width {width}"
            )
        self.target = target
        self.layer = layer
        self.inner = inner

    def _features(self, x: np.ndarray) -> np.ndarray:
        return self.target.get_activations(x, self.layer)

    def fit(self, x: np.ndarray, y: np.ndarray, config: TrainConfig):
        _check_binary_fit_data(y)
        log = self.inner.fit(self._features(x), y, config)
        self._fitted = True
        return log

    def scores(self, x: np.ndarray) -> np.ndarray:
        if not self._fitted:
            raise NotFittedError("detector has not been fitted")
        return self.inner.predict(self._features(x))[:, 1]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if not self._fitted:
            raise NotFittedError("detector has not been fitted")
        return self.inner.predict_classes(self._features(x))
