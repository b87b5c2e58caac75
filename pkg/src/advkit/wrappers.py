"""Classifier views: expectation over transformations, query-based gradients.

Both wrappers satisfy the classifier protocol (predict, gradients, clip,
nb_classes), so attacks run on them unchanged.
"""

from __future__ import annotations

import warnings

import numpy as np

from .exceptions import InvalidConfigError
from .utils import rng_from

_PROB_FLOOR = 1e-12


class IdentityTransformation:
    """No-op transformation; keeps EoT wiring testable."""

    def sample(self, rng):
        return (lambda x: x), (lambda g: g)


class RandomTranslation:
    """Circular integer translation of flattened images, up to +-max_shift.

    Wrap-around keeps constant images exactly invariant and maps valid
    inputs to valid inputs; the gradient maps back through the inverse
    shift.
    """

    def __init__(self, max_shift: int, image_shape: tuple[int, int, int]) -> None:
        if max_shift < 0:
            raise InvalidConfigError("max_shift must be >= 0")
        self.max_shift = max_shift
        self.image_shape = tuple(image_shape)

    def _roll(self, arr: np.ndarray, dy: int, dx: int) -> np.ndarray:
        k1, k2, k3 = self.image_shape
        imgs = arr.reshape(-1, k1, k2, k3)
        return np.roll(np.roll(imgs, dy, axis=1), dx, axis=2).reshape(arr.shape)

    def sample(self, rng):
        dy = int(rng.integers(-self.max_shift, self.max_shift + 1))
        dx = int(rng.integers(-self.max_shift, self.max_shift + 1))
        return (
            lambda x: self._roll(x, dy, dx),
            lambda g: self._roll(g, -dy, -dx),
        )


def _exact_mean(outputs: list[np.ndarray]) -> np.ndarray:
    """Mean over draws; identical draws return the value itself exactly.

    The fast path keeps identity transformations (and constant inputs under
    value-preserving transforms) bitwise equal to the unwrapped classifier.
    """
    if all(np.array_equal(o, outputs[0]) for o in outputs[1:]):
        return outputs[0]
    return sum(outputs) / len(outputs)


class ExpectationOverTransformations:
    """Average predictions and gradients over sampled input transformations."""

    def __init__(self, classifier, num_samples: int = 1, transformation=None, seed: int = 0):
        if num_samples < 1:
            raise InvalidConfigError("num_samples must be >= 1")
        self.classifier = classifier
        self.num_samples = num_samples
        self.transformation = transformation or IdentityTransformation()
        self.seed = seed
        self.clip = classifier.clip
        self.nb_classes = classifier.nb_classes

    def _draws(self):
        rng = rng_from(self.seed, "eot")
        return [self.transformation.sample(rng) for _ in range(self.num_samples)]

    def _clipped(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self.clip.x_min, self.clip.x_max
        if np.any(x < lo) or np.any(x > hi):
            warnings.warn("transformation left the valid data range; clipping")
            return np.clip(x, lo, hi)
        return x

    def predict(self, x: np.ndarray, logits: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        outs = [
            self.classifier.predict(self._clipped(forward(x)), logits=logits)
            for forward, _ in self._draws()
        ]
        return _exact_mean(outs)

    def predict_classes(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict(x), axis=1)

    def loss_gradient(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        outs = [
            backward(self.classifier.loss_gradient(self._clipped(forward(x)), y))
            for forward, backward in self._draws()
        ]
        return _exact_mean(outs)

    def class_gradient(self, x, label=None, logits: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        outs = []
        for forward, backward in self._draws():
            g = self.classifier.class_gradient(
                self._clipped(forward(x)), label=label, logits=logits
            )
            outs.append(
                np.stack([backward(g[:, c, :]) for c in range(g.shape[1])], axis=1)
            )
        return _exact_mean(outs)


class QueryEfficientGradientEstimation:
    """Estimate gradients from predictions alone via antithetic sampling.

    For num_basis Gaussian directions u, the loss gradient estimate is
    mean_k [L(x + sigma*u_k) - L(x - sigma*u_k)] / (2*sigma) * u_k, costing
    exactly 2 * num_basis model queries per sample, all routed through a
    prediction-only view.
    """

    def __init__(self, classifier, num_basis: int = 20, sigma: float = 1e-3, seed: int = 0):
        if num_basis < 1:
            raise InvalidConfigError("num_basis must be >= 1")
        if sigma <= 0:
            raise InvalidConfigError("sigma must be > 0")
        data_range = classifier.clip.x_max - classifier.clip.x_min
        if sigma > 0.1 * data_range:
            warnings.warn(
                f"sigma={sigma} is large relative to the data range {data_range}"
            )
        self.num_basis = num_basis
        self.sigma = sigma
        self.seed = seed
        self._view = classifier.prediction_view()
        self.clip = classifier.clip
        self.nb_classes = classifier.nb_classes

    @property
    def queries_used(self) -> int:
        return self._view.queries_used

    def predict(self, x: np.ndarray, logits: bool = False) -> np.ndarray:
        return self._view.predict(x, logits=logits)

    def predict_classes(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict(x), axis=1)

    def _estimate(self, x: np.ndarray, score_fn, logits: bool = False) -> np.ndarray:
        n, dim = x.shape
        rng = rng_from(self.seed, "qe-directions")
        directions = rng.normal(size=(self.num_basis, dim))
        plus = (x[:, None, :] + self.sigma * directions[None, :, :]).reshape(-1, dim)
        minus = (x[:, None, :] - self.sigma * directions[None, :, :]).reshape(-1, dim)
        s_plus = score_fn(self._view.predict(plus, logits=logits)).reshape(n, self.num_basis)
        s_minus = score_fn(self._view.predict(minus, logits=logits)).reshape(n, self.num_basis)
        coeff = (s_plus - s_minus) / (2.0 * self.sigma)
        return coeff @ directions / self.num_basis

    def loss_gradient(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = x.shape[0]

        def score(probs: np.ndarray) -> np.ndarray:
            stacked = probs.reshape(n, self.num_basis, -1)
            py = np.maximum((stacked * y[:, None, :]).sum(axis=2), _PROB_FLOOR)
            return -np.log(py).reshape(-1)

        return self._estimate(x, score)

    def class_gradient(self, x, label=None, logits: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        classes = range(self.nb_classes) if label is None else (label,)
        grads = []
        for c in classes:
            grads.append(self._estimate(x, lambda out: out[:, c], logits=logits))
        return np.stack(grads, axis=1)
