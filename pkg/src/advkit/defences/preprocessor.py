"""Unified interface for input-preprocessing defences."""

from __future__ import annotations

import numpy as np

from ..exceptions import ShapeError


class Preprocessor:
    """A data transformation applied inside the classifier pipeline.

    apply_fit / apply_predict control in which phase the classifier runs the
    transform. __call__ takes (x, y) and returns transformed (x, y); defences
    that only touch inputs pass y through unchanged.
    """

    def __init__(self, apply_fit: bool, apply_predict: bool) -> None:
        self.apply_fit = apply_fit
        self.apply_predict = apply_predict
        self._fitted = True

    @property
    def is_fitted(self) -> bool:
        return self._fitted

    def fit(self, x: np.ndarray, y: np.ndarray | None = None) -> None:
        """No-op for stateless defences."""

    def __call__(self, x: np.ndarray, y: np.ndarray | None = None):
        raise NotImplementedError

    def estimate_gradient(self, x: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Backward-pass gradient through the defence.

        Default is the straight-through identity, the stated approximation
        for non-differentiable transforms. Shape-changing defences override.
        """
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != np.asarray(x).shape:
            raise ShapeError(
                f"gradient shape {grad.shape} does not match input shape "
                f"{np.asarray(x).shape}"
            )
        return grad
