"""Label smoothing of one-hot training targets."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError
from ..utils import check_one_hot
from .preprocessor import Preprocessor


class LabelSmoothing(Preprocessor):
    """Replace one-hot labels by y_max at the true class, the rest uniform.

    Only active at fit time; y_max must exceed 1/K so the smoothed argmax
    still identifies the true class.
    """

    def __init__(self, y_max: float = 0.9, apply_fit: bool = True, apply_predict: bool = False):
        if not 0.0 < y_max <= 1.0:
            raise InvalidConfigError(f"y_max must be in (0, 1], got {y_max}")
        super().__init__(apply_fit=apply_fit, apply_predict=apply_predict)
        self.y_max = y_max

    def __call__(self, x: np.ndarray, y: np.ndarray | None = None):
        if y is None:
            return np.asarray(x, dtype=np.float64), None
        y = check_one_hot(y)
        k = y.shape[1]
        if self.y_max <= 1.0 / k:
            raise InvalidConfigError(
                f"y_max={self.y_max} must exceed 1/K={1.0 / k:.4f} to preserve argmax"
            )
        off = (1.0 - self.y_max) / (k - 1)
        smoothed = np.full_like(y, off)
        smoothed[y == 1.0] = self.y_max
        return np.asarray(x, dtype=np.float64), smoothed
