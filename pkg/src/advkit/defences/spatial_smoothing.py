"""Local median filtering of image inputs."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import median_filter

from ..exceptions import InvalidConfigError, ShapeError
from .preprocessor import Preprocessor


class SpatialSmoothing(Preprocessor):
    """Replace each pixel by the median of its w x w window, per channel.

    Borders are reflected including the edge pixel (scipy's 'reflect' mode),
    matching x[0] -> x[1], x[-1] -> x[2] at the left border and symmetrically
    on the right. Inputs are flattened images; image_shape restores them.
    """

    def __init__(
        self,
        window: int,
        image_shape: tuple[int, int, int],
        apply_fit: bool = False,
        apply_predict: bool = True,
    ):
        if window < 1 or window % 2 == 0:
            raise InvalidConfigError(f"window must be an odd int >= 1, got {window}")
        super().__init__(apply_fit=apply_fit, apply_predict=apply_predict)
        self.window = window
        self.image_shape = tuple(image_shape)

    def __call__(self, x: np.ndarray, y: np.ndarray | None = None):
        x = np.asarray(x, dtype=np.float64)
        k1, k2, k3 = self.image_shape
        if x.ndim != 2 or x.shape[1] != k1 * k2 * k3:
            raise ShapeError(
                f"expected flattened images of width {k1 * k2 * k3}, got {x.shape}"
            )
        if self.window == 1:
            return x.copy(), y
        imgs = x.reshape(-1, k1, k2, k3)
        smoothed = median_filter(
            imgs, size=(1, self.window, self.window, 1), mode="reflect"
        )
        return smoothed.reshape(x.shape), y
