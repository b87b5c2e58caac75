"""Thermometer discretization of input features."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError, ShapeError
from .preprocessor import Preprocessor


class ThermometerEncoding(Preprocessor):
    """Encode each feature in [0,1] as b bits with trailing ones.

    The domain splits into b buckets; a value in bucket m (1-based, last
    bucket closed at 1.0) becomes m ones filled from the back of its b-bit
    block, so every valid encoding has at least one set bit. Feature order
    is preserved: feature i occupies output columns [i*b, (i+1)*b).
    """

    def __init__(self, num_buckets: int, apply_fit: bool = True, apply_predict: bool = True):
        if num_buckets < 2:
            raise InvalidConfigError(f"num_buckets must be >= 2, got {num_buckets}")
        super().__init__(apply_fit=apply_fit, apply_predict=apply_predict)
        self.num_buckets = num_buckets

    def bucket_indices(self, x: np.ndarray) -> np.ndarray:
        """0-based bucket index per component; 1.0 falls in the last bucket."""
        x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
        return np.minimum(
            np.floor(x * self.num_buckets).astype(np.int64), self.num_buckets - 1
        )

    def __call__(self, x: np.ndarray, y: np.ndarray | None = None):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise ShapeError(f"expected 2-d inputs, got shape {x.shape}")
        n, width = x.shape
        b = self.num_buckets
        buckets = self.bucket_indices(x)  # (n, width), values 0..b-1
        # bit j (within a block) is set iff j >= b - (bucket + 1)
        positions = np.arange(b)
        bits = positions[None, None, :] >= (b - 1 - buckets)[:, :, None]
        return bits.astype(np.float64).reshape(n, width * b), y

    def estimate_gradient(self, x: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Straight-through: sum each feature's b bit-gradients back to it."""
        x = np.asarray(x, dtype=np.float64)
        grad = np.asarray(grad, dtype=np.float64)
        n, width = x.shape
        if grad.shape != (n, width * self.num_buckets):
            raise ShapeError(
                f"gradient shape {grad.shape} does not match encoded shape "
                f"{(n, width * self.num_buckets)}"
            )
        return grad.reshape(n, width, self.num_buckets).sum(axis=2)
