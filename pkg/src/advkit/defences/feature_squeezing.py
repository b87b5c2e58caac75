"""Bit-depth reduction of input features."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError
from .preprocessor import Preprocessor


class FeatureSqueezing(Preprocessor):
    """Quantize [0,1]-scaled features to b bits: floor(x*(2^b-1)) / (2^b-1).

    Inputs are expected in [0,1] (the harness rescales by the clip values).
    Fitting has no effect; the straight-through gradient is the identity.
    """

    def __init__(self, bit_depth: int, apply_fit: bool = False, apply_predict: bool = True):
        if not 1 <= bit_depth <= 64:
            raise InvalidConfigError(f"bit_depth must be in [1, 64], got {bit_depth}")
        super().__init__(apply_fit=apply_fit, apply_predict=apply_predict)
        self.bit_depth = bit_depth

    def __call__(self, x: np.ndarray, y: np.ndarray | None = None):
        x = np.asarray(x, dtype=np.float64)
        m = 2.0 ** self.bit_depth - 1.0
        # the 1e-6 nudge snaps float noise so grid points are exact fixed points
        k = np.floor(np.clip(x, 0.0, 1.0) * m + 1e-6)
        return k / m, y
