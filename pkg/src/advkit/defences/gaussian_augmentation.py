"""Gaussian noise augmentation of training data."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError
from ..utils import rng_from, sample_seed
from .preprocessor import Preprocessor


class GaussianAugmentation(Preprocessor):
    """Add seeded Gaussian noise, optionally enlarging the set with copies.

    In augment mode the output keeps the originals first and appends
    round(ratio * n) noisy copies (labels duplicated when given), so
    ratio-based downstream splits stay stratified. Without augmentation the
    noise is applied in place. Labels are never modified. The gradient at a
    fixed draw is exact: identity.
    """

    def __init__(
        self,
        sigma: float = 0.1,
        ratio: float = 1.0,
        augment: bool = True,
        seed: int = 0,
        clip_lo: float | None = 0.0,
        clip_hi: float | None = 1.0,
        apply_fit: bool = True,
        apply_predict: bool = False,
    ):
        if sigma < 0:
            raise InvalidConfigError(f"sigma must be >= 0, got {sigma}")
        if ratio < 0:
            raise InvalidConfigError(f"ratio must be >= 0, got {ratio}")
        super().__init__(apply_fit=apply_fit, apply_predict=apply_predict)
        self.sigma = sigma
        self.ratio = ratio
        self.augment = augment
        self.seed = seed
        self.clip_lo = clip_lo
        self.clip_hi = clip_hi

    def _noisy(self, x: np.ndarray) -> np.ndarray:
        rng = rng_from(sample_seed(self.seed, x), "gauss")
        noisy = x + rng.normal(0.0, self.sigma, size=x.shape)
        if self.clip_lo is not None:
            noisy = np.clip(noisy, self.clip_lo, self.clip_hi)
        return noisy

    def __call__(self, x: np.ndarray, y: np.ndarray | None = None):
        x = np.asarray(x, dtype=np.float64)
        if not self.augment:
            return self._noisy(x), y
        n_copies = int(round(self.ratio * x.shape[0]))
        # copy j derives from original j mod n, keeping the pairing transparent
        chosen = np.resize(np.arange(x.shape[0]), n_copies)
        copies = self._noisy(x[chosen])
        out_x = np.concatenate([x, copies])
        out_y = None if y is None else np.concatenate([y, np.asarray(y)[chosen]])
        return out_x, out_y
