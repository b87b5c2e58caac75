"""Dataset container shared by training, attacks and the harness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInputError, ShapeError
from .utils import check_one_hot


@dataclass
class Dataset:
    """A batch of flattened inputs with one-hot labels.

    Images are stored flattened; their original (height, width, channels)
    is kept in image_shape so image-only defences and attacks can reshape.
    """

    x: np.ndarray
    y: np.ndarray
    image_shape: tuple[int, int, int] | None = field(default=None)

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.x.ndim != 2:
            raise ShapeError(f"dataset x must be 2-d, got shape {self.x.shape}")
        if self.x.shape[0] == 0:
            raise InvalidInputError("dataset is empty")
        if not np.all(np.isfinite(self.x)):
            raise InvalidInputError("dataset x contains NaN or Inf")
        self.y = check_one_hot(self.y)
        if self.y.shape[0] != self.x.shape[0]:
            raise ShapeError("x and y row counts differ")
        if self.image_shape is not None:
            k1, k2, k3 = self.image_shape
            if k1 * k2 * k3 != self.x.shape[1]:
                raise ShapeError("image_shape does not match flattened width")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def input_dim(self) -> int:
        return self.x.shape[1]

    @property
    def num_classes(self) -> int:
        return self.y.shape[1]

    def labels(self) -> np.ndarray:
        """Integer labels (argmax of the one-hot rows)."""
        return np.argmax(self.y, axis=1)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.x[idx], self.y[idx], image_shape=self.image_shape)
