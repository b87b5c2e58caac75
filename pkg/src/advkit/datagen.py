"""Data generators feeding training loops one batch at a time."""

from __future__ import annotations

import math

from .data import Dataset
from .exceptions import InvalidConfigError, InvalidInputError
from .utils import rng_from


class DataGenerator:
    """Contract for batch sources consumed by fit_generator loops.

    A generator is a stateful single-consumer object: get_batch() returns the
    next (x, y) pair and is not safe for concurrent callers.
    """

    batch_size: int

    def get_batch(self):
        raise NotImplementedError

    def batches_per_epoch(self) -> int:
        raise NotImplementedError


class InMemoryDataGenerator(DataGenerator):
    """Cycles over an in-memory dataset with a seeded reshuffle per epoch.

    Batches never span an epoch boundary, so the last batch of an epoch may
    be short; one epoch's batches form the dataset exactly as a multiset.
    """

    def __init__(self, dataset: Dataset, batch_size: int, seed: int = 0) -> None:
        if batch_size < 1:
            raise InvalidConfigError("batch_size must be >= 1")
        if dataset.n == 0:
            raise InvalidInputError("cannot generate batches from an empty dataset")
        self.dataset = dataset
        self.batch_size = batch_size
        self.seed = seed
        self._rng = rng_from(seed, "datagen")
        self._order = self._rng.permutation(dataset.n)
        self._pos = 0

    def batches_per_epoch(self) -> int:
        return math.ceil(self.dataset.n / self.batch_size)

    def get_batch(self):
        if self._pos >= self.dataset.n:
            self._order = self._rng.permutation(self.dataset.n)
            self._pos = 0
        idx = self._order[self._pos : self._pos + self.batch_size]
        self._pos += len(idx)
        return self.dataset.x[idx], self.dataset.y[idx]
