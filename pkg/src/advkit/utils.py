"""Seed derivation, label encoding and small shared helpers."""

from __future__ import annotations

import hashlib

import numpy as np

from .exceptions import EncodingError, InvalidInputError


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary labels (platform independent).

    Used wherever a stage needs its own random stream derived from a global
    seed, e.g. derive_seed(seed, "attack", sample_index).
    """
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, (bytes, bytearray)):
            h.update(bytes(part))
        else:
            h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "big") >> 1


def rng_from(*parts) -> np.random.Generator:
    """Fresh generator seeded from derive_seed(*parts)."""
    return np.random.default_rng(derive_seed(*parts))


def sample_seed(seed: int, row: np.ndarray) -> int:
    """Per-sample seed derived from a base seed and the sample's content.

    Content-based derivation keeps stochastic per-sample attacks batch
    invariant: a sample drawn alone or inside a batch sees the same stream.
    """
    return derive_seed(seed, np.ascontiguousarray(row, dtype=np.float64).tobytes())


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Encode integer labels as one-hot rows."""
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise InvalidInputError("label out of range for one-hot encoding")
    out = np.zeros((labels.size, num_classes), dtype=np.float64)
    out[np.arange(labels.size), labels] = 1.0
    return out


def check_one_hot(y: np.ndarray, num_classes: int | None = None) -> np.ndarray:
    """Validate that every row of y is a standard basis vector."""
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim != 2:
        raise EncodingError(f"labels must be 2-d one-hot, got shape {arr.shape}")
    if num_classes is not None and arr.shape[1] != num_classes:
        raise EncodingError(
            f"labels have {arr.shape[1]} columns, expected {num_classes}"
        )
    ok = np.all(np.isin(arr, (0.0, 1.0))) and np.all(arr.sum(axis=1) == 1.0)
    if not ok:
        raise EncodingError("labels are not one-hot encoded")
    return arr
