"""Dense float64 array primitives: clipping, norms, ball projection, softmax, KL.

All operations are pure functions over numpy arrays in row-major float64; no
broadcasting beyond scalar-array ops. Gradients are hand-derived elsewhere,
so nothing here builds autodiff graphs.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .exceptions import (
    InvalidInputError,
    InvalidRangeError,
    KlUndefinedError,
    UnsupportedNormError,
)


class NormKind(Enum):
    """The lp norms admitted by attacks, projections and metrics."""

    L0 = "0"
    L1 = "1"
    L2 = "2"
    LINF = "inf"

    @classmethod
    def from_string(cls, s: str) -> "NormKind":
        key = str(s).strip().lower()
        aliases = {
            "0": cls.L0, "l0": cls.L0,
            "1": cls.L1, "l1": cls.L1,
            "2": cls.L2, "l2": cls.L2,
            "inf": cls.LINF, "linf": cls.LINF, "infinity": cls.LINF,
        }
        if key not in aliases:
            raise UnsupportedNormError(f"unknown norm {s!r}")
        return aliases[key]

    def dual(self) -> "NormKind":
        """Dual exponent q with 1/p + 1/q = 1 (L1 <-> LInf, L2 self-dual)."""
        if self is NormKind.L1:
            return NormKind.LINF
        if self is NormKind.LINF:
            return NormKind.L1
        if self is NormKind.L2:
            return NormKind.L2
        raise UnsupportedNormError("L0 has no dual exponent")


def as_tensor(x, name: str = "x") -> np.ndarray:
    """Coerce to a float64 array and reject non-finite values."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf")
    return arr


def clip(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Componentwise clip of x to [lo, hi]."""
    if lo > hi:
        raise InvalidRangeError(f"clip range is empty: lo={lo} > hi={hi}")
    return np.clip(np.asarray(x, dtype=np.float64), lo, hi)


def lp_norm(x: np.ndarray, p: NormKind) -> float:
    """lp norm of the flattened tensor; L0 counts nonzero components."""
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InvalidInputError("lp_norm of an empty tensor")
    if p is NormKind.L0:
        return float(np.count_nonzero(arr))
    if p is NormKind.L1:
        return float(np.abs(arr).sum())
    if p is NormKind.L2:
        return float(np.sqrt(np.square(arr).sum()))
    return float(np.abs(arr).max())


def row_norms(x: np.ndarray, p: NormKind) -> np.ndarray:
    """Per-row lp norms of a 2-d array (batch counterpart of lp_norm)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError("row_norms expects a 2-d array")
    if p is NormKind.L0:
        return np.count_nonzero(arr, axis=1).astype(np.float64)
    if p is NormKind.L1:
        return np.abs(arr).sum(axis=1)
    if p is NormKind.L2:
        return np.sqrt(np.square(arr).sum(axis=1))
    return np.abs(arr).max(axis=1) if arr.shape[1] else np.zeros(arr.shape[0])


def _project_l1(x: np.ndarray, eps: float) -> np.ndarray:
    """Exact Euclidean projection onto a L1 ball via sorted simplex projection."""
    flat = x.ravel()
    if np.abs(flat).sum() <= eps:
        return x.copy()
    mags = np.sort(np.abs(flat))[::-1]
    css = np.cumsum(mags)
    idx = np.arange(1, flat.size + 1)
    candidates = np.nonzero(mags * idx > (css - eps))[0]
    rho = candidates[-1]
    theta = (css[rho] - eps) / (rho + 1.0)
    out = np.sign(flat) * np.maximum(np.abs(flat) - theta, 0.0)
    return out.reshape(x.shape)


def project(x: np.ndarray, p: NormKind, eps: float) -> np.ndarray:
    """Project x onto the lp ball of radius eps (closest point in L2 distance).

    L2 scales by min(1, eps/||x||2), LInf clips at +-eps, L1 uses the exact
    sort-based simplex projection.
    """
    if eps < 0:
        raise InvalidRangeError(f"projection radius must be >= 0, got {eps}")
    arr = np.asarray(x, dtype=np.float64)
    if p is NormKind.L0:
        raise UnsupportedNormError("projection onto L0 balls is not defined")
    if p is NormKind.LINF:
        return np.clip(arr, -eps, eps)
    if p is NormKind.L2:
        norm = np.sqrt(np.square(arr).sum())
        if norm <= eps:
            return arr.copy()
        return arr * (eps / norm)
    return _project_l1(arr, eps)


def project_rows(x: np.ndarray, p: NormKind, eps: float) -> np.ndarray:
    """Row-wise lp ball projection of a 2-d array of perturbations."""
    arr = np.asarray(x, dtype=np.float64)
    if p is NormKind.LINF:
        return np.clip(arr, -eps, eps)
    return np.stack([project(row, p, eps) for row in arr])


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-stable softmax of a vector or a batch of row vectors."""
    arr = np.asarray(z, dtype=np.float64)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise InvalidInputError(
            f"softmax needs rows of length >= 2, got shape {arr.shape}"
        )
    shifted = arr - arr.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)
    return out[0] if squeeze else out


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) with the 0*log(0/q) = 0 convention.

    Raises KlUndefinedError when q puts zero mass where p does not; callers
    working with model outputs should floor probabilities first.
    """
    pa = np.asarray(p, dtype=np.float64).ravel()
    qa = np.asarray(q, dtype=np.float64).ravel()
    if pa.shape != qa.shape or pa.size == 0:
        raise InvalidInputError("p and q must be non-empty and the same length")
    for name, v in (("p", pa), ("q", qa)):
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-8:
            raise InvalidInputError(f"{name} is not a probability vector")
    support = pa > 0
    if np.any(qa[support] == 0.0):
        raise KlUndefinedError("q has zero mass where p is positive")
    return float(np.sum(pa[support] * np.log(pa[support] / qa[support])))
