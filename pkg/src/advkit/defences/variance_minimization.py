"""Total variance minimization reconstruction of image inputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import InvalidConfigError, ShapeError, SolverDivergenceError
from ..numerics import NormKind
from ..utils import rng_from, sample_seed
from .preprocessor import Preprocessor


@dataclass
class TvmDiagnostics:
    initial_objective: float
    final_objective: float
    iterations: int
    accepted_steps: int


def _tv_value(z: np.ndarray, p: NormKind) -> float:
    """Anisotropic total variation: p-norms of adjacent row/column differences."""
    total = 0.0
    for k in range(z.shape[2]):
        dr = z[1:, :, k] - z[:-1, :, k]
        dc = z[:, 1:, k] - z[:, :-1, k]
        if p is NormKind.L1:
            total += np.abs(dr).sum() + np.abs(dc).sum()
        else:
            total += np.sqrt(np.square(dr).sum(axis=1)).sum()
            total += np.sqrt(np.square(dc).sum(axis=0)).sum()
    return float(total)


def _tv_subgradient(z: np.ndarray, p: NormKind) -> np.ndarray:
    g = np.zeros_like(z)
    tiny = 1e-12
    for k in range(z.shape[2]):
        dr = z[1:, :, k] - z[:-1, :, k]
        dc = z[:, 1:, k] - z[:, :-1, k]
        if p is NormKind.L1:
            sr = np.sign(dr)
            sc = np.sign(dc)
        else:
            rn = np.sqrt(np.square(dr).sum(axis=1, keepdims=True))
            cn = np.sqrt(np.square(dc).sum(axis=0, keepdims=True))
            sr = dr / np.maximum(rn, tiny)
            sc = dc / np.maximum(cn, tiny)
        g[1:, :, k] += sr
        g[:-1, :, k] -= sr
        g[:, 1:, k] += sc
        g[:, :-1, k] -= sc
    return g


def _objective(z, x, mask, lam, p) -> float:
    fit = float(np.sqrt(np.square(mask * (z - x)).sum()))
    return fit + lam * _tv_value(z, p)


def _fit_subgradient(z, x, mask) -> np.ndarray:
    r = mask * (z - x)
    norm = np.sqrt(np.square(r).sum())
    if norm < 1e-12:
        return np.zeros_like(z)
    return r / norm


def tvm_denoise_image(
    img: np.ndarray,
    mask: np.ndarray,
    lam: float,
    norm: NormKind,
    solver_iters: int,
    step: float,
    clip_lo: float,
    clip_hi: float,
) -> tuple[np.ndarray, TvmDiagnostics]:
    """Minimize ||mask*(z - x)||_2 + lam*TV_p(z) by projected subgradient descent.

    Steps that would increase the objective are rejected (bookkeeping keeps
    the objective non-increasing across accepted iterations); ten consecutive
    rejections above the running best abort the solve as divergence unless
    the solution already improved on the start, in which case we stop early.
    """
    z = img.copy()
    best = _objective(z, img, mask, lam, norm)
    initial = best
    accepted = 0
    consecutive_bad = 0
    it = 0
    for it in range(1, solver_iters + 1):
        g = _fit_subgradient(z, img, mask) + lam * _tv_subgradient(z, norm)
        z_new = np.clip(z - step * g, clip_lo, clip_hi)
        value = _objective(z_new, img, mask, lam, norm)
        if value <= best:
            z = z_new
            best = value
            accepted += 1
            consecutive_bad = 0
        else:
            consecutive_bad += 1
            step *= 0.5
            if consecutive_bad >= 10:
                if best <= initial:
                    break  # converged: no descent direction left at any step size
                raise SolverDivergenceError(
                    f"TVM objective increased 10 consecutive steps "
                    f"(initial={initial:.6g}, best={best:.6g}, iteration={it})"
                )
    return z, TvmDiagnostics(initial, best, it, accepted)


class TotalVarianceMinimization(Preprocessor):
    """Reconstruct each image from a random pixel subset under a TV penalty.

    The Bernoulli keep-mask is drawn per pixel with probability prob from a
    stream derived from (seed, input content), so the transform is a pure
    function of its input. Straight-through identity gradient.
    """

    def __init__(
        self,
        image_shape: tuple[int, int, int],
        prob: float = 0.3,
        lam: float = 0.5,
        norm: NormKind = NormKind.L2,
        solver_iters: int = 50,
        step: float = 0.05,
        seed: int = 0,
        clip_lo: float = 0.0,
        clip_hi: float = 1.0,
        apply_fit: bool = False,
        apply_predict: bool = True,
    ):
        if not 0.0 < prob <= 1.0:
            raise InvalidConfigError(f"prob must be in (0, 1], got {prob}")
        if lam <= 0:
            raise InvalidConfigError(f"lambda must be > 0, got {lam}")
        if norm not in (NormKind.L1, NormKind.L2):
            raise InvalidConfigError("TV norm must be L1 or L2")
        if solver_iters < 1 or step <= 0:
            raise InvalidConfigError("solver_iters must be >= 1 and step > 0")
        super().__init__(apply_fit=apply_fit, apply_predict=apply_predict)
        self.image_shape = tuple(image_shape)
        self.prob = prob
        self.lam = lam
        self.norm = norm
        self.solver_iters = solver_iters
        self.step = step
        self.seed = seed
        self.clip_lo = clip_lo
        self.clip_hi = clip_hi
        self.last_diagnostics: list[TvmDiagnostics] = []

    def __call__(self, x: np.ndarray, y: np.ndarray | None = None):
        x = np.asarray(x, dtype=np.float64)
        k1, k2, k3 = self.image_shape
        if x.ndim != 2 or x.shape[1] != k1 * k2 * k3:
            raise ShapeError(
                f"expected flattened images of width {k1 * k2 * k3}, got {x.shape}"
            )
        out = np.empty_like(x)
        self.last_diagnostics = []
        for i, row in enumerate(x):
            rng = rng_from(sample_seed(self.seed, row), "tvm-mask")
            img = row.reshape(k1, k2, k3)
            mask = (rng.random(img.shape) < self.prob).astype(np.float64)
            z, diag = tvm_denoise_image(
                img, mask, self.lam, self.norm, self.solver_iters,
                self.step, self.clip_lo, self.clip_hi,
            )
            out[i] = z.ravel()
            self.last_diagnostics.append(diag)
        return out, y
