"""Iterative gradient attacks with ball projection: PGD and its BIM special case."""

from __future__ import annotations

import warnings

import numpy as np

from ..exceptions import InvalidConfigError, UnsupportedNormError
from ..numerics import NormKind, project_rows
from ..utils import rng_from, sample_seed
from .base import AttackResult, EvasionAttack
from .fast_gradient import gradient_direction


def random_ball_point(rng: np.random.Generator, dim: int, norm: NormKind, radius: float) -> np.ndarray:
    """Uniform sample from the lp ball of the given radius."""
    if norm is NormKind.LINF:
        return rng.uniform(-radius, radius, size=dim)
    if norm is NormKind.L2:
        direction = rng.normal(size=dim)
        direction /= max(np.sqrt((direction**2).sum()), 1e-30)
        return direction * radius * rng.random() ** (1.0 / dim)
    if norm is NormKind.L1:
        mags = rng.exponential(size=dim)
        mags /= mags.sum()
        point = rng.choice((-1.0, 1.0), size=dim) * mags
        return point * radius * rng.random() ** (1.0 / dim)
    raise UnsupportedNormError("random ball sampling needs L1, L2 or LInf")


class ProjectedGradientDescent(EvasionAttack):
    """Repeated FGM steps, re-projected onto the eps-ball after every step.

    Optional random restarts start uniformly inside the ball and the best
    run per sample is kept, judged by final loss. The targeted flag flips
    the step direction (needed for least-likely-class style targeting).
    """

    def __init__(
        self,
        classifier,
        norm: NormKind = NormKind.LINF,
        eps: float = 0.3,
        eps_step: float = 0.1,
        max_iter: int = 10,
        num_random_init: int = 0,
        targeted: bool = False,
        seed: int = 0,
    ) -> None:
        super().__init__(classifier)
        if norm not in (NormKind.L1, NormKind.L2, NormKind.LINF):
            raise UnsupportedNormError("PGD supports L1, L2 and LInf only")
        if eps <= 0 or eps_step <= 0:
            raise InvalidConfigError("eps and eps_step must be > 0")
        if max_iter < 1 or num_random_init < 0:
            raise InvalidConfigError("max_iter must be >= 1, num_random_init >= 0")
        if eps_step > eps:
            warnings.warn(f"eps_step={eps_step} exceeds eps={eps}")
        self.norm = norm
        self.eps = eps
        self.eps_step = eps_step
        self.max_iter = max_iter
        self.num_random_init = num_random_init
        self.targeted = targeted
        self.seed = seed

    def _run(self, x, start, labels) -> np.ndarray:
        lo, hi = self.classifier.clip.x_min, self.classifier.clip.x_max
        sign = -1.0 if self.targeted else 1.0
        x_t = start.copy()
        for _ in range(self.max_iter):
            grad = self.classifier.loss_gradient(x_t, labels)
            x_t = x_t + sign * self.eps_step * gradient_direction(grad, self.norm)
            x_t = np.clip(x + project_rows(x_t - x, self.norm, self.eps), lo, hi)
        return x_t

    def _final_losses(self, x_t, labels) -> np.ndarray:
        p = self.classifier.predict(x_t)
        py = np.maximum((p * labels).sum(axis=1), 1e-300)
        return -np.log(py)

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        labels = self._resolve_labels(x, y)
        original = self.classifier.predict_classes(x)
        lo, hi = self.classifier.clip.x_min, self.classifier.clip.x_max
        runs = max(1, self.num_random_init)
        best_x = None
        best_loss = None
        for run in range(runs):
            if self.num_random_init > 0:
                start = np.empty_like(x)
                for i, row in enumerate(x):
                    rng = rng_from(sample_seed(self.seed, row), "pgd-init", run)
                    start[i] = row + random_ball_point(rng, x.shape[1], self.norm, self.eps)
                start = np.clip(start, lo, hi)
            else:
                start = x
            x_t = self._run(x, start, labels)
            loss = self._final_losses(x_t, labels)
            if best_x is None:
                best_x, best_loss = x_t, loss
            else:
                # keep the stronger run per sample: higher loss when pushing
                # away from the label, lower loss when homing in on a target
                better = loss < best_loss if self.targeted else loss > best_loss
                best_x[better] = x_t[better]
                best_loss[better] = loss[better]
        return self._finalize(x, best_x, labels, original)


class BasicIterativeMethod(ProjectedGradientDescent):
    """Iterative FGSM with LInf projection and no random start."""

    def __init__(
        self,
        classifier,
        eps: float = 0.3,
        eps_step: float = 0.1,
        max_iter: int = 10,
        targeted: bool = False,
    ) -> None:
        super().__init__(
            classifier,
            norm=NormKind.LINF,
            eps=eps,
            eps_step=eps_step,
            max_iter=max_iter,
            num_random_init=0,
            targeted=targeted,
        )


def least_likely_targets(classifier, x: np.ndarray) -> np.ndarray:
    """One-hot targets for the class each sample scores lowest on."""
    from ..utils import one_hot

    probs = classifier.predict(x)
    return one_hot(np.argmin(probs, axis=1), classifier.nb_classes)
