"""Universal adversarial perturbation shared across a whole input set."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError
from ..numerics import NormKind, project
from ..utils import rng_from
from .base import AttackResult, EvasionAttack


class UniversalPerturbation(EvasionAttack):
    """One perturbation fooling a target fraction of the input set.

    Visits the inputs in seeded random order; for every point the current
    perturbation fails to fool, the inner untargeted attack refines it, and
    the refined perturbation is projected back into the lp ball of radius
    eps. Stops once the fooling rate reaches 1 - delta or after max_iter
    passes. Batch-coupled by design: samples share the perturbation.
    """

    def __init__(
        self,
        classifier,
        inner_attack: EvasionAttack,
        delta: float = 0.2,
        eps: float = 10.0,
        norm: NormKind = NormKind.L2,
        max_iter: int = 20,
        seed: int = 0,
    ) -> None:
        super().__init__(classifier)
        if getattr(inner_attack, "targeted", False):
            raise InvalidConfigError("universal perturbation needs an untargeted inner attack")
        if not 0.0 < delta < 1.0:
            raise InvalidConfigError(f"delta must be in (0, 1), got {delta}")
        if eps <= 0 or max_iter < 1:
            raise InvalidConfigError("eps must be > 0 and max_iter >= 1")
        if norm not in (NormKind.L1, NormKind.L2, NormKind.LINF):
            raise InvalidConfigError("universal perturbation norm must be L1, L2 or LInf")
        self.inner_attack = inner_attack
        self.delta = delta
        self.eps = eps
        self.norm = norm
        self.max_iter = max_iter
        self.seed = seed

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        labels = self._resolve_labels(x, y)
        original = self.classifier.predict_classes(x)
        lo, hi = self.classifier.clip.x_min, self.classifier.clip.x_max
        n = x.shape[0]
        noise = np.zeros(x.shape[1])
        fooling_rate = 0.0
        iteration = 0
        while fooling_rate < 1.0 - self.delta and iteration < self.max_iter:
            order = rng_from(self.seed, "universal", iteration).permutation(n)
            for idx in order:
                shifted = np.clip(x[idx] + noise, lo, hi)
                if self.classifier.predict_classes(shifted[None, :])[0] != original[idx]:
                    continue
                refined = self.inner_attack.generate(shifted[None, :])
                adv = refined.x_adv[0]
                if self.classifier.predict_classes(adv[None, :])[0] != original[idx]:
                    noise = project(adv - x[idx], self.norm, self.eps)
            perturbed = np.clip(x + noise, lo, hi)
            fooling_rate = float(
                np.mean(self.classifier.predict_classes(perturbed) != original)
            )
            iteration += 1
        x_adv = np.clip(x + noise, lo, hi)
        extras = {"fooling_rate": fooling_rate, "noise": noise, "outer_iterations": iteration}
        return self._finalize(x, x_adv, labels, original, extras=extras)
