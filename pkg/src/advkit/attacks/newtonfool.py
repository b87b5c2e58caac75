"""NewtonFool: adaptive gradient descent on the predicted class probability."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError
from .base import AttackResult, EvasionAttack


class NewtonFool(EvasionAttack):
    """Shrink F_y at the prediction y = C(x) with an adaptive step size.

    The step delta = min(eta * ||x||_2 * ||grad F_y||, F_y - 1/K) lets the
    gradient term dominate while the sample is confidently classified and
    vanishes as F_y approaches the uniform level 1/K, at which point the
    update degenerates to a no-op and iteration stops.
    """

    def __init__(self, classifier, eta: float = 0.01, max_iter: int = 100) -> None:
        super().__init__(classifier)
        if eta <= 0:
            raise InvalidConfigError(f"eta must be > 0, got {eta}")
        if max_iter < 1:
            raise InvalidConfigError("max_iter must be >= 1")
        self.eta = eta
        self.max_iter = max_iter

    def _attack_one(self, row: np.ndarray, lo: float, hi: float) -> np.ndarray:
        y = int(self.classifier.predict_classes(row[None, :])[0])
        k = self.classifier.nb_classes
        x_norm = float(np.sqrt((row**2).sum()))
        x_adv = row.copy()
        for _ in range(self.max_iter):
            prob_y = float(self.classifier.predict(x_adv[None, :])[0, y])
            grad = self.classifier.class_gradient(x_adv[None, :], label=y)[0, 0]
            grad_norm = float(np.sqrt((grad**2).sum()))
            if grad_norm < 1e-12:
                break
            delta = min(self.eta * x_norm * grad_norm, prob_y - 1.0 / k)
            if delta <= 0:
                break
            x_adv = np.clip(x_adv - delta * grad / grad_norm**2, lo, hi)
        return x_adv

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        labels = self._resolve_labels(x, y)
        original = self.classifier.predict_classes(x)
        lo, hi = self.classifier.clip.x_min, self.classifier.clip.x_max
        x_adv = np.stack([self._attack_one(row, lo, hi) for row in x])
        return self._finalize(x, x_adv, labels, original)
