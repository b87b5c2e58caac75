"""DeepFool: iterative projection onto the nearest linearized class boundary."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError
from .base import AttackResult, EvasionAttack


class DeepFool(EvasionAttack):
    """Untargeted minimal-L2 attack via repeated linear boundary projection.

    Each iteration picks the class whose linearized boundary is nearest in
    L2 and steps exactly onto it; the final perturbation is scaled by
    (1 + overshoot) to push the sample across. Candidate classes whose
    gradient difference is numerically zero are skipped.
    """

    def __init__(self, classifier, max_iter: int = 100, overshoot: float = 0.02) -> None:
        super().__init__(classifier)
        if max_iter < 1:
            raise InvalidConfigError("max_iter must be >= 1")
        if overshoot < 0:
            raise InvalidConfigError("overshoot must be >= 0")
        self.max_iter = max_iter
        self.overshoot = overshoot

    def _attack_one(self, row: np.ndarray, lo: float, hi: float) -> np.ndarray:
        c0 = int(self.classifier.predict_classes(row[None, :])[0])
        x_adv = row.copy()
        for _ in range(self.max_iter):
            if int(self.classifier.predict_classes(x_adv[None, :])[0]) != c0:
                break
            z = self.classifier.predict(x_adv[None, :], logits=True)[0]
            grads = self.classifier.class_gradient(x_adv[None, :], logits=True)[0]
            best_ratio = np.inf
            best_step = None
            for k in range(self.classifier.nb_classes):
                if k == c0:
                    continue
                w = grads[k] - grads[c0]
                w_norm = float(np.sqrt((w**2).sum()))
                if w_norm < 1e-12:
                    continue
                f = abs(float(z[k] - z[c0]))
                if f / w_norm < best_ratio:
                    best_ratio = f / w_norm
                    best_step = (f / w_norm**2) * w
            if best_step is None:
                break  # every boundary degenerate; give up on this sample
            x_adv = np.clip(x_adv + best_step, lo, hi)
        return np.clip(row + (1.0 + self.overshoot) * (x_adv - row), lo, hi)

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        labels = self._resolve_labels(x, y)
        original = self.classifier.predict_classes(x)
        lo, hi = self.classifier.clip.x_min, self.classifier.clip.x_max
        x_adv = np.stack([self._attack_one(row, lo, hi) for row in x])
        return self._finalize(x, x_adv, labels, original)
