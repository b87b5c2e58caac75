"""Jacobian saliency map attack: targeted, L0-budgeted feature pair updates."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError
from .base import AttackResult, EvasionAttack


class SaliencyMapMethod(EvasionAttack):
    """Perturb the most salient feature pair by theta until the target wins.

    The saliency score over a pair {i, j} is |alpha * beta| with
    alpha = dF_y/dx_i + dF_y/dx_j and beta = -alpha (all other-class
    probability mass mirrors the target's), so the best admissible pair is
    simply the two largest target-probability gradients in the search space
    (most negative two for negative theta). Terminates on success, an
    exhausted feature budget floor(gamma * N), a search space below two
    features, or no admissible pair.
    """

    targeted = True

    def __init__(self, classifier, theta: float = 0.1, gamma: float = 1.0) -> None:
        super().__init__(classifier)
        if theta == 0:
            raise InvalidConfigError("theta must be nonzero")
        if not 0.0 < gamma <= 1.0:
            raise InvalidConfigError(f"gamma must be in (0, 1], got {gamma}")
        self.theta = theta
        self.gamma = gamma

    def _attack_one(self, row: np.ndarray, target: int, lo: float, hi: float) -> np.ndarray:
        n_feat = row.size
        budget = int(np.floor(self.gamma * n_feat))
        positive = self.theta > 0
        bound = hi if positive else lo
        x = row.copy()
        search = {i for i in range(n_feat) if x[i] != bound}
        modified: set[int] = set()
        while (
            self.classifier.predict_classes(x[None, :])[0] != target
            and len(search) > 1
        ):
            grad = self.classifier.class_gradient(x[None, :], label=target)[0, 0]
            idx = sorted(search, key=lambda k: grad[k], reverse=positive)
            i, j = idx[0], idx[1]
            alpha = grad[i] + grad[j]
            admissible = alpha > 0 if positive else alpha < 0
            if not admissible:
                break  # saliency map found no pair: s_max = -inf
            modified.update((i, j))
            if len(modified) > budget:
                break
            x[i] = np.clip(x[i] + self.theta, lo, hi)
            x[j] = np.clip(x[j] + self.theta, lo, hi)
            search -= {k for k in (i, j) if x[k] == bound}
        return x

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        labels = self._resolve_labels(x, y)
        targets = np.argmax(labels, axis=1)
        original = self.classifier.predict_classes(x)
        lo, hi = self.classifier.clip.x_min, self.classifier.clip.x_max
        x_adv = np.stack(
            [self._attack_one(row, int(t), lo, hi) for row, t in zip(x, targets)]
        )
        return self._finalize(x, x_adv, labels, original)
