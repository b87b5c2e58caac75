"""Virtual adversarial method: directions of maximal output divergence."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError
from ..utils import rng_from, sample_seed
from .base import AttackResult, EvasionAttack

_PROB_FLOOR = 1e-12  # degenerate model outputs would make the KL undefined


def _kl_rows(p: np.ndarray, q_rows: np.ndarray) -> np.ndarray:
    """KL(p || q) for one reference row against a matrix of q rows."""
    p = np.maximum(p, _PROB_FLOOR)
    q_rows = np.maximum(q_rows, _PROB_FLOOR)
    return (p * np.log(p / q_rows)).sum(axis=1)


class VirtualAdversarialMethod(EvasionAttack):
    """Find a unit direction maximizing KL[F(x) || F(x + d)] by coordinate
    finite differences, then output clip(x + eps * d).

    Not aimed at misclassification: the samples serve adversarial training
    toward local distributional smoothness.
    """

    def __init__(
        self, classifier, eps: float = 0.1, xi: float = 1e-6, max_iter: int = 1, seed: int = 0
    ) -> None:
        super().__init__(classifier)
        if eps <= 0:
            raise InvalidConfigError("eps must be > 0")
        if xi <= 0:
            raise InvalidConfigError("xi must be > 0")
        if max_iter < 1:
            raise InvalidConfigError("max_iter must be >= 1")
        self.eps = eps
        self.xi = xi
        self.max_iter = max_iter
        self.seed = seed

    def unit_direction(self, row: np.ndarray) -> np.ndarray:
        """The unit vector d after the finite-difference ascent rounds."""
        n_feat = row.size
        rng = rng_from(sample_seed(self.seed, row), "vat-init")
        d = rng.standard_normal(n_feat)
        d /= np.sqrt((d**2).sum())
        p_ref = self.classifier.predict(row[None, :])[0]
        for _ in range(self.max_iter):
            probes = np.tile(row + d, (n_feat + 1, 1))
            probes[1:] += self.xi * np.eye(n_feat)
            q = self.classifier.predict(probes)
            kls = _kl_rows(p_ref, q)
            d_new = d + (kls[1:] - kls[0]) / self.xi
            d = d_new / np.sqrt((d_new**2).sum())
        return d

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        labels = self._resolve_labels(x, y)
        original = self.classifier.predict_classes(x)
        lo, hi = self.classifier.clip.x_min, self.classifier.clip.x_max
        x_adv = np.stack(
            [np.clip(row + self.eps * self.unit_direction(row), lo, hi) for row in x]
        )
        return self._finalize(x, x_adv, labels, original)
