"""Fast gradient method, including the minimal-perturbation variant."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError, UnsupportedNormError
from ..numerics import NormKind, row_norms
from .base import AttackResult, EvasionAttack


def gradient_direction(grad: np.ndarray, norm: NormKind) -> np.ndarray:
    """Unit attack direction per row: sign for LInf, p-normalized otherwise.

    Rows with zero gradient yield a zero direction, so the attack leaves them
    unchanged rather than dividing by zero.
    """
    if norm is NormKind.LINF:
        return np.sign(grad)
    if norm in (NormKind.L1, NormKind.L2):
        norms = row_norms(grad, norm)
        out = np.zeros_like(grad)
        nz = norms > 0
        out[nz] = grad[nz] / norms[nz][:, None]
        return out
    raise UnsupportedNormError("fast gradient supports L1, L2 and LInf only")


class FastGradientMethod(EvasionAttack):
    """One-step loss-gradient attack of strength eps.

    Untargeted mode ascends the loss of the current prediction; targeted mode
    descends toward the requested class. The minimal variant rescans
    strengths k * eps_step until the first success per sample or eps_max is
    exceeded, in which case that sample is returned unchanged.
    """

    def __init__(
        self,
        classifier,
        norm: NormKind = NormKind.LINF,
        eps: float = 0.3,
        targeted: bool = False,
        minimal: bool = False,
        eps_step: float = 0.1,
        eps_max: float = 1.0,
    ) -> None:
        super().__init__(classifier)
        if eps < 0:
            raise InvalidConfigError(f"eps must be >= 0, got {eps}")
        if norm not in (NormKind.L1, NormKind.L2, NormKind.LINF):
            raise UnsupportedNormError("fast gradient supports L1, L2 and LInf only")
        if minimal and (eps_step <= 0 or eps_max <= 0):
            raise InvalidConfigError("minimal mode needs eps_step > 0 and eps_max > 0")
        self.norm = norm
        self.eps = eps
        self.targeted = targeted
        self.minimal = minimal
        self.eps_step = eps_step
        self.eps_max = eps_max

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        labels = self._resolve_labels(x, y)
        original = self.classifier.predict_classes(x)
        lo, hi = self.classifier.clip.x_min, self.classifier.clip.x_max
        grad = self.classifier.loss_gradient(x, labels)
        sign = -1.0 if self.targeted else 1.0
        direction = sign * gradient_direction(grad, self.norm)
        if not self.minimal:
            x_adv = np.clip(x + self.eps * direction, lo, hi)
            return self._finalize(x, x_adv, labels, original)
        return self._generate_minimal(x, labels, original, direction, lo, hi)

    def _generate_minimal(self, x, labels, original, direction, lo, hi) -> AttackResult:
        x_adv = x.copy()
        pending = np.ones(x.shape[0], dtype=bool)
        targets = np.argmax(labels, axis=1)
        k = 1
        while np.any(pending) and k * self.eps_step <= self.eps_max:
            candidate = np.clip(x[pending] + k * self.eps_step * direction[pending], lo, hi)
            pred = self.classifier.predict_classes(candidate)
            if self.targeted:
                hit = pred == targets[pending]
            else:
                hit = pred != original[pending]
            rows = np.nonzero(pending)[0]
            x_adv[rows[hit]] = candidate[hit]
            pending[rows[hit]] = False
            k += 1
        return self._finalize(x, x_adv, labels, original)
