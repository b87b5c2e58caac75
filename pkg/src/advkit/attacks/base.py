"""Shared attack plumbing: result records, label resolution, norm accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import InvalidInputError, InvalidLabelError
from ..numerics import NormKind, row_norms
from ..utils import check_one_hot, one_hot


@dataclass
class AttackResult:
    """Outcome of one attack invocation on a batch.

    x_adv rows are always inside the classifier's clip range. queries counts
    model evaluations for black-box attacks (zeros elsewhere). norms holds
    per-sample perturbation norms for L0/L1/L2/LInf.
    """

    x_adv: np.ndarray
    success: np.ndarray
    queries: np.ndarray
    norms: dict[NormKind, np.ndarray]
    extras: dict = field(default_factory=dict)

    @property
    def success_rate(self) -> float:
        return float(np.mean(self.success)) if self.success.size else 0.0


def perturbation_norms(x: np.ndarray, x_adv: np.ndarray) -> dict[NormKind, np.ndarray]:
    diff = np.asarray(x_adv, dtype=np.float64) - np.asarray(x, dtype=np.float64)
    return {p: row_norms(diff, p) for p in NormKind}


class EvasionAttack:
    """Base class: an attack is a pure map (inputs, targets) -> AttackResult."""

    targeted: bool = False

    def __init__(self, classifier) -> None:
        self.classifier = classifier

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        raise NotImplementedError

    # ------------------------------------------------------------ shared steps

    def _check_inputs(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise InvalidInputError(f"attack inputs must be non-empty 2-d, got {arr.shape}")
        return arr

    def _resolve_labels(self, x: np.ndarray, y: np.ndarray | None) -> np.ndarray:
        """Targets for targeted attacks, else provided or predicted labels.

        Untargeted attacks never default to true labels (the caller may still
        pass them, accepting the label-leaking caveat).
        """
        if y is None:
            if self.targeted:
                raise InvalidLabelError("targeted attack requires target labels y")
            return one_hot(self.classifier.predict_classes(x), self.classifier.nb_classes)
        return check_one_hot(y, self.classifier.nb_classes)

    def _finalize(
        self,
        x: np.ndarray,
        x_adv: np.ndarray,
        labels: np.ndarray,
        original_classes: np.ndarray,
        queries: np.ndarray | None = None,
        extras: dict | None = None,
    ) -> AttackResult:
        pred = self.classifier.predict_classes(x_adv)
        if self.targeted:
            success = pred == np.argmax(labels, axis=1)
        else:
            success = pred != original_classes
        if queries is None:
            queries = np.zeros(x.shape[0], dtype=np.int64)
        return AttackResult(
            x_adv=x_adv,
            success=success,
            queries=np.asarray(queries, dtype=np.int64),
            norms=perturbation_norms(x, x_adv),
            extras=extras or {},
        )
