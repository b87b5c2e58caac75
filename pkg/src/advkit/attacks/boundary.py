"""Decision-based boundary attack using only class predictions."""

from __future__ import annotations

import numpy as np

from ..exceptions import AttackInitError, InvalidConfigError
from ..utils import rng_from, sample_seed
from .base import AttackResult, EvasionAttack


class BoundaryAttack(EvasionAttack):
    """Walk along the decision boundary toward the original input.

    Purely decision-based: all model access goes through a prediction-only
    view, so only output classes are ever observed. Starting from seeded
    uniform noise (resampled up to init_tries until adversarial), each
    round proposes num_trials orthogonal candidates on the sphere of the
    current distance, then one contraction step toward the input. A
    candidate is accepted only if it stays adversarial and does not
    increase the distance, so accepted distances are non-increasing. Both
    step scales adapt by adapt_rate toward a 50% acceptance rate.
    """

    def __init__(
        self,
        classifier,
        targeted: bool = False,
        delta_step: float = 0.1,
        eps_step: float = 0.1,
        max_iter: int = 100,
        num_trials: int = 20,
        adapt_rate: float = 0.9,
        init_tries: int = 100,
        seed: int = 0,
    ) -> None:
        super().__init__(classifier)
        if delta_step <= 0 or eps_step <= 0:
            raise InvalidConfigError("delta_step and eps_step must be > 0")
        if not 0.0 < adapt_rate < 1.0:
            raise InvalidConfigError("adapt_rate must be in (0, 1)")
        if max_iter < 1 or num_trials < 1 or init_tries < 1:
            raise InvalidConfigError("iteration counts must be >= 1")
        self.targeted = targeted
        self.delta_step = delta_step
        self.eps_step = eps_step
        self.max_iter = max_iter
        self.num_trials = num_trials
        self.adapt_rate = adapt_rate
        self.init_tries = init_tries
        self.seed = seed

    def _is_adv(self, classes: np.ndarray, original: int, target: int) -> np.ndarray:
        return classes == target if self.targeted else classes != original

    def _attack_one(self, view, row, original: int, target: int, rng):
        lo, hi = view.clip.x_min, view.clip.x_max
        current = None
        for _ in range(self.init_tries):
            candidate = rng.uniform(lo, hi, size=row.shape)
            cls = int(view.predict_classes(candidate[None, :])[0])
            if self._is_adv(np.array([cls]), original, target)[0]:
                current = candidate
                break
        if current is None:
            raise AttackInitError(
                f"no adversarial starting point within {self.init_tries} tries"
            )
        dist = float(np.sqrt(((current - row) ** 2).sum()))
        best = current.copy()
        best_dist = dist
        trace = [dist]
        delta = self.delta_step
        eps = self.eps_step
        for _ in range(self.max_iter):
            if dist < 1e-12:
                break
            u = (current - row) / dist
            perts = rng.normal(size=(self.num_trials, row.size))
            perts -= (perts @ u)[:, None] * u[None, :]
            norms = np.sqrt((perts**2).sum(axis=1))
            norms[norms < 1e-30] = 1.0
            perts *= (delta * dist / norms)[:, None]
            cands = current[None, :] + perts
            offsets = cands - row[None, :]
            cand_dists = np.sqrt((offsets**2).sum(axis=1))
            cand_dists[cand_dists < 1e-30] = 1.0
            cands = row[None, :] + offsets * (dist / cand_dists)[:, None]
            cands = np.clip(cands, lo, hi)
            classes = view.predict_classes(cands)
            ok = self._is_adv(classes, original, target)
            cand_dists = np.sqrt(((cands - row[None, :]) ** 2).sum(axis=1))
            ok &= cand_dists <= dist + 1e-12
            ratio = float(np.mean(ok))
            if np.any(ok):
                pick = int(np.nonzero(ok)[0][0])
                current = cands[pick]
                dist = float(cand_dists[pick])
            delta = delta / self.adapt_rate if ratio > 0.5 else delta * self.adapt_rate
            # contraction toward the original input
            trial = current + eps * (row - current)
            trial_cls = int(view.predict_classes(trial[None, :])[0])
            if self._is_adv(np.array([trial_cls]), original, target)[0]:
                current = trial
                dist = float(np.sqrt(((current - row) ** 2).sum()))
                eps = min(eps / self.adapt_rate, 0.99)
            else:
                eps = eps * self.adapt_rate
            if dist < best_dist:
                best = current.copy()
                best_dist = dist
            trace.append(dist)
        return best, np.asarray(trace)

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        labels = self._resolve_labels(x, y)
        targets = np.argmax(labels, axis=1)
        original = self.classifier.predict_classes(x)
        rows = []
        traces = []
        queries = np.zeros(x.shape[0], dtype=np.int64)
        for i, row in enumerate(x):
            view = self.classifier.prediction_view()
            rng = rng_from(sample_seed(self.seed, row), "boundary")
            adv, trace = self._attack_one(
                view, row, int(original[i]), int(targets[i]), rng
            )
            rows.append(adv)
            traces.append(trace)
            queries[i] = view.queries_used
        x_adv = np.stack(rows)
        return self._finalize(
            x, x_adv, labels, original, queries=queries,
            extras={"distance_traces": traces},
        )
