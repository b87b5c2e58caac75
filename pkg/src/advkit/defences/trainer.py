"""Adversarial training: harden a classifier on attack-crafted batches."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..data import Dataset
from ..datagen import InMemoryDataGenerator
from ..exceptions import InvalidConfigError
from ..utils import rng_from


@dataclass
class AdversarialTrainLog:
    """Per-epoch accuracy of the hardening run on clean and crafted data."""

    epoch_clean_accuracy: list[float] = field(default_factory=list)
    epoch_adversarial_accuracy: list[float] = field(default_factory=list)


class AdversarialTrainer:
    """Replace part of every training batch with adversarial counterparts.

    Attacks rotate batch by batch; an attack whose classifier is not the
    model being hardened crafts on its own surrogate (the transfer case).
    Crafted samples keep their original clean labels. ceil(ratio * batch)
    samples are replaced, chosen by a seeded draw per batch.
    """

    def __init__(self, classifier, attacks, ratio: float = 0.5) -> None:
        if not attacks:
            raise InvalidConfigError("adversarial training needs at least one attack")
        if not 0.0 < ratio <= 1.0:
            raise InvalidConfigError(f"ratio must be in (0, 1], got {ratio}")
        self.classifier = classifier
        self.attacks = list(attacks)
        self.ratio = ratio

    def fit(self, x: np.ndarray, y: np.ndarray, config) -> AdversarialTrainLog:
        dataset = Dataset(np.asarray(x, dtype=np.float64), y)
        gen = InMemoryDataGenerator(dataset, config.batch_size, seed=config.rng_seed)
        return self.fit_generator(gen, config.nb_epochs, config)

    def fit_generator(self, generator, nb_epochs: int, config) -> AdversarialTrainLog:
        if nb_epochs < 1:
            raise InvalidConfigError("nb_epochs must be >= 1")
        log = AdversarialTrainLog()
        batch_counter = 0
        for epoch in range(nb_epochs):
            seen_x, seen_y, seen_adv = [], [], []
            for _ in range(generator.batches_per_epoch()):
                bx, by = generator.get_batch()
                attack = self.attacks[batch_counter % len(self.attacks)]
                bx_mixed = self._craft_batch(bx, by, attack, config.rng_seed, batch_counter)
                self.classifier._train_on_batch(bx_mixed, by, config.learning_rate)
                seen_x.append(bx)
                seen_y.append(by)
                seen_adv.append(bx_mixed)
                batch_counter += 1
            ex = np.concatenate(seen_x)
            ey = np.argmax(np.concatenate(seen_y), axis=1)
            ea = np.concatenate(seen_adv)
            log.epoch_clean_accuracy.append(
                float(np.mean(self.classifier.predict_classes(ex) == ey))
            )
            log.epoch_adversarial_accuracy.append(
                float(np.mean(self.classifier.predict_classes(ea) == ey))
            )
        return log

    def _craft_batch(self, bx, by, attack, seed: int, batch_counter: int) -> np.ndarray:
        n = bx.shape[0]
        n_replace = math.ceil(self.ratio * n)
        rng = rng_from(seed, "adv-train-pick", batch_counter)
        picked = rng.choice(n, size=n_replace, replace=False)
        crafted = attack.generate(bx[picked]).x_adv
        out = np.array(bx, dtype=np.float64, copy=True)
        out[picked] = crafted
        return out
