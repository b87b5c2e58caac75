import numpy as np
import pytest

from advkit import Dataset, InMemoryDataGenerator, MlpArchitecture, MlpClassifier, TrainConfig
from advkit.exceptions import InvalidConfigError
from advkit.harness import synth_blobs
from advkit.utils import one_hot


def small_dataset(n=10):
    rng = np.random.default_rng(0)
    return Dataset(rng.random((n, 3)), one_hot(rng.integers(0, 2, n), 2))


def test_batch_sizes_and_wraparound():
    gen = InMemoryDataGenerator(small_dataset(10), batch_size=4, seed=1)
    sizes = [gen.get_batch()[0].shape[0] for _ in range(3)]
    assert sizes == [4, 4, 2]
    assert gen.get_batch()[0].shape[0] == 4  # reshuffled wrap

def test_epoch_is_a_partition():
    data = small_dataset(10)
    gen = InMemoryDataGenerator(data, batch_size=4, seed=3)
    rows = np.concatenate([gen.get_batch()[0] for _ in range(gen.batches_per_epoch())])
    assert rows.shape == data.x.shape
    assert np.array_equal(
        np.sort(rows.view([("", rows.dtype)] * rows.shape[1]).ravel()),
        np.sort(data.x.view([("", data.x.dtype)] * data.x.shape[1]).ravel()),
    )

def test_equal_seeds_equal_sequences():
    data = small_dataset(12)
    g1 = InMemoryDataGenerator(data, 5, seed=9)
    g2 = InMemoryDataGenerator(data, 5, seed=9)
    for _ in range(7):
        b1, b2 = g1.get_batch(), g2.get_batch()
        np.testing.assert_array_equal(b1[0], b2[0])
        np.testing.assert_array_equal(b1[1], b2[1])

def test_invalid_batch_size():
    with pytest.raises(InvalidConfigError):
        InMemoryDataGenerator(small_dataset(), 0)

def test_fit_generator_equals_fit_bitwise():
    data = synth_blobs(150, seed=4)
    cfg = TrainConfig(16, 4, 0.5, rng_seed=21)
    direct = MlpClassifier(MlpArchitecture(2, (8,), 2), rng_seed=6)
    direct.fit(data.x, data.y, cfg)
    viagen = MlpClassifier(MlpArchitecture(2, (8,), 2), rng_seed=6)
    gen = InMemoryDataGenerator(Dataset(data.x, data.y), cfg.batch_size, seed=cfg.rng_seed)
    viagen.fit_generator(gen, cfg.nb_epochs, cfg)
    for w1, w2 in zip(direct.weights, viagen.weights):
        np.testing.assert_array_equal(w1, w2)


def test_generator_exhaustion_truncates_epoch_with_warning():
    class Exhausting(InMemoryDataGenerator):
        def __init__(self, dataset, batch_size, seed=0):
            super().__init__(dataset, batch_size, seed)
            self._served = 0

        def get_batch(self):
            if self._served >= 2:
                raise StopIteration
            self._served += 1
            return super().get_batch()

    data = synth_blobs(40, seed=1)
    gen = Exhausting(Dataset(data.x, data.y), batch_size=10, seed=2)
    model = MlpClassifier(MlpArchitecture(2, (4,), 2), rng_seed=0)
    with pytest.warns(UserWarning, match="truncating"):
        log = model.fit_generator(gen, 1, TrainConfig(10, 1, 0.5, 3))
    assert len(log.epoch_losses) == 1
