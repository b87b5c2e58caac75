import numpy as np
import pytest

from advkit import (
    ClipValues,
    MlpArchitecture,
    MlpClassifier,
    TrainConfig,
    linear2_classifier,
)
from advkit.harness import synth_bars8x8, synth_blobs


@pytest.fixture
def linear2():
    return linear2_classifier()


def make_random_mlp(rng: np.random.Generator, input_dim=None, num_classes=None):
    """Small random MLP with nonzero biases, for gradient checks."""
    input_dim = input_dim or int(rng.integers(2, 7))
    num_classes = num_classes or int(rng.integers(2, 5))
    hidden = tuple(int(h) for h in rng.integers(3, 9, size=int(rng.integers(1, 3))))
    activation = "tanh" if rng.random() < 0.5 else "relu"
    model = MlpClassifier(
        MlpArchitecture(input_dim, hidden, num_classes, activation=activation),
        clip=ClipValues(0.0, 1.0),
        rng_seed=int(rng.integers(0, 2**31)),
    )
    for l in range(len(model.weights)):
        model.biases[l] = rng.normal(0.0, 0.3, size=model.biases[l].shape)
    return model


@pytest.fixture(scope="session")
def blobs_model():
    """Blobs dataset + trained classifier reaching >= 0.95 clean accuracy."""
    train = synth_blobs(1000, seed=7)
    test = synth_blobs(200, seed=8)
    model = MlpClassifier(MlpArchitecture(2, (16,), 2), rng_seed=3)
    model.fit(train.x, train.y, TrainConfig(32, 20, 0.5, rng_seed=5))
    assert np.mean(model.predict_classes(test.x) == test.labels()) >= 0.95
    return model, train, test


@pytest.fixture(scope="session")
def bars_model():
    train = synth_bars8x8(1000, seed=2)
    test = synth_bars8x8(100, seed=9)
    model = MlpClassifier(MlpArchitecture(64, (32,), 2), rng_seed=1)
    model.fit(train.x, train.y, TrainConfig(32, 30, 0.5, rng_seed=4))
    assert np.mean(model.predict_classes(test.x) == test.labels()) >= 0.95
    return model, train, test
