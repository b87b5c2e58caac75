"""Built-in trainable MLP classifier with analytic input gradients.

The classifier owns the full inference pipeline: normalization (subtract,
divide), an ordered chain of preprocessing defences, then the dense network.
Gradients with respect to raw inputs are backpropagated through the network,
then through each defence's estimate_gradient, then through normalization.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .exceptions import (
    InvalidConfigError,
    InvalidInputError,
    InvalidLabelError,
    ModelFileError,
    ShapeError,
)
from .numerics import softmax
from .utils import check_one_hot, rng_from

FORMAT_VERSION = "1.0.0"

_ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class ClipValues:
    """Valid data range [x_min, x_max] of classifier inputs."""

    x_min: float = 0.0
    x_max: float = 1.0

    def __post_init__(self) -> None:
        if not self.x_min < self.x_max:
            raise InvalidConfigError(
                f"clip values need x_min < x_max, got ({self.x_min}, {self.x_max})"
            )


@dataclass(frozen=True)
class PreprocessingSpec:
    """Normalization applied before everything else: (x - subtractor) / divider."""

    subtractor: float | np.ndarray = 0.0
    divider: float | np.ndarray = 1.0

    def __post_init__(self) -> None:
        div = np.asarray(self.divider, dtype=np.float64)
        if np.any(div == 0.0):
            raise InvalidConfigError("preprocessing divider has a zero component")

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - np.asarray(self.subtractor, dtype=np.float64)) / np.asarray(
            self.divider, dtype=np.float64
        )

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad / np.asarray(self.divider, dtype=np.float64)

    def is_neutral(self) -> bool:
        return (
            np.all(np.asarray(self.subtractor) == 0.0)
            and np.all(np.asarray(self.divider) == 1.0)
        )


@dataclass(frozen=True)
class MlpArchitecture:
    """Layer sizes and nonlinearity of the dense network.

    hidden_sizes may be empty, giving a plain linear-softmax model; the
    analytic test fixtures rely on that degenerate form.
    """

    input_dim: int
    hidden_sizes: tuple[int, ...]
    num_classes: int
    activation: str = "relu"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))
        if self.input_dim < 1:
            raise InvalidConfigError("input_dim must be positive")
        if any(h < 1 for h in self.hidden_sizes):
            raise InvalidConfigError("hidden layer sizes must be positive")
        if self.num_classes < 2:
            raise InvalidConfigError("need at least 2 classes")
        if self.activation not in _ACTIVATIONS:
            raise InvalidConfigError(f"activation must be one of {_ACTIVATIONS}")

    def layer_dims(self) -> list[tuple[int, int]]:
        sizes = [self.input_dim, *self.hidden_sizes, self.num_classes]
        return list(zip(sizes[:-1], sizes[1:]))


@dataclass
class TrainConfig:
    """Mini-batch SGD hyperparameters."""

    batch_size: int = 128
    nb_epochs: int = 20
    learning_rate: float = 0.1
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise InvalidConfigError("batch_size must be >= 1")
        if self.nb_epochs < 1:
            raise InvalidConfigError("nb_epochs must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidConfigError("learning_rate must be > 0")


@dataclass
class TrainLog:
    """Per-epoch mean batch loss and end-of-epoch training accuracy."""

    epoch_losses: list[float] = field(default_factory=list)
    epoch_accuracies: list[float] = field(default_factory=list)


def _phi(a: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(a, 0.0) if kind == "relu" else np.tanh(a)


def _phi_prime(a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (a > 0.0).astype(np.float64)
    t = np.tanh(a)
    return 1.0 - t * t


class MlpClassifier:
    """Feed-forward classifier exposing logits, probabilities and gradients.

    Weights are seeded uniform Glorot; training is plain mini-batch SGD on
    cross-entropy, deterministic for a fixed seed. predict/gradient methods
    are read-only and safe to call concurrently once training is done.
    """

    def __init__(
        self,
        architecture: MlpArchitecture,
        clip: ClipValues = ClipValues(0.0, 1.0),
        preprocessing: PreprocessingSpec = PreprocessingSpec(),
        defences=(),
        rng_seed: int = 0,
    ) -> None:
        self.architecture = architecture
        self.clip = clip
        self.preprocessing = preprocessing
        self.defences = list(defences)
        self.rng_seed = rng_seed
        self.learning_phase: bool | None = None  # stored but inert: no dropout/bn
        rng = rng_from(rng_seed, "mlp-init")
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in architecture.layer_dims():
            a = math.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-a, a, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    # ------------------------------------------------------------------ basics

    @property
    def nb_classes(self) -> int:
        return self.architecture.num_classes

    @property
    def input_dim(self) -> int:
        """Width consumed by the network (after any reshaping defences)."""
        return self.architecture.input_dim

    @property
    def num_hidden_layers(self) -> int:
        return len(self.architecture.hidden_sizes)

    def set_learning_phase(self, train: bool) -> None:
        self.learning_phase = bool(train)

    # -------------------------------------------------------------- forward

    def _apply_defences(self, x, y, *, fit_phase: bool):
        for defence in self.defences:
            active = defence.apply_fit if fit_phase else defence.apply_predict
            if active:
                x, y = defence(x, y)
        return x, y

    def _prepare(self, x: np.ndarray) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"inputs must be 2-d (n, features), got {arr.shape}")
        u = self.preprocessing.apply(arr)
        u, _ = self._apply_defences(u, None, fit_phase=False)
        if u.shape[1] != self.architecture.input_dim:
            raise ShapeError(
                f"network expects width {self.architecture.input_dim}, "
                f"got {u.shape[1]} after preprocessing/defences"
            )
        return u

    def _forward(self, u: np.ndarray):
        """Forward pass on prepared inputs; returns (logits, pre-acts, acts)."""
        kind = self.architecture.activation
        pre: list[np.ndarray] = []
        acts: list[np.ndarray] = [u]
        h = u
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = h @ W + b
            pre.append(a)
            h = _phi(a, kind)
            acts.append(h)
        logits = h @ self.weights[-1] + self.biases[-1]
        return logits, pre, acts

    def predict(self, x: np.ndarray, logits: bool = False) -> np.ndarray:
        """Class probabilities (default) or logits, shape (n, K)."""
        u = self._prepare(x)
        z, _, _ = self._forward(u)
        return z if logits else softmax(z)

    def predict_classes(self, x: np.ndarray) -> np.ndarray:
        """argmax predictions; ties resolve to the lowest class index."""
        return np.argmax(self.predict(x, logits=True), axis=1)

    def get_activations(self, x: np.ndarray, layer: int) -> np.ndarray:
        """Post-activation values of the given hidden layer (0-based)."""
        if not 0 <= layer < self.num_hidden_layers:
            raise InvalidLabelError(
                f"layer {layer} out of range; model has "
                f"{self.num_hidden_layers} hidden layers"
            )
        u = self._prepare(x)
        _, _, acts = self._forward(u)
        return acts[layer + 1]

    # -------------------------------------------------------------- gradients

    def _backprop_to_network_input(self, g_logits, pre) -> np.ndarray:
        kind = self.architecture.activation
        g = g_logits @ self.weights[-1].T
        for l in range(len(pre) - 1, -1, -1):
            g = g * _phi_prime(pre[l], kind)
            g = g @ self.weights[l].T
        return g

    def _backprop_through_pipeline(self, x_raw, grad) -> np.ndarray:
        """Chain a network-input gradient back through defences and normalization."""
        u = self.preprocessing.apply(np.asarray(x_raw, dtype=np.float64))
        seen = [u]
        for defence in self.defences:
            if defence.apply_predict:
                u, _ = defence(u, None)
                seen.append(u)
        for defence, inp in zip(
            reversed([d for d in self.defences if d.apply_predict]), reversed(seen[:-1])
        ):
            grad = defence.estimate_gradient(inp, grad)
        return self.preprocessing.backward(grad)

    def loss_gradient(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Per-sample gradient of the cross-entropy loss w.r.t. the raw input."""
        y = check_one_hot(y, self.nb_classes)
        return self._loss_gradient_soft(x, y)

    def _loss_gradient_soft(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        u = self._prepare(x)
        z, pre, _ = self._forward(u)
        g_logits = softmax(z) - y
        g = self._backprop_to_network_input(g_logits, pre)
        return self._backprop_through_pipeline(x, g)

    def class_gradient(
        self, x: np.ndarray, label: int | None = None, logits: bool = False
    ) -> np.ndarray:
        """Gradients of class probabilities or logits w.r.t. the raw input.

        Shape (n, K, input_width) without a label, (n, 1, input_width) with one.
        """
        if label is not None and not 0 <= label < self.nb_classes:
            raise InvalidLabelError(f"label {label} out of range [0, {self.nb_classes})")
        u = self._prepare(x)
        z, pre, _ = self._forward(u)
        p = softmax(z)
        classes = range(self.nb_classes) if label is None else (label,)
        per_class = []
        for i in classes:
            if logits:
                g_logits = np.zeros_like(z)
                g_logits[:, i] = 1.0
            else:
                # dF_i/dz_j = F_i * (delta_ij - F_j)
                g_logits = -p * p[:, i][:, None]
                g_logits[:, i] += p[:, i]
            g = self._backprop_to_network_input(g_logits, pre)
            per_class.append(self._backprop_through_pipeline(x, g))
        return np.stack(per_class, axis=1)

    # -------------------------------------------------------------- training

    def fit(self, x: np.ndarray, y: np.ndarray, config: TrainConfig) -> TrainLog:
        """Mini-batch SGD on cross-entropy; deterministic given config.rng_seed."""
        from .datagen import InMemoryDataGenerator

        dataset = Dataset(np.asarray(x, dtype=np.float64), y)
        gen = InMemoryDataGenerator(dataset, config.batch_size, seed=config.rng_seed)
        return self.fit_generator(gen, config.nb_epochs, config)

    def fit_generator(self, generator, nb_epochs: int, config: TrainConfig) -> TrainLog:
        """Train from a DataGenerator; semantics identical to fit."""
        if nb_epochs < 1:
            raise InvalidConfigError("nb_epochs must be >= 1")
        log = TrainLog()
        for _ in range(nb_epochs):
            losses = []
            seen_x, seen_y = [], []
            for _ in range(generator.batches_per_epoch()):
                try:
                    bx, by = generator.get_batch()
                except StopIteration:
                    warnings.warn("data generator exhausted mid-epoch; truncating")
                    break
                losses.append(self._train_on_batch(bx, by, config.learning_rate))
                seen_x.append(bx)
                seen_y.append(by)
            if not losses:
                raise InvalidInputError("generator produced no batches")
            ex = np.concatenate(seen_x)
            ey = np.concatenate(seen_y)
            acc = float(
                np.mean(self.predict_classes(ex) == np.argmax(ey, axis=1))
            )
            log.epoch_losses.append(float(np.mean(losses)))
            log.epoch_accuracies.append(acc)
        return log

    def _train_on_batch(self, bx, by, learning_rate: float) -> float:
        # fit-phase defence chain, including label transforms and augmentation
        arr = np.asarray(bx, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"batch must be 2-d, got shape {arr.shape}")
        u = self.preprocessing.apply(arr)
        yb = np.asarray(by, dtype=np.float64)
        u, yb = self._apply_defences(u, yb, fit_phase=True)
        if u.shape[1] != self.architecture.input_dim:
            raise ShapeError(
                f"network expects width {self.architecture.input_dim}, "
                f"got {u.shape[1]} after preprocessing/defences"
            )
        return self._update_prepared(u, yb, learning_rate)

    def _update_prepared(self, u, y, learning_rate: float) -> float:
        kind = self.architecture.activation
        z, pre, acts = self._forward(u)
        p = softmax(z)
        n = u.shape[0]
        eps = 1e-300
        loss = float(-(y * np.log(np.maximum(p, eps))).sum() / n)
        g = (p - y) / n
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        grads_w[-1] = acts[-1].T @ g
        grads_b[-1] = g.sum(axis=0)
        g = g @ self.weights[-1].T
        for l in range(len(pre) - 1, -1, -1):
            g = g * _phi_prime(pre[l], kind)
            grads_w[l] = acts[l].T @ g
            grads_b[l] = g.sum(axis=0)
            g = g @ self.weights[l].T
        for l in range(len(self.weights)):
            self.weights[l] -= learning_rate * grads_w[l]
            self.biases[l] -= learning_rate * grads_b[l]
        return loss

    # -------------------------------------------------------------- persistence

    def save(self, path) -> None:
        """Write the model as versioned structured text (defences excluded)."""
        record = {
            "format_version": FORMAT_VERSION,
            "architecture": {
                "input_dim": self.architecture.input_dim,
                "hidden_sizes": list(self.architecture.hidden_sizes),
                "num_classes": self.architecture.num_classes,
                "activation": self.architecture.activation,
            },
            "clip": [self.clip.x_min, self.clip.x_max],
            "preprocessing": {
                "subtractor": np.asarray(self.preprocessing.subtractor).tolist(),
                "divider": np.asarray(self.preprocessing.divider).tolist(),
            },
            "rng_seed": self.rng_seed,
            "layers": [
                {"weight": W.tolist(), "bias": b.tolist()}
                for W, b in zip(self.weights, self.biases)
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=1)

    @classmethod
    def load(cls, path) -> "MlpClassifier":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                record = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"cannot parse model file {path}: {exc}") from exc
        try:
            version = record["format_version"]
            major = int(str(version).split(".")[0])
            if major != int(FORMAT_VERSION.split(".")[0]):
                raise ModelFileError(
                    f"model format version {version} has a different MAJOR than "
                    f"{FORMAT_VERSION}; refusing to load"
                )
            arch_rec = record["architecture"]
            arch = MlpArchitecture(
                input_dim=int(arch_rec["input_dim"]),
                hidden_sizes=tuple(int(h) for h in arch_rec["hidden_sizes"]),
                num_classes=int(arch_rec["num_classes"]),
                activation=str(arch_rec["activation"]),
            )
            sub = record["preprocessing"]["subtractor"]
            div = record["preprocessing"]["divider"]
            model = cls(
                arch,
                clip=ClipValues(*record["clip"]),
                preprocessing=PreprocessingSpec(
                    subtractor=np.asarray(sub) if isinstance(sub, list) else float(sub),
                    divider=np.asarray(div) if isinstance(div, list) else float(div),
                ),
                rng_seed=int(record.get("rng_seed", 0)),
            )
            layers = record["layers"]
            if len(layers) != len(model.weights):
                raise ModelFileError(
                    f"model file has {len(layers)} layers, architecture needs "
                    f"{len(model.weights)}"
                )
            for l, layer_rec in enumerate(layers):
                W = np.asarray(layer_rec["weight"], dtype=np.float64)
                b = np.asarray(layer_rec["bias"], dtype=np.float64)
                if W.shape != model.weights[l].shape or b.shape != model.biases[l].shape:
                    raise ModelFileError(
                        f"layer {l}: stored shapes {W.shape}/{b.shape} do not match "
                        f"architecture {model.weights[l].shape}/{model.biases[l].shape}"
                    )
                model.weights[l] = W
                model.biases[l] = b
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelFileError):
                raise
            raise ModelFileError(f"malformed model file {path}: {exc}") from exc
        return model

    def prediction_view(self) -> "PredictionOnlyView":
        return PredictionOnlyView(self)


class PredictionOnlyView:
    """Black-box view of a classifier: predictions only, with query counting.

    Decision-based attacks and query-efficient estimators must route through
    this view so their access is verifiably restricted to model outputs.
    """

    def __init__(self, classifier) -> None:
        self._classifier = classifier
        self.clip = classifier.clip
        self.nb_classes = classifier.nb_classes
        self.queries_used = 0

    def predict(self, x: np.ndarray, logits: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        self.queries_used += x.shape[0]
        return self._classifier.predict(x, logits=logits)

    def predict_classes(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict(x, logits=False), axis=1)


def linear2_classifier() -> MlpClassifier:
    """2-input, 2-class linear-softmax model with identity weights, clip [0,1].

    The analytic fixture used throughout the test-suite: logits equal the
    input, so every attack and metric has a closed form.
    """
    model = MlpClassifier(
        MlpArchitecture(input_dim=2, hidden_sizes=(), num_classes=2),
        clip=ClipValues(0.0, 1.0),
    )
    model.weights[0] = np.eye(2)
    model.biases[0] = np.zeros(2)
    return model
