"""Synthetic dataset generators, IDX/CSV loading and backdoor injection."""

from __future__ import annotations

import struct

import numpy as np

from ..data import Dataset
from ..exceptions import FileFormatError, InvalidConfigError, InvalidInputError
from ..utils import one_hot, rng_from

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


# ------------------------------------------------------------------ synthetic


def synth_blobs(n: int, seed: int = 0) -> Dataset:
    """Two Gaussian blobs at (-1,-1) and (+1,+1), scaled into [0,1]^2.

    The spread (sigma 0.3 before scaling) keeps the classes cleanly
    separable while leaving eps=0.3 attacks room to cross the boundary.
    """
    rng = rng_from(seed, "blobs")
    labels = _balanced_labels(n, rng)
    centers = np.array([[-1.0, -1.0], [1.0, 1.0]])
    x = centers[labels] + rng.normal(0.0, 0.3, size=(n, 2))
    x = np.clip((x + 2.5) / 5.0, 0.0, 1.0)
    return Dataset(x, one_hot(labels, 2))


def synth_moons(n: int, seed: int = 0) -> Dataset:
    """Two interleaved half-circles with noise, scaled into [0,1]^2."""
    rng = rng_from(seed, "moons")
    labels = _balanced_labels(n, rng)
    t = rng.random(n) * np.pi
    x = np.empty((n, 2))
    outer = labels == 0
    x[outer, 0] = np.cos(t[outer])
    x[outer, 1] = np.sin(t[outer])
    x[~outer, 0] = 1.0 - np.cos(t[~outer])
    x[~outer, 1] = 0.5 - np.sin(t[~outer])
    x += rng.normal(0.0, 0.1, size=x.shape)
    lo = np.array([-1.5, -1.0])
    hi = np.array([2.5, 1.5])
    x = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    return Dataset(x, one_hot(labels, 2))


BAR_ROW = 3
BAR_COL = 4


def synth_bars8x8(n: int, seed: int = 0) -> Dataset:
    """8x8 images: class 0 a horizontal bar at the canonical row, class 1 a
    vertical bar at the canonical column, over light background noise.

    The fixed bar positions keep each class unimodal, so translations break
    classification and activation-space structure stays interpretable.
    """
    rng = rng_from(seed, "bars8x8")
    labels = _balanced_labels(n, rng)
    imgs = rng.uniform(0.0, 0.1, size=(n, 8, 8))
    intensities = rng.uniform(0.8, 1.0, size=(n, 8))
    for i in range(n):
        if labels[i] == 0:
            imgs[i, BAR_ROW, :] = intensities[i]
        else:
            imgs[i, :, BAR_COL] = intensities[i]
    return Dataset(imgs.reshape(n, 64), one_hot(labels, 2), image_shape=(8, 8, 1))


def _balanced_labels(n: int, rng: np.random.Generator) -> np.ndarray:
    labels = np.zeros(n, dtype=np.int64)
    labels[n // 2 :] = 1
    rng.shuffle(labels)
    return labels


_SYNTH = {"blobs": synth_blobs, "moons": synth_moons, "bars8x8": synth_bars8x8}


def synth_dataset(spec: dict) -> Dataset:
    """Build a dataset from a config record like {"name": "blobs", "n": 1000}."""
    name = spec.get("name")
    if name not in _SYNTH:
        raise InvalidConfigError(
            f"unknown synthetic dataset {name!r}; choose from {sorted(_SYNTH)}"
        )
    n = int(spec.get("n", 1000))
    if n < 10:
        raise InvalidConfigError("synthetic datasets need n >= 10")
    return _SYNTH[name](n, seed=int(spec.get("seed", 0)))


# ------------------------------------------------------------------------ IDX


def _read_exact(fh, count: int, path, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise FileFormatError(
            f"{path}: truncated {what} at byte offset {fh.tell() - len(data)}"
        )
    return data


def load_idx(images_path, labels_path) -> Dataset:
    """Load big-endian IDX image/label files; pixels scaled to [0,1]."""
    with open(images_path, "rb") as fh:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, images_path, "header"))
        if magic != IDX_IMAGES_MAGIC:
            raise FileFormatError(
                f"{images_path}: bad magic 0x{magic:08x} at byte offset 0, "
                f"expected 0x{IDX_IMAGES_MAGIC:08x}"
            )
        payload = _read_exact(fh, n * rows * cols, images_path, "pixel payload")
        pixels = np.frombuffer(payload, dtype=np.uint8).reshape(n, rows * cols)
    with open(labels_path, "rb") as fh:
        magic, n_labels = struct.unpack(">II", _read_exact(fh, 8, labels_path, "header"))
        if magic != IDX_LABELS_MAGIC:
            raise FileFormatError(
                f"{labels_path}: bad magic 0x{magic:08x} at byte offset 0, "
                f"expected 0x{IDX_LABELS_MAGIC:08x}"
            )
        labels = np.frombuffer(
            _read_exact(fh, n_labels, labels_path, "label payload"), dtype=np.uint8
        )
    if n != n_labels:
        raise FileFormatError(
            f"image count {n} does not match label count {n_labels}"
        )
    num_classes = max(2, int(labels.max()) + 1) if labels.size else 2
    return Dataset(
        pixels.astype(np.float64) / 255.0,
        one_hot(labels.astype(np.int64), num_classes),
        image_shape=(int(rows), int(cols), 1),
    )


def save_idx(dataset: Dataset, images_path, labels_path) -> None:
    """Write a dataset whose x is [0,1]-scaled back to IDX ubyte files."""
    if dataset.image_shape is None:
        raise InvalidInputError("save_idx needs image metadata")
    rows, cols, channels = dataset.image_shape
    if channels != 1:
        raise InvalidInputError("IDX export supports single-channel images")
    pixels = np.round(dataset.x * 255.0).astype(np.uint8)
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, dataset.n, rows, cols))
        fh.write(pixels.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, dataset.n))
        fh.write(dataset.labels().astype(np.uint8).tobytes())


# ------------------------------------------------------------------------ CSV


def load_csv(path) -> Dataset:
    """CSV with a header row; all columns but the last are features, the
    last column is an integer class label."""
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FileFormatError(f"{path}: cannot parse CSV: {exc}") from exc
    if raw.shape[1] < 2:
        raise FileFormatError(f"{path}: need at least one feature column and a label")
    labels = raw[:, -1].astype(np.int64)
    if np.any(raw[:, -1] != labels):
        raise FileFormatError(f"{path}: label column contains non-integers")
    num_classes = max(2, int(labels.max()) + 1)
    return Dataset(raw[:, :-1], one_hot(labels, num_classes))


# ------------------------------------------------------------------- backdoor


def apply_trigger(x: np.ndarray, trigger_indices, trigger_value: float) -> np.ndarray:
    """Stamp the trigger pattern onto copies of the given rows."""
    out = np.array(x, dtype=np.float64, copy=True)
    out[:, np.asarray(trigger_indices, dtype=int)] = trigger_value
    return out


def inject_backdoor(
    dataset: Dataset,
    trigger_indices,
    trigger_value: float,
    fraction: float,
    target_class: int,
    seed: int = 0,
) -> tuple[Dataset, np.ndarray]:
    """Poison round(fraction*n) non-target samples: stamp trigger, flip label.

    Returns the poisoned dataset and the ground-truth is_poison flags.
    """
    if not 0.0 < fraction <= 0.5:
        raise InvalidConfigError(f"poison fraction must be in (0, 0.5], got {fraction}")
    trigger_indices = np.asarray(trigger_indices, dtype=int)
    if trigger_indices.size == 0 or trigger_indices.min() < 0 or trigger_indices.max() >= dataset.input_dim:
        raise InvalidConfigError("trigger indices out of range")
    if not 0 <= target_class < dataset.num_classes:
        raise InvalidConfigError(f"target class {target_class} out of range")
    labels = dataset.labels()
    candidates = np.nonzero(labels != target_class)[0]
    count = int(round(fraction * dataset.n))
    if count > candidates.size:
        raise InvalidConfigError(
            f"cannot poison {count} samples; only {candidates.size} non-target samples"
        )
    chosen = rng_from(seed, "backdoor").choice(candidates, size=count, replace=False)
    x = np.array(dataset.x, copy=True)
    y = np.array(dataset.y, copy=True)
    x[chosen[:, None], trigger_indices[None, :]] = trigger_value
    y[chosen] = 0.0
    y[chosen, target_class] = 1.0
    is_poison = np.zeros(dataset.n, dtype=bool)
    is_poison[chosen] = True
    return Dataset(x, y, image_shape=dataset.image_shape), is_poison
