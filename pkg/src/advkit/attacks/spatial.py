"""Spatial transformation attack: grid search over one translation + rotation."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError, InvalidInputError
from .base import AttackResult, EvasionAttack


def translate_images(imgs: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Shift by whole pixels with zero fill; imgs has shape (n, h, w, c)."""
    out = np.zeros_like(imgs)
    h, w = imgs.shape[1], imgs.shape[2]
    src_y = slice(max(0, -dy), min(h, h - dy))
    dst_y = slice(max(0, dy), min(h, h + dy))
    src_x = slice(max(0, -dx), min(w, w - dx))
    dst_x = slice(max(0, dx), min(w, w + dx))
    if src_y.start < src_y.stop and src_x.start < src_x.stop:
        out[:, dst_y, dst_x, :] = imgs[:, src_y, src_x, :]
    return out


def rotate_images(imgs: np.ndarray, degrees: float) -> np.ndarray:
    """Nearest-neighbor rotation about the image center, zero fill."""
    if degrees == 0.0:
        return imgs.copy()
    h, w = imgs.shape[1], imgs.shape[2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    theta = np.deg2rad(degrees)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    # inverse mapping: rotate output coordinates back into the source image
    src_y = np.round(cy + cos_t * (yy - cy) + sin_t * (xx - cx)).astype(int)
    src_x = np.round(cx - sin_t * (yy - cy) + cos_t * (xx - cx)).astype(int)
    valid = (src_y >= 0) & (src_y < h) & (src_x >= 0) & (src_x < w)
    out = np.zeros_like(imgs)
    out[:, valid, :] = imgs[:, src_y[valid], src_x[valid], :]
    return out


class SpatialTransformation(EvasionAttack):
    """Apply the single (translation, rotation) combo that fools the batch most.

    The grid spans num_translations values per axis up to max_translation
    (a fraction of the image size) and num_rotations angles up to
    max_rotation degrees; the chosen parameters are shared by every sample
    in the batch, so the attack is batch-coupled by design. Translation is
    applied before rotation.
    """

    def __init__(
        self,
        classifier,
        image_shape: tuple[int, int, int],
        max_translation: float = 0.2,
        max_rotation: float = 30.0,
        num_translations: int = 3,
        num_rotations: int = 3,
    ) -> None:
        super().__init__(classifier)
        if not 0.0 <= max_translation <= 1.0:
            raise InvalidConfigError("max_translation is a fraction of the image size")
        if max_rotation < 0:
            raise InvalidConfigError("max_rotation must be >= 0 degrees")
        if num_translations < 1 or num_rotations < 1:
            raise InvalidConfigError("grid sizes must be >= 1")
        self.image_shape = tuple(image_shape)
        self.max_translation = max_translation
        self.max_rotation = max_rotation
        self.num_translations = num_translations
        self.num_rotations = num_rotations

    def _grid(self):
        h, w, _ = self.image_shape
        dys = np.unique(
            np.round(np.linspace(-self.max_translation * h, self.max_translation * h,
                                 self.num_translations)).astype(int)
        )
        dxs = np.unique(
            np.round(np.linspace(-self.max_translation * w, self.max_translation * w,
                                 self.num_translations)).astype(int)
        )
        rots = np.unique(np.linspace(-self.max_rotation, self.max_rotation, self.num_rotations))
        return dys, dxs, rots

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        k1, k2, k3 = self.image_shape
        if x.shape[1] != k1 * k2 * k3:
            raise InvalidInputError(
                f"inputs of width {x.shape[1]} do not match image shape {self.image_shape}"
            )
        labels = self._resolve_labels(x, y)
        original = self.classifier.predict_classes(x)
        imgs = x.reshape(-1, k1, k2, k3)
        best_rate = -1.0
        best_imgs = imgs
        best_params = (0, 0, 0.0)
        dys, dxs, rots = self._grid()
        for dy in dys:
            for dx in dxs:
                shifted = translate_images(imgs, int(dy), int(dx))
                for rot in rots:
                    candidate = rotate_images(shifted, float(rot))
                    flat = candidate.reshape(x.shape[0], -1)
                    rate = float(np.mean(self.classifier.predict_classes(flat) != original))
                    if rate > best_rate:
                        best_rate = rate
                        best_imgs = candidate
                        best_params = (int(dy), int(dx), float(rot))
        x_adv = best_imgs.reshape(x.shape[0], -1)
        lo, hi = self.classifier.clip.x_min, self.classifier.clip.x_max
        x_adv = np.clip(x_adv, lo, hi)
        extras = {
            "translation": (best_params[0], best_params[1]),
            "rotation_degrees": best_params[2],
            "misclassification_rate": best_rate,
        }
        return self._finalize(x, x_adv, labels, original, extras=extras)
