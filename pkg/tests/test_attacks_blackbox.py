"""Batch-coupled and decision-based attacks: universal, spatial, boundary."""

import numpy as np
import pytest

from advkit.attacks import (
    BoundaryAttack,
    DeepFool,
    EvasionAttack,
    FastGradientMethod,
    SpatialTransformation,
    UniversalPerturbation,
)
from advkit.exceptions import InvalidConfigError, InvalidInputError
from advkit.numerics import NormKind, lp_norm


class _NeverSucceeds(EvasionAttack):
    """Inner attack stub that returns its input unchanged."""

    def generate(self, x, y=None):
        labels = self._resolve_labels(x, y)
        original = self.classifier.predict_classes(x)
        return self._finalize(x, x.copy(), labels, original)


class TestUniversal:
    def test_noise_within_budget(self, blobs_model):
        model, _, test = blobs_model
        inner = FastGradientMethod(model, eps=0.2)
        attack = UniversalPerturbation(
            model, inner, delta=0.2, eps=0.5, norm=NormKind.L2, max_iter=3, seed=2
        )
        result = attack.generate(test.x[:60])
        assert lp_norm(result.extras["noise"], NormKind.L2) <= 0.5 + 1e-12
        assert result.norms[NormKind.L2].max() <= 0.5 + 1e-12

    def test_never_succeeding_inner_keeps_zero_noise(self, blobs_model):
        model, _, test = blobs_model
        attack = UniversalPerturbation(
            model, _NeverSucceeds(model), delta=0.05, eps=0.5,
            norm=NormKind.L2, max_iter=2, seed=3,
        )
        x = test.x[:30]
        result = attack.generate(x)
        np.testing.assert_array_equal(result.extras["noise"], np.zeros(x.shape[1]))
        original_miss = float(
            np.mean(model.predict_classes(x) != model.predict_classes(x))
        )
        assert result.extras["fooling_rate"] == original_miss
        assert result.extras["outer_iterations"] == 2

    def test_blobs_fooling_rate(self, blobs_model):
        # one shared perturbation cannot fool both sides of a symmetric
        # binary problem, so the target setting is a single source class
        model, _, test = blobs_model
        x = test.x[test.labels() == 0][:80]
        inner = DeepFool(model, max_iter=20, overshoot=0.02)
        attack = UniversalPerturbation(
            model, inner, delta=0.2, eps=0.5, norm=NormKind.L2, max_iter=10, seed=4
        )
        result = attack.generate(x)
        assert result.extras["fooling_rate"] >= 0.8

    def test_targeted_inner_rejected(self, blobs_model):
        model, _, _ = blobs_model
        targeted_inner = FastGradientMethod(model, eps=0.2, targeted=True)
        with pytest.raises(InvalidConfigError):
            UniversalPerturbation(model, targeted_inner)

    def test_determinism(self, blobs_model):
        model, _, test = blobs_model
        mk = lambda: UniversalPerturbation(
            model, FastGradientMethod(model, eps=0.2), delta=0.2, eps=0.4,
            norm=NormKind.L2, max_iter=2, seed=11,
        ).generate(test.x[:40]).x_adv
        np.testing.assert_array_equal(mk(), mk())


class TestSpatial:
    def test_identity_grid_is_identity(self, bars_model):
        model, _, test = bars_model
        attack = SpatialTransformation(
            model, image_shape=(8, 8, 1), max_translation=0.0, max_rotation=0.0,
            num_translations=1, num_rotations=1,
        )
        result = attack.generate(test.x[:10])
        np.testing.assert_array_equal(result.x_adv, test.x[:10])

    def test_single_parameters_for_whole_batch(self, bars_model):
        model, _, test = bars_model
        attack = SpatialTransformation(
            model, image_shape=(8, 8, 1), max_translation=0.25, max_rotation=10.0,
            num_translations=3, num_rotations=3,
        )
        result = attack.generate(test.x[:20])
        dy, dx = result.extras["translation"]
        rot = result.extras["rotation_degrees"]
        from advkit.attacks.spatial import rotate_images, translate_images

        imgs = test.x[:20].reshape(-1, 8, 8, 1)
        expect = rotate_images(translate_images(imgs, dy, dx), rot).reshape(20, -1)
        np.testing.assert_array_equal(result.x_adv, np.clip(expect, 0, 1))

    def test_accuracy_drop_on_bars(self, bars_model):
        model, _, test = bars_model
        labels = test.labels()
        clean = np.mean(model.predict_classes(test.x) == labels)
        attack = SpatialTransformation(
            model, image_shape=(8, 8, 1), max_translation=0.25, max_rotation=30.0,
            num_translations=3, num_rotations=3,
        )
        result = attack.generate(test.x)
        adv = np.mean(model.predict_classes(result.x_adv) == labels)
        assert clean - adv >= 0.20

    def test_non_image_input_rejected(self, blobs_model):
        model, _, test = blobs_model
        attack = SpatialTransformation(model, image_shape=(8, 8, 1))
        with pytest.raises(InvalidInputError):
            attack.generate(test.x[:5])


class TestBoundary:
    def test_success_and_distance_behaviour(self, blobs_model):
        model, _, test = blobs_model
        x = test.x[:10]
        attack = BoundaryAttack(
            model, delta_step=0.1, eps_step=0.1, max_iter=40, num_trials=10,
            adapt_rate=0.9, init_tries=200, seed=5,
        )
        result = attack.generate(x)
        assert result.success.all()
        original = model.predict_classes(x)
        assert np.all(model.predict_classes(result.x_adv) != original)
        assert np.all(result.queries > 0)
        for trace in result.extras["distance_traces"]:
            assert np.all(np.diff(trace) <= 1e-12)  # accepted iterates only shrink

    def test_distance_competitive_with_deepfool(self, blobs_model):
        model, _, test = blobs_model
        x = test.x[:15]
        boundary = BoundaryAttack(
            model, delta_step=0.1, eps_step=0.1, max_iter=90, num_trials=20,
            adapt_rate=0.9, init_tries=200, seed=6,
        ).generate(x)
        assert boundary.queries.max() <= 2200
        df = DeepFool(model, max_iter=50, overshoot=0.02).generate(x)
        both = boundary.success & df.success
        ratio = np.median(boundary.norms[NormKind.L2][both]) / np.median(
            df.norms[NormKind.L2][both]
        )
        assert ratio <= 3.0

    def test_uses_prediction_view_only(self, blobs_model, monkeypatch):
        model, _, test = blobs_model
        for forbidden in ("loss_gradient", "class_gradient"):
            monkeypatch.setattr(
                model, forbidden,
                lambda *a, **k: (_ for _ in ()).throw(AssertionError("gradient access")),
            )
        attack = BoundaryAttack(model, max_iter=5, num_trials=5, init_tries=100, seed=1)
        attack.generate(test.x[:2])

    def test_determinism(self, blobs_model):
        model, _, test = blobs_model
        mk = lambda: BoundaryAttack(
            model, max_iter=10, num_trials=5, init_tries=100, seed=9
        ).generate(test.x[:3]).x_adv
        np.testing.assert_array_equal(mk(), mk())

    def test_invalid_config(self, blobs_model):
        model, _, _ = blobs_model
        with pytest.raises(InvalidConfigError):
            BoundaryAttack(model, adapt_rate=1.5)
        with pytest.raises(InvalidConfigError):
            BoundaryAttack(model, delta_step=0.0)
