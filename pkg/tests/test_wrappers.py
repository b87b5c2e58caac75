import numpy as np
import pytest

from advkit.attacks import FastGradientMethod
from advkit.exceptions import InvalidConfigError
from advkit.numerics import NormKind
from advkit.utils import one_hot
from advkit.wrappers import (
    ExpectationOverTransformations,
    IdentityTransformation,
    QueryEfficientGradientEstimation,
    RandomTranslation,
)


class TestEot:
    def test_identity_transform_equals_plain(self, blobs_model):
        model, _, test = blobs_model
        eot = ExpectationOverTransformations(model, num_samples=5, seed=1)
        x, y = test.x[:10], test.y[:10]
        np.testing.assert_array_equal(eot.predict(x), model.predict(x))
        np.testing.assert_array_equal(
            eot.loss_gradient(x, y), model.loss_gradient(x, y)
        )
        np.testing.assert_array_equal(
            eot.class_gradient(x, logits=True), model.class_gradient(x, logits=True)
        )

    def test_single_sample_equals_one_transformed_evaluation(self, bars_model):
        model, _, test = bars_model
        transform = RandomTranslation(max_shift=1, image_shape=(8, 8, 1))
        eot = ExpectationOverTransformations(
            model, num_samples=1, transformation=transform, seed=3
        )
        x = test.x[:4]
        forward, _ = transform.sample(np.random.default_rng(eot_draw_seed(3)))
        np.testing.assert_array_equal(eot.predict(x), model.predict(forward(x)))

    def test_constant_image_translation_invariance(self, bars_model):
        model, _, _ = bars_model
        transform = RandomTranslation(max_shift=2, image_shape=(8, 8, 1))
        eot = ExpectationOverTransformations(
            model, num_samples=7, transformation=transform, seed=4
        )
        x = np.full((3, 64), 0.6)
        np.testing.assert_allclose(eot.predict(x), model.predict(x), atol=1e-12)

    def test_probability_rows_sum_to_one(self, bars_model):
        model, _, test = bars_model
        eot = ExpectationOverTransformations(
            model, num_samples=4,
            transformation=RandomTranslation(1, (8, 8, 1)), seed=5,
        )
        p = eot.predict(test.x[:6])
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)

    def test_attack_runs_on_wrapped_view(self, bars_model):
        model, _, test = bars_model
        eot = ExpectationOverTransformations(
            model, num_samples=3,
            transformation=RandomTranslation(1, (8, 8, 1)), seed=6,
        )
        result = FastGradientMethod(eot, eps=0.1).generate(test.x[:5])
        assert result.x_adv.shape == (5, 64)
        assert result.norms[NormKind.LINF].max() <= 0.1 + 1e-12

    def test_invalid_config(self, blobs_model):
        model, _, _ = blobs_model
        with pytest.raises(InvalidConfigError):
            ExpectationOverTransformations(model, num_samples=0)


def eot_draw_seed(seed):
    from advkit.utils import derive_seed

    return derive_seed(seed, "eot")


class TestQueryEfficient:
    def test_cosine_similarity_on_linear2(self, linear2):
        qe = QueryEfficientGradientEstimation(linear2, num_basis=200, sigma=1e-3, seed=1)
        x = np.array([[0.3, 0.7]])
        y = one_hot([1], 2)
        estimate = qe.loss_gradient(x, y)[0]
        true = linear2.loss_gradient(x, y)[0]
        cos = estimate @ true / (np.linalg.norm(estimate) * np.linalg.norm(true))
        assert cos >= 0.99

    def test_query_accounting_exact(self, linear2):
        qe = QueryEfficientGradientEstimation(linear2, num_basis=20, sigma=1e-3, seed=2)
        x = np.random.default_rng(0).random((7, 2))
        qe.loss_gradient(x, one_hot(np.zeros(7, int), 2))
        assert qe.queries_used == 2 * 20 * 7

    def test_determinism(self, linear2):
        x = np.array([[0.2, 0.6], [0.8, 0.3]])
        y = one_hot([0, 1], 2)
        g1 = QueryEfficientGradientEstimation(linear2, 50, 1e-3, seed=3).loss_gradient(x, y)
        g2 = QueryEfficientGradientEstimation(linear2, 50, 1e-3, seed=3).loss_gradient(x, y)
        np.testing.assert_array_equal(g1, g2)

    def test_error_shrinks_as_basis_doubles(self, linear2):
        x = np.array([[0.3, 0.7]])
        y = one_hot([1], 2)
        true = linear2.loss_gradient(x, y)[0]
        mean_err = []
        for num_basis in (25, 50, 100, 200):
            errs = []
            for seed in range(20):
                qe = QueryEfficientGradientEstimation(linear2, num_basis, 1e-3, seed=seed)
                errs.append(np.linalg.norm(qe.loss_gradient(x, y)[0] - true))
            mean_err.append(np.mean(errs))
        assert all(a > b for a, b in zip(mean_err, mean_err[1:]))

    def test_attack_over_estimated_gradients(self, blobs_model):
        model, _, test = blobs_model
        qe = QueryEfficientGradientEstimation(model, num_basis=50, sigma=1e-3, seed=4)
        result = FastGradientMethod(qe, eps=0.3).generate(test.x[:15])
        assert result.success.mean() >= 0.5  # black-box FGSM still bites
        assert qe.queries_used > 0

    def test_large_sigma_warns(self, linear2):
        with pytest.warns(UserWarning):
            QueryEfficientGradientEstimation(linear2, num_basis=5, sigma=0.5)

    def test_class_gradient_shape(self, linear2):
        qe = QueryEfficientGradientEstimation(linear2, num_basis=30, sigma=1e-3, seed=5)
        g = qe.class_gradient(np.array([[0.4, 0.5]]))
        assert g.shape == (1, 2, 2)


class _Inflate:
    """Transformation leaving the valid range, to exercise the clip warning."""

    def sample(self, rng):
        return (lambda x: x * 1.5), (lambda g: g * 1.5)


def test_out_of_range_transformation_warns_and_clips(blobs_model):
    model, _, _ = blobs_model
    eot = ExpectationOverTransformations(model, num_samples=2, transformation=_Inflate(), seed=1)
    with pytest.warns(UserWarning, match="clipping"):
        p = eot.predict(np.array([[0.9, 0.9]]))
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
