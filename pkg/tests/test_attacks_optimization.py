"""Optimization-based white-box attacks: JSMA, C&W (L2/LInf), DeepFool,
NewtonFool, virtual adversarial method."""

import numpy as np
import pytest

from advkit.attacks import (
    CarliniL2Method,
    CarliniLInfMethod,
    DeepFool,
    FastGradientMethod,
    NewtonFool,
    SaliencyMapMethod,
    VirtualAdversarialMethod,
)
from advkit.attacks.carlini import TANH_GAMMA, _TanhSpace
from advkit.exceptions import InvalidConfigError
from advkit.numerics import NormKind, kl_divergence
from advkit.utils import one_hot, rng_from, sample_seed


class TestJsma:
    def test_budget_respected(self, bars_model):
        model, _, test = bars_model
        x = test.x[:30]
        targets = one_hot(1 - test.labels()[:30], 2)
        result = SaliencyMapMethod(model, theta=1.0, gamma=0.2).generate(x, targets)
        assert result.norms[NormKind.L0].max() <= np.floor(0.2 * 64)

    def test_already_target_class_untouched(self, bars_model):
        model, _, test = bars_model
        x = test.x[:20]
        current = one_hot(model.predict_classes(x), 2)
        result = SaliencyMapMethod(model, theta=1.0, gamma=0.5).generate(x, current)
        np.testing.assert_array_equal(result.x_adv, x)
        assert result.success.all()
        assert np.all(result.norms[NormKind.L0] == 0)

    def test_two_feature_degenerate_case(self, linear2):
        # with N=2 the only pair is all features; probability gradients sum
        # to zero, so no admissible pair exists and the attack gives up
        x = np.array([[0.2, 0.2]])
        result = SaliencyMapMethod(linear2, theta=0.3, gamma=1.0).generate(
            x, one_hot([1], 2)
        )
        np.testing.assert_array_equal(result.x_adv, x)
        assert not result.success[0]

    def test_negative_theta_removes_features(self, bars_model):
        model, _, test = bars_model
        labels = test.labels()
        horizontal = test.x[labels == 0][:10]
        targets = one_hot(np.ones(len(horizontal), dtype=int), 2)
        result = SaliencyMapMethod(model, theta=-1.0, gamma=0.5).generate(
            horizontal, targets
        )
        changed = result.norms[NormKind.L0] > 0
        assert changed.any()
        diffs = (result.x_adv - horizontal)[changed]
        assert diffs[diffs != 0].max() <= 0  # only decreases

    def test_invalid_config(self, linear2):
        with pytest.raises(InvalidConfigError):
            SaliencyMapMethod(linear2, theta=0.0)
        with pytest.raises(InvalidConfigError):
            SaliencyMapMethod(linear2, theta=0.1, gamma=0.0)


class TestCarliniL2:
    def test_default_tanh_gamma_is_paper_constant(self, linear2):
        assert CarliniL2Method(linear2).tanh_gamma == 0.999999 == TANH_GAMMA

    def test_margin_condition_on_successes(self, blobs_model):
        model, _, test = blobs_model
        kappa = 0.5
        attack = CarliniL2Method(
            model, confidence=kappa, binary_search_steps=6, max_iter=10,
            learning_rate=0.1,
        )
        x = test.x[:25]
        result = attack.generate(x)
        z = model.predict(result.x_adv[result.success], logits=True)
        original = model.predict_classes(x)[result.success]
        for zi, orig in zip(z, original):
            others = np.delete(zi, orig)
            assert others.max() - zi[orig] >= kappa - 1e-6

    def test_failure_returns_input(self, blobs_model):
        model, _, test = blobs_model
        # absurd confidence is unreachable: every sample must come back as-is
        attack = CarliniL2Method(
            model, confidence=1e6, binary_search_steps=2, max_iter=2, c_upper=1.0,
            c_init=0.5,
        )
        x = test.x[:5]
        result = attack.generate(x)
        np.testing.assert_array_equal(result.x_adv, x)
        assert not result.success.any()

    def test_beats_minimal_fgsm_on_l2(self, blobs_model):
        model, _, test = blobs_model
        x = test.x[:40]
        cw = CarliniL2Method(
            model, binary_search_steps=8, max_iter=10, learning_rate=0.1
        ).generate(x)
        fgm = FastGradientMethod(
            model, norm=NormKind.L2, minimal=True, eps_step=0.05, eps_max=2.0
        ).generate(x)
        both = cw.success & fgm.success
        assert both.sum() >= 10
        assert (
            cw.norms[NormKind.L2][both].mean() < fgm.norms[NormKind.L2][both].mean()
        )

    def test_invalid_configs(self, linear2):
        with pytest.raises(InvalidConfigError):
            CarliniL2Method(linear2, c_init=0.0)
        with pytest.raises(InvalidConfigError):
            CarliniL2Method(linear2, c_init=2.0, c_upper=1.0)
        with pytest.raises(InvalidConfigError):
            CarliniL2Method(linear2, confidence=-0.1)


class TestCarliniLInf:
    def test_budget_by_construction(self, blobs_model):
        model, _, test = blobs_model
        eps = 0.15
        result = CarliniLInfMethod(
            model, eps=eps, max_iter=10, learning_rate=0.5
        ).generate(test.x[:30])
        assert result.norms[NormKind.LINF].max() <= eps + 1e-9

    def test_corner_round_trip(self, linear2):
        space = CarliniLInfMethod(linear2, eps=0.3).transform_for(np.zeros(4))
        x = np.zeros(4)
        np.testing.assert_allclose(space.to_x(space.to_z(x)), x, atol=1e-9)

    def test_interior_round_trip(self):
        rng = np.random.default_rng(0)
        lo = np.zeros(6)
        hi = np.ones(6)
        space = _TanhSpace(lo, hi, TANH_GAMMA)
        x = rng.uniform(0.05, 0.95, size=6)
        np.testing.assert_allclose(space.to_x(space.to_z(x)), x, atol=1e-9)

    def test_wide_budget_succeeds_at_least_as_often_as_cw_l2(self, blobs_model):
        model, _, test = blobs_model
        x = test.x[:20]
        linf = CarliniLInfMethod(model, eps=1.0, max_iter=10, learning_rate=0.5).generate(x)
        l2 = CarliniL2Method(
            model, binary_search_steps=4, max_iter=10, learning_rate=0.1
        ).generate(x)
        assert linf.success.mean() >= l2.success.mean()

    def test_eps_must_be_positive(self, linear2):
        with pytest.raises(InvalidConfigError):
            CarliniLInfMethod(linear2, eps=0.0)


class TestDeepFool:
    def test_linear2_boundary_projection_with_overshoot(self, linear2):
        result = DeepFool(linear2, max_iter=10, overshoot=0.02).generate(
            np.array([[0.3, 0.7]])
        )
        np.testing.assert_allclose(result.x_adv, [[0.504, 0.496]], atol=1e-9)
        assert result.success[0]
        assert linear2.predict_classes(result.x_adv)[0] == 0

    def test_zero_overshoot_lands_on_boundary(self, linear2):
        result = DeepFool(linear2, max_iter=10, overshoot=0.0).generate(
            np.array([[0.3, 0.7]])
        )
        z = linear2.predict(result.x_adv, logits=True)[0]
        assert abs(z[0] - z[1]) <= 1e-9

    def test_blobs_success_rate(self, blobs_model):
        model, _, test = blobs_model
        result = DeepFool(model, max_iter=50, overshoot=0.02).generate(test.x)
        assert result.success.mean() >= 0.90

    def test_degenerate_gradients_return_unchanged(self):
        from advkit import MlpArchitecture, MlpClassifier

        model = MlpClassifier(MlpArchitecture(2, (), 2), rng_seed=0)
        model.weights[0] = np.ones((2, 2))  # identical class scores everywhere
        model.biases[0] = np.zeros(2)
        x = np.array([[0.4, 0.6]])
        result = DeepFool(model, max_iter=5).generate(x)
        np.testing.assert_array_equal(result.x_adv, x)
        assert not result.success[0]


class TestNewtonFool:
    def test_adaptive_step_matches_gradient_term(self, linear2):
        # small eta: delta = eta*||x||*||grad F_y||; one step cuts F_y by ~delta
        x = np.array([[0.9, 0.1]])
        eta = 1e-3
        f0 = linear2.predict(x)[0]
        y = int(np.argmax(f0))
        grad = linear2.class_gradient(x, label=y)[0, 0]
        delta = eta * np.linalg.norm(x) * np.linalg.norm(grad)
        result = NewtonFool(linear2, eta=eta, max_iter=1).generate(x)
        f1 = linear2.predict(result.x_adv)[0, y]
        assert f0[y] - f1 == pytest.approx(delta, rel=0.05)

    def test_uniform_probability_is_noop(self, linear2):
        x = np.array([[0.5, 0.5]])  # F_y = 1/K exactly
        result = NewtonFool(linear2, eta=0.5, max_iter=5).generate(x)
        np.testing.assert_array_equal(result.x_adv, x)

    def test_probability_nonincreasing_on_linear2(self, linear2):
        # deterministic iterates: k-iteration runs are prefixes of longer runs
        x = np.array([[0.8, 0.2]])
        y = int(linear2.predict_classes(x)[0])
        probs = [linear2.predict(x)[0, y]]
        for k in range(1, 16):
            adv = NewtonFool(linear2, eta=0.05, max_iter=k).generate(x).x_adv
            probs.append(linear2.predict(adv)[0, y])
        assert np.all(np.diff(probs) <= 1e-10)

    def test_invalid_eta(self, linear2):
        with pytest.raises(InvalidConfigError):
            NewtonFool(linear2, eta=0.0)


class TestVat:
    def test_unit_direction_before_scaling(self, linear2):
        attack = VirtualAdversarialMethod(linear2, eps=0.2, xi=1e-6, max_iter=2, seed=3)
        d = attack.unit_direction(np.array([0.3, 0.7]))
        assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-12)

    def test_perturbation_norm_equals_eps_when_unclipped(self, linear2):
        x = np.array([[0.5, 0.5]])
        result = VirtualAdversarialMethod(linear2, eps=0.1, max_iter=1, seed=1).generate(x)
        assert result.norms[NormKind.L2][0] <= 0.1 + 1e-12

    def test_ascent_does_not_reduce_divergence(self, linear2):
        x = np.array([0.3, 0.7])
        attack = VirtualAdversarialMethod(linear2, eps=0.1, xi=1e-6, max_iter=3, seed=5)
        rng = rng_from(sample_seed(5, x), "vat-init")
        d0 = rng.standard_normal(2)
        d0 /= np.linalg.norm(d0)
        d_final = attack.unit_direction(x)
        p = linear2.predict(x[None, :])[0]
        xi = 1e-6
        kl0 = kl_divergence(p, linear2.predict((x + xi * d0)[None, :])[0])
        kl1 = kl_divergence(p, linear2.predict((x + xi * d_final)[None, :])[0])
        assert kl1 >= kl0 - 1e-18

    def test_determinism_and_batch_invariance(self, blobs_model):
        model, _, test = blobs_model
        x = test.x[:4]
        attack = VirtualAdversarialMethod(model, eps=0.1, max_iter=2, seed=9)
        batch = attack.generate(x).x_adv
        np.testing.assert_array_equal(batch, attack.generate(x).x_adv)
        single = np.concatenate([attack.generate(x[i : i + 1]).x_adv for i in range(4)])
        np.testing.assert_allclose(batch, single, atol=1e-12)

    def test_invalid_config(self, linear2):
        with pytest.raises(InvalidConfigError):
            VirtualAdversarialMethod(linear2, eps=0.0)
        with pytest.raises(InvalidConfigError):
            VirtualAdversarialMethod(linear2, xi=0.0)
