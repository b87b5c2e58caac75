"""Carlini & Wagner attacks: L2 with binary search over c, and the
eps-constrained LInf variant via a range-restricted tanh transform."""

from __future__ import annotations

import numpy as np

from ..exceptions import InvalidConfigError
from .base import AttackResult, EvasionAttack

TANH_GAMMA = 0.999999  # overflow guard in (arc)tanh round trips


def _margin_loss(z_row: np.ndarray, y: int, kappa: float, targeted: bool) -> float:
    """Hinge on the logit margin; zero iff the attack goal holds with slack kappa."""
    other = np.max(np.delete(z_row, y))
    if targeted:
        return max(other - z_row[y] + kappa, 0.0)
    return max(z_row[y] - other + kappa, 0.0)


def _margin_gradient(classifier, x_row: np.ndarray, y: int, targeted: bool) -> np.ndarray:
    """Gradient of the active hinge branch w.r.t. the model input."""
    z = classifier.predict(x_row[None, :], logits=True)[0]
    masked = z.copy()
    masked[y] = -np.inf
    i_star = int(np.argmax(masked))
    g_y = classifier.class_gradient(x_row[None, :], label=y, logits=True)[0, 0]
    g_i = classifier.class_gradient(x_row[None, :], label=i_star, logits=True)[0, 0]
    return (g_i - g_y) if targeted else (g_y - g_i)


class _TanhSpace:
    """Componentwise map between a box [lo, hi] and all of R via arctanh."""

    def __init__(self, lo: np.ndarray, hi: np.ndarray, gamma: float) -> None:
        self.lo = lo
        self.hi = hi
        self.width = hi - lo
        self.gamma = gamma

    def to_z(self, x: np.ndarray) -> np.ndarray:
        frac = (x - self.lo) / self.width
        return np.arctanh((2.0 * frac - 1.0) * self.gamma)

    def to_x(self, z: np.ndarray) -> np.ndarray:
        # tanh/gamma slightly overshoots (-1, 1); clamp so iterates never
        # leave the box and LInf budgets hold exactly
        x = self.lo + (np.tanh(z) / self.gamma + 1.0) / 2.0 * self.width
        return np.clip(x, self.lo, self.hi)

    def dx_dz(self, z: np.ndarray) -> np.ndarray:
        return (1.0 - np.tanh(z) ** 2) / (2.0 * self.gamma) * self.width


def _line_search_descent(objective, gradient, z0, learning_rate, max_iter,
                         max_halving, max_doubling):
    """Gradient descent with binary line search on the step size.

    Per iteration: try the current step; if it does not improve, halve up to
    max_halving times; if it improves, keep doubling (up to max_doubling)
    while the objective keeps dropping.
    """
    z = z0.copy()
    value = objective(z)
    lr = learning_rate
    for _ in range(max_iter):
        g = gradient(z)
        step = lr
        cand = z - step * g
        cand_value = objective(cand)
        if cand_value < value:
            for _ in range(max_doubling):
                nxt = z - 2.0 * step * g
                nxt_value = objective(nxt)
                if nxt_value >= cand_value:
                    break
                step *= 2.0
                cand, cand_value = nxt, nxt_value
        else:
            improved = False
            for _ in range(max_halving):
                step *= 0.5
                cand = z - step * g
                cand_value = objective(cand)
                if cand_value < value:
                    improved = True
                    break
            if not improved:
                break
        z, value = cand, cand_value
        lr = step
    return z


class CarliniL2Method(EvasionAttack):
    """L2-minimal margin attack optimized in tanh space.

    An outer binary search tunes the trade-off constant c; the inner solver
    is gradient descent with binary line search on
    ||x' - x||_2^2 + c * margin_hinge(x'). Among all margin-satisfying
    iterates the closest one is kept; total failure returns the input.
    """

    def __init__(
        self,
        classifier,
        confidence: float = 0.0,
        targeted: bool = False,
        learning_rate: float = 0.01,
        binary_search_steps: int = 10,
        c_init: float = 0.01,
        c_upper: float = 1e10,
        max_iter: int = 10,
        max_halving: int = 5,
        max_doubling: int = 5,
        tanh_gamma: float = TANH_GAMMA,
    ) -> None:
        super().__init__(classifier)
        if confidence < 0:
            raise InvalidConfigError("confidence (kappa) must be >= 0")
        if c_init <= 0 or c_upper <= c_init:
            raise InvalidConfigError("need 0 < c_init < c_upper")
        if not 0.0 < tanh_gamma < 1.0:
            raise InvalidConfigError("tanh_gamma must be in (0, 1)")
        if min(max_iter, max_halving, max_doubling, binary_search_steps) < 1:
            raise InvalidConfigError("iteration counts must be >= 1")
        if learning_rate <= 0:
            raise InvalidConfigError("learning_rate must be > 0")
        self.confidence = confidence
        self.targeted = targeted
        self.learning_rate = learning_rate
        self.binary_search_steps = binary_search_steps
        self.c_init = c_init
        self.c_upper = c_upper
        self.max_iter = max_iter
        self.max_halving = max_halving
        self.max_doubling = max_doubling
        self.tanh_gamma = tanh_gamma

    def _attack_one(self, row: np.ndarray, y: int) -> np.ndarray:
        clip = self.classifier.clip
        space = _TanhSpace(
            np.full_like(row, clip.x_min), np.full_like(row, clip.x_max), self.tanh_gamma
        )
        z0 = space.to_z(row)

        def hinge(x_model: np.ndarray) -> float:
            z_row = self.classifier.predict(x_model[None, :], logits=True)[0]
            return _margin_loss(z_row, y, self.confidence, self.targeted)

        def minimize_objective(c: float):
            best_adv = None
            best_dist = np.inf

            def objective(zv: np.ndarray) -> float:
                nonlocal best_adv, best_dist
                x_model = space.to_x(zv)
                dist = float(np.sum((x_model - row) ** 2))
                h = hinge(x_model)
                if h == 0.0 and dist < best_dist:
                    best_adv, best_dist = x_model.copy(), dist
                return dist + c * h

            def grad(zv: np.ndarray) -> np.ndarray:
                x_model = space.to_x(zv)
                g = 2.0 * (x_model - row)
                if hinge(x_model) > 0.0:
                    g = g + c * _margin_gradient(self.classifier, x_model, y, self.targeted)
                return g * space.dx_dz(zv)

            z_final = _line_search_descent(
                objective, grad, z0, self.learning_rate,
                self.max_iter, self.max_halving, self.max_doubling,
            )
            if best_adv is not None:
                return best_adv
            return space.to_x(z_final)

        x_adv = row.copy()
        l_min = np.inf
        c_lower, c, c_double = 0.0, self.c_init, True
        steps = self.binary_search_steps
        while steps > 0 and c < self.c_upper:
            x_new = minimize_objective(c)
            h_new = hinge(x_new)
            dist = float(np.sum((x_new - row) ** 2))
            if h_new == 0.0 and dist < l_min:
                l_min = dist
                x_adv = x_new
            if h_new == 0.0:
                c_double = False
                c = (c_lower + c) / 2.0
            else:
                c_old = c
                c = 2.0 * c if c_double else c + (c - c_lower) / 2.0
                c_lower = c_old
            steps -= 1
        return x_adv

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        labels = self._resolve_labels(x, y)
        targets = np.argmax(labels, axis=1)
        original = self.classifier.predict_classes(x)
        x_adv = np.stack(
            [self._attack_one(row, int(t)) for row, t in zip(x, targets)]
        )
        lo, hi = self.classifier.clip.x_min, self.classifier.clip.x_max
        x_adv = np.clip(x_adv, lo, hi)
        return self._finalize(x, x_adv, labels, original)


class CarliniLInfMethod(EvasionAttack):
    """Margin attack constrained to an LInf ball by construction.

    The tanh transform is restricted per component to the intersection of
    the data range and [x - eps, x + eps], so any iterate satisfies the
    LInf budget without projections; the optimizer then just minimizes the
    margin hinge.
    """

    def __init__(
        self,
        classifier,
        eps: float = 0.3,
        confidence: float = 0.0,
        targeted: bool = False,
        learning_rate: float = 0.01,
        max_iter: int = 10,
        max_halving: int = 5,
        max_doubling: int = 5,
        tanh_gamma: float = TANH_GAMMA,
    ) -> None:
        super().__init__(classifier)
        if eps <= 0:
            raise InvalidConfigError("eps must be > 0")
        if confidence < 0:
            raise InvalidConfigError("confidence (kappa) must be >= 0")
        if not 0.0 < tanh_gamma < 1.0:
            raise InvalidConfigError("tanh_gamma must be in (0, 1)")
        if min(max_iter, max_halving, max_doubling) < 1:
            raise InvalidConfigError("iteration counts must be >= 1")
        if learning_rate <= 0:
            raise InvalidConfigError("learning_rate must be > 0")
        self.eps = eps
        self.confidence = confidence
        self.targeted = targeted
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.max_halving = max_halving
        self.max_doubling = max_doubling
        self.tanh_gamma = tanh_gamma

    def transform_for(self, row: np.ndarray) -> _TanhSpace:
        clip = self.classifier.clip
        lo = np.maximum(row - self.eps, clip.x_min)
        hi = np.minimum(row + self.eps, clip.x_max)
        return _TanhSpace(lo, hi, self.tanh_gamma)

    def _attack_one(self, row: np.ndarray, y: int) -> np.ndarray:
        space = self.transform_for(row)
        z0 = space.to_z(row)

        def hinge(x_model: np.ndarray) -> float:
            z_row = self.classifier.predict(x_model[None, :], logits=True)[0]
            return _margin_loss(z_row, y, self.confidence, self.targeted)

        best = None

        def objective(zv: np.ndarray) -> float:
            nonlocal best
            x_model = space.to_x(zv)
            h = hinge(x_model)
            if h == 0.0 and best is None:
                best = x_model.copy()
            return h

        def grad(zv: np.ndarray) -> np.ndarray:
            x_model = space.to_x(zv)
            if hinge(x_model) == 0.0:
                return np.zeros_like(zv)
            g = _margin_gradient(self.classifier, x_model, y, self.targeted)
            return g * space.dx_dz(zv)

        z_final = _line_search_descent(
            objective, grad, z0, self.learning_rate,
            self.max_iter, self.max_halving, self.max_doubling,
        )
        if best is not None:
            return best
        x_final = space.to_x(z_final)
        if hinge(x_final) == 0.0:
            return x_final
        return row.copy()

    def generate(self, x: np.ndarray, y: np.ndarray | None = None) -> AttackResult:
        x = self._check_inputs(x)
        labels = self._resolve_labels(x, y)
        targets = np.argmax(labels, axis=1)
        original = self.classifier.predict_classes(x)
        x_adv = np.stack(
            [self._attack_one(row, int(t)) for row, t in zip(x, targets)]
        )
        return self._finalize(x, x_adv, labels, original)
