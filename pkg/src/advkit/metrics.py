"""Robustness metrics: empirical robustness, loss sensitivity, CLEVER."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .data import Dataset
from .exceptions import (
    InvalidConfigError,
    InvalidInputError,
    InvalidLabelError,
    NoSuccessfulAttackError,
    UnsupportedNormError,
)
from .numerics import NormKind, row_norms
from .utils import derive_seed, rng_from

# ----------------------------------------------------------------- simple ones


def empirical_robustness(classifier, attack, dataset: Dataset, p: NormKind = NormKind.L2) -> float:
    """Mean relative perturbation over successfully attacked samples.

    ER = mean over successes of ||x_adv - x||_p / ||x||_p. Raises when the
    attack fooled nothing, rather than silently reporting zero robustness.
    """
    result = attack.generate(dataset.x)
    success = result.success
    if not np.any(success):
        raise NoSuccessfulAttackError("attack succeeded on no sample; ER undefined")
    pert = result.norms[p][success]
    ref = row_norms(dataset.x[success], p)
    if np.any(ref == 0):
        raise InvalidInputError("a successfully attacked sample has zero norm")
    return float(np.mean(pert / ref))


def loss_sensitivity(classifier, x: np.ndarray, y: np.ndarray) -> float:
    """Mean L2 norm of per-sample loss gradients at the given points."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidInputError("loss_sensitivity needs a non-empty 2-d x")
    grads = classifier.loss_gradient(x, y)
    return float(np.mean(row_norms(grads, NormKind.L2)))


# ------------------------------------------------------------------- Weibull


@dataclass
class WeibullFit:
    """Reverse Weibull (max-domain) parameters; location is the upper endpoint."""

    location: float
    scale: float
    shape: float
    converged: bool


_SHAPE_GRID = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)


def weibull_mle(samples: np.ndarray) -> WeibullFit:
    """Fit a reverse Weibull to bounded maxima by grid-seeded numerical MLE.

    -samples follows a standard (min-domain) Weibull, so the fit runs there;
    each shape seed starts a Nelder-Mead refinement of the full likelihood
    and the best final likelihood wins. All-equal samples short-circuit to a
    degenerate fit at that value.
    """
    s = np.asarray(samples, dtype=np.float64).ravel()
    if s.size < 2:
        raise InvalidInputError("need at least 2 samples for a Weibull fit")
    if np.ptp(s) == 0.0:
        return WeibullFit(location=float(s[0]), scale=0.0, shape=0.0, converged=False)
    neg = -s
    best = None
    for c0 in _SHAPE_GRID:
        try:
            c, loc, scale = stats.weibull_min.fit(
                neg, c0, optimizer=_quiet_fmin
            )
        except (RuntimeError, ValueError):
            continue
        if not (np.isfinite(c) and np.isfinite(loc) and np.isfinite(scale)):
            continue
        if c <= 0 or scale <= 0:
            continue
        ll = float(np.sum(stats.weibull_min.logpdf(neg, c, loc, scale)))
        if not np.isfinite(ll):
            continue
        if best is None or ll > best[0]:
            best = (ll, c, loc, scale)
    if best is None:
        # fall back to the sample maximum; callers treat this as unconverged
        return WeibullFit(location=float(s.max()), scale=0.0, shape=0.0, converged=False)
    _, c, loc, scale = best
    return WeibullFit(location=float(-loc), scale=float(scale), shape=float(c), converged=True)


def _quiet_fmin(func, x0, args=(), disp=0):
    return optimize.fmin(func, x0, args=args, disp=False)


def weibull_loglik(samples: np.ndarray, fit: WeibullFit) -> float:
    """Log-likelihood of a reverse Weibull fit on the given maxima."""
    neg = -np.asarray(samples, dtype=np.float64).ravel()
    return float(
        np.sum(stats.weibull_min.logpdf(neg, fit.shape, -fit.location, fit.scale))
    )


# -------------------------------------------------------------------- CLEVER


@dataclass
class CleverConfig:
    n_batch: int = 10
    n_sample: int = 20
    radius: float = 0.3
    norm: NormKind = NormKind.L2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_batch < 2:
            raise InvalidConfigError("n_batch must be >= 2 (the MLE needs several maxima)")
        if self.n_sample < 1:
            raise InvalidConfigError("n_sample must be >= 1")
        if self.radius <= 0:
            raise InvalidConfigError("radius must be > 0")
        if self.norm not in (NormKind.L1, NormKind.L2, NormKind.LINF):
            raise UnsupportedNormError("CLEVER norm must be L1, L2 or LInf")


@dataclass
class CleverResult:
    score: float
    weibull: WeibullFit
    mle_fallback: bool
    target: int


def _ball_samples(rng, center: np.ndarray, norm: NormKind, radius: float, count: int):
    """Uniform draws from the lp ball around center."""
    dim = center.size
    if norm is NormKind.LINF:
        offsets = rng.uniform(-radius, radius, size=(count, dim))
    elif norm is NormKind.L2:
        directions = rng.normal(size=(count, dim))
        directions /= np.maximum(
            np.sqrt((directions**2).sum(axis=1, keepdims=True)), 1e-30
        )
        radii = radius * rng.random(count) ** (1.0 / dim)
        offsets = directions * radii[:, None]
    else:  # L1: exponential magnitudes on the simplex with random signs
        mags = rng.exponential(size=(count, dim))
        mags /= mags.sum(axis=1, keepdims=True)
        signs = rng.choice((-1.0, 1.0), size=(count, dim))
        radii = radius * rng.random(count) ** (1.0 / dim)
        offsets = signs * mags * radii[:, None]
    return center[None, :] + offsets


def clever_t(classifier, x: np.ndarray, target: int, config: CleverConfig) -> CleverResult:
    """CLEVER score for a targeted attack: extreme-value bound on the margin.

    Samples the dual-norm gradient-difference magnitude over the lp ball,
    fits a reverse Weibull to per-batch maxima, and caps margin / location
    at the sampling radius.
    """
    row = np.asarray(x, dtype=np.float64).ravel()
    source = int(classifier.predict_classes(row[None, :])[0])
    if target == source:
        raise InvalidLabelError("CLEVER target must differ from the predicted class")
    if not 0 <= target < classifier.nb_classes:
        raise InvalidLabelError(f"target {target} out of range")
    q = config.norm.dual()
    maxima = []
    for batch in range(config.n_batch):
        rng = rng_from(derive_seed(config.seed, "clever", target, batch))
        pts = _ball_samples(rng, row, config.norm, config.radius, config.n_sample)
        g_src = classifier.class_gradient(pts, label=source, logits=True)[:, 0, :]
        g_tgt = classifier.class_gradient(pts, label=target, logits=True)[:, 0, :]
        b = row_norms(g_src - g_tgt, q)
        maxima.append(float(b.max()))
    maxima = np.asarray(maxima)
    fit = weibull_mle(maxima)
    fallback = not fit.converged and np.ptp(maxima) > 0.0
    location = fit.location if fit.converged or np.ptp(maxima) == 0.0 else float(maxima.max())
    z = classifier.predict(row[None, :], logits=True)[0]
    margin = float(z[source] - z[target])
    if location <= 0.0:
        score = config.radius
    else:
        score = min(margin / location, config.radius)
    score = max(score, 0.0)
    return CleverResult(score=float(score), weibull=fit, mle_fallback=fallback, target=target)


def clever_u(classifier, x: np.ndarray, config: CleverConfig) -> CleverResult:
    """Untargeted CLEVER: minimum targeted score over all other classes.

    Per-target seeds derive exactly as in clever_t, so the minimum matches
    individually computed targeted scores bit for bit.
    """
    row = np.asarray(x, dtype=np.float64).ravel()
    source = int(classifier.predict_classes(row[None, :])[0])
    best: CleverResult | None = None
    for target in range(classifier.nb_classes):
        if target == source:
            continue
        result = clever_t(classifier, row, target, config)
        if best is None or result.score < best.score:
            best = result
    if best is None:
        raise InvalidInputError("model has no alternative class to target")
    return best
