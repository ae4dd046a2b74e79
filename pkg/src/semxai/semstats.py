"""Statistics over semantic spaces: weighted activations, fitted normal
distributions, semantic probabilities, sample search and adversarial flags."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from . import nn
from .errors import (
    DegenerateDistribution,
    IncompleteRadar,
    InsufficientSamples,
    InvalidParam,
    NotFitted,
    ShapeMismatch,
)

CONCEPTS = ("eyes", "nose", "legs")
MIN_FIT_SAMPLES = 30
WARN_FIT_SAMPLES = 300
FLAG_SINGLE = 0.99
FLAG_MULTI = 0.9


def weighted_activation(features, space):
    """``A_s = mean_i(a_i * w_i)`` over the SSNs of ``space``.

    ``features`` is one GAP vector or an ``(N, C)`` batch.
    """
    f = np.asarray(features, dtype=np.float64)
    if f.shape[-1] <= space.indices.max():
        raise ShapeMismatch(f"feature length {f.shape[-1]} too short for SSN index {space.indices.max()}")
    return (f[..., space.indices] * space.weights).mean(axis=-1)


@dataclass
class FittedActivation:
    mu: float
    sigma: float
    a_min: float
    a_max: float
    n: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise DegenerateDistribution("sigma must be > 0")
        if not self.a_min < self.a_max:
            raise DegenerateDistribution("a_min must be < a_max")

    def as_dict(self):
        return {"mu": self.mu, "sigma": self.sigma, "a_min": self.a_min, "a_max": self.a_max, "n": self.n}


def _check_values(values):
    v = np.asarray(values, dtype=np.float64).ravel()
    if len(v) < MIN_FIT_SAMPLES:
        raise InsufficientSamples(f"need >= {MIN_FIT_SAMPLES} activations, got {len(v)}")
    return v


def fit_activation_distribution(values):
    """Maximum-likelihood normal fit plus the empirical extremes."""
    v = _check_values(values)
    if len(v) < WARN_FIT_SAMPLES:
        warnings.warn(f"fitting a distribution to only {len(v)} activations", stacklevel=2)
    sigma = float(v.std())
    if sigma == 0 or v.min() == v.max():
        raise DegenerateDistribution("activations are constant")
    return FittedActivation(float(v.mean()), sigma, float(v.min()), float(v.max()), len(v))


def semantic_probability(a, fit):
    """Position of ``a`` between the fitted extremes under the normal cdf:
    ``(cdf(a) - cdf(a_min)) / (cdf(a_max) - cdf(a_min))``.

    Not clamped: activations beyond ``a_max`` give values above 1.
    """
    z = (np.asarray(a, dtype=np.float64) - fit.mu) / fit.sigma
    lo = (fit.a_min - fit.mu) / fit.sigma
    hi = (fit.a_max - fit.mu) / fit.sigma
    if lo + hi > 0:
        # upper tail: survival function keeps precision where cdf saturates
        p = (special.ndtr(-lo) - special.ndtr(-z)) / (special.ndtr(-lo) - special.ndtr(-hi))
    else:
        p = (special.ndtr(z) - special.ndtr(lo)) / (special.ndtr(hi) - special.ndtr(lo))
    return float(p) if np.ndim(p) == 0 else p


def qq_r2(values):
    """R^2 of the least-squares line through the normal q-q points."""
    v = _check_values(values)
    if v.min() == v.max():
        raise DegenerateDistribution("activations are constant")
    (_, _), (_, _, r) = stats.probplot(v, dist="norm")
    return float(r * r)


def search_samples(features, space, predicate="above", threshold=0.9, ids=None):
    """Ids (dataset order) whose semantic probability is above/below ``threshold``."""
    if space.fit is None:
        raise NotFitted(f"semantic space {space.key} has no fitted distribution")
    if predicate not in ("above", "below"):
        raise InvalidParam("predicate must be 'above' or 'below'")
    f = np.atleast_2d(np.asarray(features, dtype=np.float64))
    p = np.atleast_1d(semantic_probability(weighted_activation(f, space), space.fit))
    ids = list(range(len(f))) if ids is None else list(ids)
    keep = p > threshold if predicate == "above" else p < threshold
    return [i for i, k in zip(ids, keep) if k]


# ---------------------------------------------------------------- radar / flag


@dataclass
class Radar:
    """Semantic probability for every (concept, class) pair."""

    classes: tuple
    values: dict = field(default_factory=dict)
    concepts: tuple = CONCEPTS

    def __getitem__(self, key):
        return self.values[key]

    @property
    def complete(self):
        return all((c, k) in self.values for c in self.concepts for k in self.classes)

    def require_complete(self):
        if len(self.classes) != 2 or not self.complete:
            missing = [(c, k) for c in self.concepts for k in self.classes if (c, k) not in self.values]
            raise IncompleteRadar(f"radar needs {len(self.concepts)} concepts x 2 classes; missing {missing}")

    def rows(self):
        return [(c, k, float(self.values[(c, k)])) for k in self.classes for c in self.concepts]


def flag_adversarial(radar, single=FLAG_SINGLE, multi=FLAG_MULTI):
    """True when one probability exceeds ``single`` or two or more exceed ``multi``."""
    radar.require_complete()
    p = np.array([radar.values[(c, k)] for c in radar.concepts for k in radar.classes])
    return bool(np.any(p > single) or np.count_nonzero(p > multi) >= 2)


# ---------------------------------------------------------------- attack


@dataclass
class AttackConfig:
    """PGD settings; ``epsilon`` and ``step_size`` are in raw pixel units
    (images live in ``[0, 1]``)."""

    epsilon: float = 0.05
    steps: int = 20
    step_size: float | None = None
    seed: int = 0
    random_start: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise InvalidParam("epsilon must be >= 0")
        if self.steps < 1:
            raise InvalidParam("steps must be >= 1")

    @property
    def alpha(self):
        return 2.5 * self.epsilon / self.steps if self.step_size is None else self.step_size


def pgd_attack(model, image, target, config=None):
    """Targeted projected gradient descent on cross-entropy toward ``target``,
    projected onto the ``epsilon`` L-inf ball and ``[0, 1]``."""
    config = config or AttackConfig()
    if not 0 <= target < model.n_classes:
        raise InvalidParam(f"class id {target} outside [0, {model.n_classes})")
    x0 = np.asarray(image, dtype=np.float64)
    lo, hi = np.clip(x0 - config.epsilon, 0, 1), np.clip(x0 + config.epsilon, 0, 1)
    x = x0.copy()
    if config.random_start and config.epsilon > 0:
        rng = np.random.default_rng(config.seed)
        x = np.clip(x0 + rng.uniform(-config.epsilon, config.epsilon, x0.shape), lo, hi)
    std = model.std.reshape(-1, 1, 1)
    for _ in range(config.steps):
        _, gz = nn.class_loss_gradient(model, model.standardize(x), [target])
        x = np.clip(x - config.alpha * np.sign(gz / std), lo, hi)
    return x
