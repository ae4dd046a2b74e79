import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import small_model
from oracles import semantic_probability_oracle
from semxai import nn
from semxai.errors import (DegenerateDistribution, IncompleteRadar, InsufficientSamples, InvalidParam,
                           NotFitted, ShapeMismatch)
from semxai.semspace import SemanticSpace
from semxai.semstats import (CONCEPTS, AttackConfig, FittedActivation, Radar, fit_activation_distribution,
                             flag_adversarial, pgd_attack, qq_r2, search_samples, semantic_probability,
                             weighted_activation)

CLASSES = ("cat", "dog")


def radar_of(values):
    keys = [(c, k) for c in CONCEPTS for k in CLASSES]
    return Radar(CLASSES, dict(zip(keys, values)))


def quiet_fit(values):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fit_activation_distribution(values)


# ---------------------------------------------------------------- weighted activation


def test_weighted_activation_examples():
    sp = SemanticSpace("eyes", "cat", [1, 3], [2.0, 1.0], 5)
    assert weighted_activation(np.zeros(5), sp) == 0
    assert weighted_activation(np.array([0, 3.0, 0, 4.0, 0]), sp) == 5.0
    with pytest.raises(ShapeMismatch):
        weighted_activation(np.zeros(3), sp)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=6, max_size=6), st.floats(-10, 10))
def test_weighted_activation_linear(a, c):
    sp = SemanticSpace("nose", "dog", [5, 0, 2], [1.5, -0.5, 0.25], 6)
    a = np.array(a)
    assert np.isclose(weighted_activation(c * a, sp), c * weighted_activation(a, sp), rtol=1e-12, atol=1e-9)


def test_weighted_activation_batch():
    sp = SemanticSpace("nose", "dog", [0, 2], [1.0, 3.0], 4)
    f = np.random.default_rng(0).normal(size=(7, 4))
    assert np.allclose(weighted_activation(f, sp), [weighted_activation(r, sp) for r in f])


# ---------------------------------------------------------------- fitting


def test_fit_closed_form_moments():
    fit = quiet_fit(np.tile([0.0, 1, 2, 3, 4], 6))
    assert fit.mu == 2.0 and np.isclose(fit.sigma, np.sqrt(2), rtol=1e-15)
    assert (fit.a_min, fit.a_max, fit.n) == (0.0, 4.0, 30)


def test_fit_recovers_known_normal():
    v = np.random.default_rng(0).normal(3.0, 0.7, 10_000)
    fit = fit_activation_distribution(v)
    assert abs(fit.mu - 3.0) / 3.0 < 0.05 and abs(fit.sigma - 0.7) / 0.7 < 0.05


def test_fit_errors_and_warning():
    with pytest.raises(DegenerateDistribution):
        quiet_fit(np.full(40, 1.5))
    with pytest.raises(InsufficientSamples):
        fit_activation_distribution(np.arange(29.0))
    with pytest.warns(UserWarning):
        fit_activation_distribution(np.arange(30.0))
    with pytest.raises(DegenerateDistribution):
        FittedActivation(0, 1, 2, 1, 10)


# ---------------------------------------------------------------- semantic probability


def test_endpoints_and_symmetric_midpoint():
    for fit in (FittedActivation(0, 1, -2, 3, 50), FittedActivation(10, 0.1, 10.5, 11, 50),
                FittedActivation(-4, 3, -30, -20, 50)):
        assert abs(semantic_probability(fit.a_min, fit)) <= 1e-12
        assert abs(semantic_probability(fit.a_max, fit) - 1) <= 1e-12
    sym = FittedActivation(1.5, 0.8, 0.3, 2.7, 50)
    assert abs(semantic_probability(1.5, sym) - 0.5) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 3), st.floats(-3, 3), st.floats(0.1, 4), st.floats(-0.5, 1.5))
def test_matches_erf_series_oracle(mu, sigma, lo, width, frac):
    fit = FittedActivation(mu, sigma, mu + lo * sigma, mu + (lo + width) * sigma, 100)
    a = fit.a_min + frac * (fit.a_max - fit.a_min)
    ref = semantic_probability_oracle(a, mu, sigma, fit.a_min, fit.a_max)
    assert abs(semantic_probability(a, fit) - ref) < 1e-10


def test_strictly_increasing_and_not_clamped():
    fit = FittedActivation(0.0, 1.0, -2.5, 2.0, 100)
    grid = np.linspace(-3.0, 2.5, 1000)
    p = semantic_probability(grid, fit)
    assert np.all(np.diff(p) > 0)
    assert semantic_probability(2.5, fit) > 1 and semantic_probability(-3.0, fit) < 0


# ---------------------------------------------------------------- q-q


def test_qq_exact_quantiles():
    n = 200
    v = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert qq_r2(v) > 0.999


def test_qq_normal_beats_uniform():
    for seed in range(3):
        rng = np.random.default_rng(seed)
        normal, uniform = rng.normal(size=10_000), np.random.default_rng(seed).uniform(size=10_000)
        assert qq_r2(uniform) < qq_r2(normal)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(30, 300))
def test_qq_bounded(seed, n):
    v = np.random.default_rng(seed).exponential(size=n)
    assert qq_r2(v) <= 1.0


# ---------------------------------------------------------------- search


@pytest.fixture
def fitted_space():
    rng = np.random.default_rng(1)
    feats = rng.normal(size=(60, 4))
    sp = SemanticSpace("nose", "dog", [1, 2], [1.0, 0.5], 4)
    sp.fit = quiet_fit(weighted_activation(feats, sp))
    return sp, feats


def test_search_matches_brute_filter(fitted_space):
    sp, feats = fitted_space
    p = [semantic_probability(weighted_activation(f, sp), sp.fit) for f in feats]
    ids = [f"img{i}" for i in range(60)]
    for pred, thr in (("above", 0.9), ("above", 0.5), ("below", 0.1), ("below", 0.6)):
        want = [ids[i] for i, v in enumerate(p) if (v > thr if pred == "above" else v < thr)]
        assert search_samples(feats, sp, pred, thr, ids) == want


def test_search_vacuous_and_range(fitted_space):
    sp, feats = fitted_space
    assert search_samples(feats, sp, "above", -0.01) == list(range(60))
    assert len(search_samples(feats, sp, "above", 1.0)) <= 1


def test_search_errors(fitted_space):
    sp, feats = fitted_space
    with pytest.raises(InvalidParam):
        search_samples(feats, sp, "between")
    bare = SemanticSpace("nose", "dog", [1], [1.0], 4)
    with pytest.raises(NotFitted):
        search_samples(feats, bare)


# ---------------------------------------------------------------- flag


def test_flag_examples():
    assert flag_adversarial(radar_of([0.995, 0.2, 0.1, 0.1, 0.1, 0.1]))
    assert flag_adversarial(radar_of([0.92, 0.91, 0.1, 0.1, 0.1, 0.1]))
    assert not flag_adversarial(radar_of([0.9] * 6))
    assert not flag_adversarial(radar_of([0.95, 0.3, 0.1, 0.9, 0.5, 0.2]))


def test_flag_incomplete():
    r = radar_of([0.1] * 6)
    del r.values[("legs", "dog")]
    with pytest.raises(IncompleteRadar):
        flag_adversarial(r)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-0.5, 1.5), min_size=6, max_size=6), st.integers(0, 5), st.floats(0, 1))
def test_flag_monotone(values, i, bump):
    raised = list(values)
    raised[i] += bump
    if flag_adversarial(radar_of(values)):
        assert flag_adversarial(radar_of(raised))


# ---------------------------------------------------------------- PGD


def test_pgd_zero_budget_is_identity():
    m = small_model()
    img = np.random.default_rng(0).random((3, 8, 8))
    assert np.array_equal(pgd_attack(m, img, 1, AttackConfig(epsilon=0.0)), img)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.001, 0.2), st.integers(1, 6))
def test_pgd_projection(seed, eps, steps):
    m = small_model()
    img = np.random.default_rng(seed).random((3, 8, 8))
    out = pgd_attack(m, img, seed % 2, AttackConfig(epsilon=eps, steps=steps, seed=seed))
    assert np.abs(out - img).max() <= eps + 1e-15
    assert out.min() >= 0 and out.max() <= 1


def test_pgd_raises_target_probability():
    m = small_model()
    img = np.random.default_rng(1).random((3, 8, 8))
    out = pgd_attack(m, img, 0, AttackConfig(epsilon=0.1, steps=10, random_start=False))
    assert nn.predict(m, out)[0] > nn.predict(m, img)[0]


def test_attack_config_validation():
    with pytest.raises(InvalidParam):
        AttackConfig(epsilon=-0.1)
    with pytest.raises(InvalidParam):
        AttackConfig(steps=0)
    with pytest.raises(InvalidParam):
        pgd_attack(small_model(), np.zeros((3, 8, 8)), 2)
