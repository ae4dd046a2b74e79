import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_model
from oracles import TABLE_ASSESSMENT, table_band, table_cell
from semxai import nn
from semxai.assessment import (Indicators, assess, band, cell, compute_radar, compute_radars, derive_indicators,
                               generate_explanation)
from semxai.errors import IncompleteRadar
from semxai.semspace import SemanticSpace
from semxai.semstats import CONCEPTS, FittedActivation, Radar, semantic_probability, weighted_activation

CLASSES = ("cat", "dog")
GRID = [0.0, 0.1, 0.2, 0.25, 0.35, 0.4, 0.5, 0.7, 1.0]


def radar(cat, dog, concepts=CONCEPTS):
    values = {(c, "cat"): v for c, v in zip(CONCEPTS, cat)}
    values.update({(c, "dog"): v for c, v in zip(CONCEPTS, dog)})
    return Radar(CLASSES, values, tuple(concepts))


@pytest.fixture
def model_and_spaces():
    m = small_model()
    m.classes = CLASSES
    rng = np.random.default_rng(0)
    spaces = {}
    for i, (c, k) in enumerate(itertools.product(CONCEPTS, CLASSES)):
        sp = SemanticSpace(c, k, [i % 6, (i + 1) % 6], [1.0, -0.5 * i], 6)
        sp.fit = FittedActivation(0.1 * i, 0.5 + 0.1 * i, -1.0 - i, 1.0 + i, 100)
        spaces[(c, k)] = sp
    imgs = rng.random((4, 3, 8, 8))
    return m, spaces, imgs


# ---------------------------------------------------------------- radar


def test_radar_at_zero_features(model_and_spaces):
    m, spaces, _ = model_and_spaces
    r = compute_radar(None, m, spaces, features=np.zeros(6))
    for key, sp in spaces.items():
        assert r[key] == semantic_probability(0.0, sp.fit)


def test_radar_matches_per_space_oracle(model_and_spaces):
    m, spaces, imgs = model_and_spaces
    batch = compute_radars(imgs, m, spaces)
    for img, r in zip(imgs, batch):
        f = nn.forward_features(m, img)
        for key, sp in spaces.items():
            assert r[key] == float(semantic_probability(weighted_activation(f, sp), sp.fit))
        assert compute_radar(img, m, spaces).values == compute_radar(img.copy(), m, spaces).values


def test_radar_missing_space(model_and_spaces):
    m, spaces, imgs = model_and_spaces
    del spaces[("nose", "dog")]
    with pytest.raises(IncompleteRadar):
        compute_radar(imgs[0], m, spaces)
    spaces[("nose", "dog")] = SemanticSpace("nose", "dog", [0], [1.0], 6)
    with pytest.raises(IncompleteRadar):
        compute_radar(imgs[0], m, spaces)


def test_assess_end_to_end(model_and_spaces):
    m, spaces, imgs = model_and_spaces
    r, ind, exp = assess(imgs[0], m, spaces)
    assert ind.predicted == CLASSES[int(np.argmax(nn.predict(m, imgs[0])))]
    assert exp.sentence and r.complete


# ---------------------------------------------------------------- indicators


def test_indicator_example():
    ind = derive_indicators(radar([0.8, 0.6, 0.4], [0.3, 0.5, 0.45]), 0)
    assert ind.predicted == "cat" and ind.s_max == "eyes" and ind.p_max == 0.8
    assert np.allclose([ind.delta[c] for c in CONCEPTS], [0.5, 0.1, -0.05], atol=1e-15)
    assert np.isclose(ind.delta_max, 0.5, atol=1e-15)


def test_identical_classes_give_zero_delta():
    ind = derive_indicators(radar([0.3, 0.7, 0.2], [0.3, 0.7, 0.2]), "dog")
    assert all(v == 0 for v in ind.delta.values()) and ind.delta_max == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=6, max_size=6), st.permutations(CONCEPTS), st.sampled_from(CLASSES))
def test_indicators_independent_of_concept_order(vals, order, pred):
    a = derive_indicators(radar(vals[:3], vals[3:]), pred)
    b = derive_indicators(radar(vals[:3], vals[3:], concepts=order), pred)
    assert a.delta == b.delta and a.delta_max == b.delta_max and a.p_max == b.p_max
    assert a.delta_max == max(a.delta.values())


def test_indicators_incomplete():
    r = radar([0.1] * 3, [0.2] * 3)
    del r.values[("eyes", "cat")]
    with pytest.raises(IncompleteRadar):
        derive_indicators(r, 0)


# ---------------------------------------------------------------- explanation


def ind_for(delta_max, deltas, p_max, cls="cat"):
    return Indicators(p_max, "eyes", dict(zip(CONCEPTS, deltas)), delta_max, cls)


def test_low_confidence_sentence():
    e = generate_explanation(ind_for(0.1, [0.1, 0.05, 0.0], 0.6))
    assert e.sentence == "It might be a cat, but I am not sure." and e.fragments == []


def test_vivid_something_like_fragment():
    e = generate_explanation(ind_for(0.4, [0.4, 0.0, -0.1], 0.6, "dog"))
    assert "its vivid eyes, which are something like dog's eyes" in e.sentence
    assert ("eyes", "vivid", "something like") in e.fragments


def test_none_cell_omits_concept():
    e = generate_explanation(ind_for(0.4, [0.4, 0.1, 0.0], 0.3))
    assert [f[0] for f in e.fragments] == ["eyes"]
    assert "nose" not in e.sentence and "legs" not in e.sentence


def test_narrated_examples():
    dog = derive_indicators(radar([0.2, 0.1, 0.8], [0.62, 0.5, 0.85]), "dog")
    assert generate_explanation(dog).sentence == (
        "It is probably a dog mainly because its vivid eyes, which are something like dog's eyes. "
        "It has nose, which is something like dog's nose. However, its legs are a little confusing.")
    side = derive_indicators(radar([0.1, 0.45, 0.8], [0.1, 0.2, 0.75]), "cat")
    assert generate_explanation(side).sentence == (
        "It is probably a cat mainly because it has nose, which is perhaps cat's nose. "
        "Although its legs are a little confusing.")
    front = derive_indicators(radar([0.9, 0.95, 0.9], [0.1, 0.2, 0.1]), "cat")
    assert generate_explanation(front).sentence == (
        "I am sure it is a cat mainly because its vivid eyes, nose and legs, "
        "which are cat's eyes, nose and legs obviously.")


def test_band_boundaries():
    assert [band(x) for x in (0.2, 0.2 + 1e-12, 0.35, 0.35 + 1e-12, 0.5, 0.5 + 1e-12)] == [0, 1, 1, 2, 2, 3]
    assert cell(0.5, 0.3) == ("be", "perhaps") and cell(0.5 + 1e-12, 0.3) == ("vivid", "perhaps")
    assert cell(0.3, 0.2) is None and cell(0.3, 0.2 + 1e-12) == ("be", "perhaps")


def test_full_grid_matches_table():
    for dmax, d, p in itertools.product(GRID, GRID, [0.3, 0.5, 0.6, 0.9]):
        d = min(d, dmax)
        e = generate_explanation(ind_for(dmax, [d, min(d, 0.0), min(d, 0.0)], p))
        head = TABLE_ASSESSMENT[table_band(dmax)][1].format(cls="cat")
        if table_band(dmax) == 0:
            assert e.sentence == head and not e.fragments
            continue
        assert e.sentence.startswith(head.replace(" mainly because", ""))
        want = table_cell(p, d)
        got = {f[0]: f[1:] for f in e.fragments}.get("eyes")
        assert got == want, (dmax, d, p)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.2, 1))
def test_confidence_monotone_in_delta_max(a, b, p):
    lo, hi = sorted((a, b))
    rank = {TABLE_ASSESSMENT[i][1].format(cls="cat").split(" mainly")[0]: i for i in range(4)}

    def level(x):
        s = generate_explanation(ind_for(x, [x, x, x], p)).sentence
        return max(i for k, i in rank.items() if s.startswith(k.rstrip(".")))

    assert level(lo) <= level(hi)
