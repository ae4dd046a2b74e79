"""Trustworthiness assessment: radar of semantic probabilities, confidence
indicators and the rule-based explanation sentence."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import IncompleteRadar
from .semstats import CONCEPTS, Radar, semantic_probability, weighted_activation

# Band edges; a value x falls in band i when edge[i-1] < x <= edge[i].
BAND_EDGES = (0.2, 0.35, 0.5)
POSITION_EDGE = 0.5

ASSESSMENT = (
    "It might be {art} {cls}, but I am not sure.",
    "It is probably {art} {cls} mainly because",
    "It is probably {art} {cls} mainly because",
    "I am sure it is {art} {cls} mainly because",
)
SEMANTEME = ("confusing", "perhaps", "something like", "obviously")
PLURAL = {"eyes", "legs"}


def band(x, edges=BAND_EDGES):
    """Index of the band holding ``x``: ``x <= 0.2`` -> 0, ``(0.2, 0.35]`` -> 1, ..."""
    for i, e in enumerate(edges):
        if x <= e:
            return i
    return len(edges)


def position_word(p_max):
    return "vivid" if p_max > POSITION_EDGE else "be"


def cell(p_max, delta):
    """(position, semanteme) words for one concept, or None when the concept
    is left out of the explanation."""
    pos, b = position_word(p_max), band(delta)
    if pos == "be" and b == 0:
        return None
    return pos, SEMANTEME[b]


# ---------------------------------------------------------------- radar


def _space_map(spaces):
    if isinstance(spaces, dict):
        return spaces
    return {sp.key: sp for sp in spaces}


def compute_radar(image, model, spaces, features=None):
    """Semantic probability of ``image`` in every fitted space.  ``spaces``
    maps ``(concept, class_name)`` to a fitted SemanticSpace."""
    spaces = _space_map(spaces)
    classes = tuple(model.classes)
    missing = [(c, k) for c in CONCEPTS for k in classes if (c, k) not in spaces or spaces[(c, k)].fit is None]
    if missing:
        raise IncompleteRadar(f"no fitted semantic space for {missing}")
    f = nn.forward_features(model, image) if features is None else np.asarray(features)
    values = {}
    for c in CONCEPTS:
        for k in classes:
            sp = spaces[(c, k)]
            values[(c, k)] = float(semantic_probability(weighted_activation(f, sp), sp.fit))
    return Radar(classes, values)


def compute_radars(images, model, spaces):
    feats = nn.forward_features(model, images)
    return [compute_radar(None, model, spaces, features=f) for f in feats]


# ---------------------------------------------------------------- indicators


@dataclass
class Indicators:
    p_max: float
    s_max: str
    delta: dict  # concept -> P(predicted) - max P(other classes)
    delta_max: float
    predicted: str
    own: dict | None = None  # concept -> P(predicted, concept); None falls back to p_max

    def position_p(self, concept):
        return self.p_max if self.own is None else self.own[concept]


def derive_indicators(radar, predicted):
    radar.require_complete()
    pred = radar.classes[predicted] if isinstance(predicted, (int, np.integer)) else predicted
    if pred not in radar.classes:
        raise IncompleteRadar(f"predicted class {pred!r} not in radar")
    others = [k for k in radar.classes if k != pred]
    own = {c: radar.values[(c, pred)] for c in radar.concepts}
    s_max = max(radar.concepts, key=lambda c: (own[c], -radar.concepts.index(c)))
    delta = {c: own[c] - max(radar.values[(c, k)] for k in others) for c in radar.concepts}
    return Indicators(own[s_max], s_max, delta, max(delta.values()), pred, own)


# ---------------------------------------------------------------- explanation


@dataclass
class Explanation:
    sentence: str
    fragments: list = field(default_factory=list)  # (concept, position, semanteme)


def _article(word):
    return "an" if word[:1].lower() in "aeiou" else "a"


def _verb(concept):
    return "are" if concept in PLURAL else "is"


def _join(names):
    return names[0] if len(names) == 1 else ", ".join(names[:-1]) + " and " + names[-1]


def _concept_key(c):
    return CONCEPTS.index(c) if c in CONCEPTS else len(CONCEPTS)


def _fragment_text(concepts, cls, position, semanteme):
    concepts = sorted(concepts, key=_concept_key)
    names = _join(concepts)
    verb = "are" if len(concepts) > 1 else _verb(concepts[0])
    owned = f"{cls}'s {names}"
    evidence = f"{owned} obviously" if semanteme == "obviously" else f"{semanteme} {owned}"
    lead = f"its vivid {names}" if position == "vivid" else f"it has {names}"
    return f"{lead}, which {verb} {evidence}"


def generate_explanation(ind):
    """Assemble the assessment sentence from the indicator bands.

    Concepts are taken in descending ΔP order; consecutive concepts that get
    the same words share one clause, listed in the fixed concept order.
    Confusing concepts close the sentence, introduced by "Although" after a
    single clause and "However," otherwise.
    """
    cls = ind.predicted
    level = band(ind.delta_max)
    head = ASSESSMENT[level].format(art=_article(cls), cls=cls)
    if level == 0:
        return Explanation(head, [])
    concepts = sorted(ind.delta, key=lambda c: (-ind.delta[c], _concept_key(c)))
    fragments, groups, confusing = [], [], []
    for c in concepts:
        words = cell(ind.position_p(c), ind.delta[c])
        if words is None:
            continue
        fragments.append((c, *words))
        if words[1] == "confusing":
            confusing.append(c)
        elif groups and groups[-1][1] == words:
            groups[-1][0].append(c)
        else:
            groups.append(([c], words))
    clauses = [_fragment_text(names, cls, *words) for names, words in groups]
    if clauses:
        parts = [f"{head} {clauses[0]}."] + [p[0].upper() + p[1:] + "." for p in clauses[1:]]
    else:
        parts = [head.replace(" mainly because", ".")]
    if confusing:
        verb = "are" if len(confusing) > 1 else _verb(confusing[0])
        lead = "Although its" if len(clauses) == 1 else "However, its"
        parts.append(f"{lead} {_join(confusing)} {verb} a little confusing.")
    return Explanation(" ".join(parts), fragments)


def assess(image, model, spaces):
    """Radar, indicators and explanation for one image."""
    f = nn.forward_features(model, image)
    radar = compute_radar(None, model, spaces, features=f)
    pred = int(np.argmax(nn.softmax(nn.dense_logits(model, f))))
    ind = derive_indicators(radar, pred)
    return radar, ind, generate_explanation(ind)
