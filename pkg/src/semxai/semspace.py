"""Semantic spaces: semantically sensitive neurons (SSNs) found by comparing
the 1st PC of masked and unmasked samples, and their visualisation by
regularised activation maximisation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import DegenerateDifference, DivergedOptimization, InvalidParam, ShapeMismatch
from .regularizers import tv_regularizer  # noqa: F401  (re-exported)
from .traits import row_centered_pca

DEFAULT_N_SSN = 5
DEFAULT_SCALE = 30.0


@dataclass
class SemanticSpace:
    """SSN indices with their signed weights, strongest first.

    ``fit`` holds the activation distribution once it has been fitted.
    """

    concept: str
    class_name: str
    indices: np.ndarray
    weights: np.ndarray
    width: int
    meta: dict = field(default_factory=dict)
    fit: object = None

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.indices) < 1 or self.indices.shape != self.weights.shape:
            raise InvalidParam("need one weight per SSN and at least one SSN")
        if len(set(self.indices.tolist())) != len(self.indices):
            raise InvalidParam("SSN indices must be distinct")
        if self.indices.min() < 0 or self.indices.max() >= self.width:
            raise InvalidParam(f"SSN indices must lie in [0, {self.width})")

    @property
    def n_ssn(self):
        return len(self.indices)

    @property
    def key(self):
        return (self.concept, self.class_name)


def discover_ssns(pc_unmask, pc_mask, n=DEFAULT_N_SSN, concept="", class_name=""):
    """Pick the ``n`` features whose 1st-PC score drops or rises most when the
    concept is masked.

    The masked PC is flipped first if it points away from the unmasked one.
    Weights are ``s_unmask - s_mask`` at the chosen indices, ordered by
    decreasing magnitude; equal magnitudes keep the lower index first.
    """
    a = np.asarray(pc_unmask, dtype=np.float64)
    b = np.asarray(pc_mask, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ShapeMismatch(f"PC shapes differ: {a.shape} vs {b.shape}")
    if not 1 <= n <= len(a):
        raise InvalidParam(f"N_SSN={n} outside [1, {len(a)}]")
    if a @ b < 0:
        b = -b
    d = a - b
    if not np.any(d):
        raise DegenerateDifference("masked and unmasked traits are identical")
    order = np.lexsort((np.arange(len(d)), -np.abs(d)))[:n]
    return SemanticSpace(concept, class_name, order, d[order], len(d))


def extract_semantic_space(features_unmask, features_mask, n=DEFAULT_N_SSN, concept="", class_name=""):
    """SSNs from the GAP feature matrices of unmasked and masked samples."""
    pa = row_centered_pca(features_unmask, k=1)
    pb = row_centered_pca(features_mask, k=1)
    space = discover_ssns(pa.first, pb.first, n, concept, class_name)
    space.meta = {
        "n_samples": int(len(features_unmask)),
        "ratio_unmask": float(pa.ratios[0]),
        "ratio_mask": float(pb.ratios[0]),
    }
    return space, pa.first, pb.first


@dataclass
class TargetEncoding:
    values: np.ndarray
    scale: float = DEFAULT_SCALE


def build_target_encoding(space, scale=DEFAULT_SCALE):
    """Length-C target: zero except at the SSNs, which keep the signed
    proportions of the weights with the largest magnitude equal to ``scale``."""
    if not scale > 0:
        raise InvalidParam("scale must be > 0")
    peak = np.abs(space.weights).max()
    if peak == 0:
        raise DegenerateDifference("all SSN weights are zero")
    values = np.zeros(space.width)
    values[space.indices] = scale * space.weights / peak
    return TargetEncoding(values, float(scale))


@dataclass
class VisConfig:
    lam: float = 2.0
    beta: float = 2.0
    learning_rate: float = 0.05
    halving_interval: int = 1000
    max_iter: int = 4000

    def __post_init__(self):
        if not (self.lam > 0 and self.beta > 0 and self.learning_rate > 0):
            raise InvalidParam("lam, beta and learning_rate must be positive")
        if self.halving_interval < 1 or self.max_iter < 1:
            raise InvalidParam("halving_interval and max_iter must be >= 1")


@dataclass
class Visualization:
    z: np.ndarray  # optimised input, standardised units
    image: np.ndarray  # de-standardised, not clamped
    trace: np.ndarray  # objective before each step, plus the final value


def visualize(model, target, config=None):
    """Gradient descent on ``||phi(z) - target||^2 + lam * TV(z)`` starting from
    the image that is zero after standardisation.  The step size halves every
    ``halving_interval`` iterations."""
    config = config or VisConfig()
    values = target.values if isinstance(target, TargetEncoding) else np.asarray(target, dtype=np.float64)
    if values.shape != (model.feature_width,):
        raise ShapeMismatch(f"target length {values.shape} != feature width {model.feature_width}")
    z = np.zeros(model.input_shape)
    trace = []
    for it in range(config.max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            value, grad = nn.objective_gradient(model, z, values, config.lam, config.beta)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise DivergedOptimization(f"objective became non-finite at iteration {it}")
        trace.append(value)
        lr = config.learning_rate * 0.5 ** (it // config.halving_interval)
        z = z - lr * grad
    with np.errstate(over="ignore", invalid="ignore"):
        final, _ = nn.objective_gradient(model, z, values, config.lam, config.beta)
    if not np.isfinite(final):
        raise DivergedOptimization("objective became non-finite at the final iterate")
    trace.append(final)
    return Visualization(z, model.destandardize(z), np.asarray(trace))
