"""Common traits: row-centred PCA over stacked GAP feature vectors."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import DegenerateData, InsufficientSamples, InvalidInput, InvalidParam, ShapeMismatch
from .evolution import GaConfig, evolve, genome_to_image
from .superpixel import slic_segment

RANK_CUTOFF = 1e-10
DEFAULT_VARIANCE = 0.85


@dataclass
class PcaResult:
    scores: np.ndarray  # (p, k): column i is the i-th PC
    eigenvalues: np.ndarray  # (k,) descending
    ratios: np.ndarray  # (k,) information ratio lambda_i / tr(S)
    row_means: np.ndarray  # (N_s,) means removed from each row
    basis: np.ndarray  # (N_s, k) leading eigenvectors of S
    spectrum: np.ndarray  # (N_s,) every eigenvalue of S, descending
    rank: int

    @property
    def k(self):
        return self.scores.shape[1]

    @property
    def first(self):
        return self.scores[:, 0]

    @property
    def total_variance(self):
        return float(self.spectrum.sum())


def row_centered_pca(X, k=None, variance=DEFAULT_VARIANCE):
    """Row-centred PCA of an ``N_s x p`` data matrix.

    Rows are centred, ``S = Xc Xc^T / (p - 1)`` is eigendecomposed, and the
    PCs are ``X^T U_k``.  ``k`` is either given or the smallest count whose
    information ratios reach ``variance``.  Each PC is sign-flipped so that
    its largest-magnitude score is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatch(f"data matrix must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if n < 2:
        raise InsufficientSamples(f"row-centred PCA needs >= 2 samples, got {n}")
    if p < 1:
        raise ShapeMismatch("data matrix has no columns")
    if not np.all(np.isfinite(X)):
        raise InvalidInput("data matrix contains non-finite values")
    if np.all(X == X[0]):
        # row centring keeps identical rows non-zero, but they carry no
        # between-sample variation to organise
        raise DegenerateData("all samples are identical")
    means = X.mean(axis=1)
    Xc = X - means[:, None]
    if p < 2 or not np.any(Xc):
        raise DegenerateData("rows are constant after centring; covariance is zero")
    S = Xc @ Xc.T / (p - 1)
    w, U = np.linalg.eigh(S)
    w, U = w[::-1], U[:, ::-1]
    trace = float(np.trace(S))
    if not w[0] > 0:
        raise DegenerateData("covariance has no positive eigenvalue")
    w = np.where(np.abs(w) < RANK_CUTOFF * w[0], 0.0, w)
    rank = int(np.sum(w > RANK_CUTOFF * w[0]))
    ratios = np.clip(w / trace, 0.0, 1.0)
    if k is None:
        if not 0 < variance <= 1:
            raise InvalidParam("variance target must lie in (0, 1]")
        k = int(np.searchsorted(np.cumsum(ratios), variance * (1 - 1e-12)) + 1)
        k = min(k, rank)
    elif not 1 <= k <= rank:
        raise InvalidParam(f"k={k} outside [1, rank={rank}]")
    Uk = U[:, :k].copy()
    scores = X.T @ Uk
    for j in range(k):
        i = int(np.argmax(np.abs(scores[:, j])))
        if scores[i, j] < 0:
            scores[:, j] *= -1
            Uk[:, j] *= -1
    return PcaResult(scores, w[:k].copy(), ratios[:k].copy(), means, Uk, w, rank)


def _ga_image(args):
    model, img, c, n_segments, compactness, config = args
    seg = slic_segment(img, n_segments, compactness)
    res = evolve(model, img, seg, c, config)
    return genome_to_image(img, seg, res.genome, model.mean), res


def common_trait_matrix(samples, model, use_ga=False, target_class=0, n_segments=40, compactness=10.0,
                        ga_config=None, workers=1):
    """Stack GAP features of ``samples`` into an ``N_s x C`` matrix.

    With ``use_ga`` each sample is first replaced by its best superpixel
    combination for ``target_class`` (GA seed offset by the sample index).
    Returns the matrix and the per-sample GA results (empty without GA).
    """
    samples = np.asarray(samples)
    if len(samples) < 2:
        raise InsufficientSamples("need >= 2 samples")
    results = []
    if use_ga:
        base = ga_config or GaConfig()
        jobs = [
            (model, img, target_class, n_segments, compactness,
             GaConfig(base.population, base.generations, base.mutation_prob, base.seed + i))
            for i, img in enumerate(samples)
        ]
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                out = list(pool.map(_ga_image, jobs))
        else:
            out = [_ga_image(j) for j in jobs]
        samples = np.stack([o[0] for o in out])
        results = [o[1] for o in out]
    feats = np.stack([nn.forward_features(model, img) for img in samples])
    return feats, results


def extract_common_traits(samples, model, use_ga=False, k=None, variance=DEFAULT_VARIANCE, **kwargs):
    X, _ = common_trait_matrix(samples, model, use_ga=use_ga, **kwargs)
    return row_centered_pca(X, k=k, variance=variance)


# ---------------------------------------------------------------- stability


@dataclass
class SpreadReport:
    e: float  # percent
    mean: np.ndarray
    vectors: np.ndarray
    n_experiments: int


def spread(score_vectors):
    """Mean absolute deviation of repeated PC score vectors from their
    average, in percent."""
    try:
        V = np.asarray(score_vectors, dtype=np.float64)
    except ValueError as exc:
        raise ShapeMismatch("score vectors differ in length") from exc
    if V.ndim != 2:
        raise ShapeMismatch("score vectors differ in length")
    n_e, p = V.shape
    if n_e < 1 or p < 1:
        raise InvalidParam("need at least one non-empty score vector")
    mean = V.mean(axis=0)
    e = np.abs(V - mean).sum() / (p * n_e) * 100.0
    return SpreadReport(float(e), mean, V, n_e)


def spread_by_sample_size(features, sizes, n_experiments=3, seed=0, normalize=True):
    """Spread of the 1st PC across ``n_experiments`` random draws of ``N_s``
    rows from a feature pool, for each ``N_s`` in ``sizes``.

    With ``normalize`` each PC is divided by its largest magnitude first, so
    the spread measures the shape of the trait rather than its scale (PC
    scores grow with ``N_s``).
    """
    features = np.asarray(features, dtype=np.float64)
    rng = np.random.default_rng(seed)
    out = {}
    for n_s in sizes:
        if n_s > len(features):
            raise InvalidParam(f"N_s={n_s} exceeds pool of {len(features)}")
        vecs = []
        for _ in range(n_experiments):
            rows = rng.choice(len(features), size=n_s, replace=False)
            pc = row_centered_pca(features[rows], k=1).first
            vecs.append(pc / np.abs(pc).max() if normalize else pc)
        out[int(n_s)] = spread(vecs)
    return out


# ---------------------------------------------------------------- spatial maps


def layerwise_pca(maps, k):
    """Row-centred PCA run independently at every spatial position of an
    ``N_s x C x H x W`` stack, keeping ``k`` PCs everywhere.

    Returns the ``k x C x H x W`` stack of PCs.
    """
    maps = np.asarray(maps, dtype=np.float64)
    if maps.ndim != 4:
        raise ShapeMismatch(f"expected N_s x C x H x W maps, got shape {maps.shape}")
    n, c, h, w = maps.shape
    if n < 2:
        raise InsufficientSamples("need >= 2 samples")
    if not 1 <= k <= min(n, c):
        raise InvalidParam(f"k={k} outside [1, min(N_s, C)={min(n, c)}]")
    out = np.empty((k, c, h, w))
    for i in range(h):
        for j in range(w):
            out[:, :, i, j] = row_centered_pca(maps[:, :, i, j], k=k).scores.T
    return out


def first_pc_ratio(maps):
    """Information ratio of the 1st PC for a layer output.

    GAP-like ``N_s x C`` outputs use a single PCA; spatial maps average the
    ratio over positions, skipping positions with zero variance.
    """
    maps = np.asarray(maps, dtype=np.float64)
    if maps.ndim == 2:
        return float(row_centered_pca(maps, k=1).ratios[0])
    ratios = []
    for i in range(maps.shape[2]):
        for j in range(maps.shape[3]):
            try:
                ratios.append(row_centered_pca(maps[:, :, i, j], k=1).ratios[0])
            except DegenerateData:
                continue
    return float(np.mean(ratios)) if ratios else float("nan")


def layer_ratios(model, samples, max_positions=64):
    """1st-PC information ratio after every layer up to GAP.

    Large maps are subsampled on a regular grid of at most ``max_positions``
    positions to keep the per-position PCAs cheap.
    """
    out = []
    for layer, m in zip(model.feature_layers, nn.forward_maps(model, samples)):
        if m.ndim == 4:
            h, w = m.shape[2:]
            step = max(1, int(np.ceil(np.sqrt(h * w / max_positions))))
            m = m[:, :, ::step, ::step]
        out.append((layer.kind, first_pc_ratio(m)))
    return out
