"""Genetic search for the superpixel subset that maximises a class probability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import InvalidParam, ShapeMismatch
from .superpixel import Segmentation


@dataclass
class GaConfig:
    population: int = 50
    generations: int = 50
    mutation_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.population < 2 or self.population % 2:
            raise InvalidParam("population must be even and >= 2")
        if self.generations < 1:
            raise InvalidParam("generations must be >= 1")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise InvalidParam("mutation_prob must lie in [0, 1]")


@dataclass
class EvolutionResult:
    genome: np.ndarray
    fitness: float
    elite_trace: np.ndarray  # best fitness after each generation
    mean_trace: np.ndarray  # mean fitness of each evaluated generation
    population_sizes: tuple = ()

    def trace_rows(self):
        return [(g, e, m) for g, (e, m) in enumerate(zip(self.elite_trace, self.mean_trace))]


def _labels(seg):
    return seg.labels if isinstance(seg, Segmentation) else np.asarray(seg)


def _n_segments(seg):
    return seg.n_segments if isinstance(seg, Segmentation) else int(np.asarray(seg).max()) + 1


def genome_to_image(image, seg, genome, background):
    """Keep the superpixels whose bit is set; paint the rest ``background``."""
    genome = np.asarray(genome)
    if genome.shape != (_n_segments(seg),):
        raise ShapeMismatch(f"genome length {genome.shape} != segment count {_n_segments(seg)}")
    keep = genome.astype(bool)[_labels(seg)]
    bg = np.asarray(background, dtype=np.float64).reshape(-1, 1, 1)
    return np.where(keep[None], image, bg)


def _check_class(model, c):
    if not 0 <= int(c) < model.n_classes:
        raise InvalidParam(f"class id {c} outside [0, {model.n_classes})")


def fitness(model, image, seg, genome, c, background=None):
    """Probability of class ``c`` for the image rebuilt from ``genome``.

    ``background`` defaults to the model's standardisation mean, i.e. the
    corpus mean colour.
    """
    _check_class(model, c)
    bg = model.mean if background is None else background
    return float(nn.predict(model, genome_to_image(image, seg, genome, bg))[c])


def evolve(model, image, seg, c, config=None, background=None):
    """Evolve superpixel genomes toward the highest probability of class ``c``.

    Each generation: single-point crossover on ``N_p/2`` random disjoint
    pairs; each genome mutates with probability ``mutation_prob``, flipping
    every bit with probability ``1/N_sp``; the population is ranked by
    fitness, the top half survives (the best genome seen so far always among
    them) and the bottom half is redrawn at random.
    """
    config = config or GaConfig()
    _check_class(model, c)
    bg = model.mean if background is None else np.asarray(background, dtype=np.float64)
    n = _n_segments(seg)
    rng = np.random.default_rng(config.seed)
    cache = {}

    def evaluate(pop):
        keys = [g.tobytes() for g in pop]
        todo = {k: g for k, g in zip(keys, pop) if k not in cache}
        if todo:
            batch = np.stack([genome_to_image(image, seg, g, bg) for g in todo.values()])
            probs = nn.predict(model, batch)[:, c]
            cache.update(zip(todo, probs.tolist()))
        return np.array([cache[k] for k in keys])

    n_p, half = config.population, config.population // 2
    pop = rng.integers(0, 2, (n_p, n), dtype=np.uint8)
    fit = evaluate(pop)
    best = int(np.argmax(fit))
    elite, elite_fit = pop[best].copy(), float(fit[best])
    elite_trace, mean_trace, sizes = [], [], []
    for _ in range(config.generations):
        pairs = rng.permutation(n_p).reshape(-1, 2)
        for a, b in pairs:
            if n > 1:
                cut = rng.integers(1, n)
                tail = pop[a, cut:].copy()
                pop[a, cut:] = pop[b, cut:]
                pop[b, cut:] = tail
        for i in range(n_p):
            if rng.random() < config.mutation_prob:
                pop[i] ^= (rng.random(n) < 1.0 / n).astype(np.uint8)
        fit = evaluate(pop)
        sizes.append(len(pop))
        order = np.argsort(-fit, kind="stable")
        pop, fit = pop[order], fit[order]
        if fit[0] > elite_fit:
            elite, elite_fit = pop[0].copy(), float(fit[0])
        elite_trace.append(elite_fit)
        mean_trace.append(float(fit.mean()))
        survivors = pop[:half] if fit[0] >= elite_fit else np.concatenate([elite[None], pop[:half - 1]])
        fresh = rng.integers(0, 2, (n_p - half, n), dtype=np.uint8)
        pop = np.concatenate([survivors, fresh])
    return EvolutionResult(elite, elite_fit, np.asarray(elite_trace), np.asarray(mean_trace), tuple(sizes))

