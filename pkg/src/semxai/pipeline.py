"""Run orchestration: one directory per run, one function per step.

Every step reads the artifacts of earlier steps, writes its own, and records
inputs, seeds and output hashes in ``manifest.json``.  Timestamps appear
only in the manifest, so all other files are reproducible from the config.
"""

from __future__ import annotations

import dataclasses
import datetime
import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import io, nn, plotting
from .assessment import compute_radar, derive_indicators, generate_explanation
from .errors import InvalidParam, IoError, MissingPrerequisite, NotFitted
from .evolution import GaConfig, evolve, genome_to_image
from .semspace import VisConfig, build_target_encoding, extract_semantic_space, visualize
from .semstats import (
    CONCEPTS,
    AttackConfig,
    fit_activation_distribution,
    flag_adversarial,
    pgd_attack,
    qq_r2,
    search_samples,
    semantic_probability,
    weighted_activation,
)
from .superpixel import slic_segment
from .traits import layer_ratios, row_centered_pca, spread_by_sample_size

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RUN_ROOT_ENV = "SEMXAI_RUN_ROOT"
CONFIG_FILE = "config.json"
MANIFEST_FILE = "manifest.json"
STEPS = ("train", "extract-traits", "extract-semspace", "visualize", "fit-stats", "assess", "search", "detect-adv")


@dataclasses.dataclass
class PipelineConfig:
    # corpus: "synthetic" or a folder of <class>/<name>.png
    corpus: str = "synthetic"
    classes: tuple = ("cat", "dog")
    samples_per_class: int = 700
    image_size: int = 64
    corpus_seed: int = 0
    test_fraction: float = 0.3
    split_seed: int = 0
    # network and training
    widths: tuple = (16, 32, 64)
    epochs: int = 8
    batch_size: int = 16
    learning_rate: float = 1e-3
    train_seed: int = 0
    # superpixels and GA
    n_sp_ga: int = 40
    n_sp_mask: int = 20
    compactness: float = 10.0
    population: int = 50
    generations: int = 50
    mutation_prob: float = 0.5
    ga_seed: int = 0
    ga_samples: int = 4
    # common traits
    trait_samples: int = 200
    variance_target: float = 0.85
    spread_sizes: tuple = (25, 50, 100, 200)
    spread_repeats: int = 3
    spread_seed: int = 0
    # semantic spaces
    ssn_pairs: int = 100
    n_ssn: int = 5
    target_scale: float = 30.0
    # visualisation
    vis_lambda: float = 2.0
    vis_beta: float = 2.0
    vis_learning_rate: float = 0.05
    vis_halving: int = 1000
    vis_max_iter: int = 4000
    # statistics, assessment, search
    flag_single: float = 0.99
    flag_multi: float = 0.9
    report_radars: int = 12
    search_class: str = "cat"
    search_concept: str = "eyes"
    search_predicate: str = "above"
    search_threshold: float = 0.9
    # adversarial check
    pgd_epsilon: float = 0.05
    pgd_steps: int = 20
    attack_pairs: int = 50
    attack_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.classes = tuple(self.classes)
        self.widths = tuple(int(w) for w in self.widths)
        self.spread_sizes = tuple(int(s) for s in self.spread_sizes)
        self.validate()

    # module configs double as validators
    def corpus_spec(self):
        return corpus_mod.CorpusSpec(self.corpus, self.classes, self.samples_per_class, self.image_size,
                                     self.corpus_seed)

    def train_config(self):
        return nn.TrainConfig(self.epochs, self.batch_size, self.learning_rate, seed=self.train_seed)

    def ga_config(self, offset=0):
        return GaConfig(self.population, self.generations, self.mutation_prob, self.ga_seed + offset)

    def vis_config(self):
        return VisConfig(self.vis_lambda, self.vis_beta, self.vis_learning_rate, self.vis_halving, self.vis_max_iter)

    def attack_config(self, offset=0):
        return AttackConfig(self.pgd_epsilon, self.pgd_steps, seed=self.attack_seed + offset)

    def validate(self):
        self.corpus_spec()
        self.train_config()
        self.ga_config()
        self.vis_config()
        self.attack_config()
        if len(self.classes) != 2:
            raise InvalidParam("the semantic radar needs exactly two classes")
        if not 0 < self.test_fraction < 1:
            raise InvalidParam("test_fraction must lie in (0, 1)")
        if not self.widths or min(self.widths) < 1:
            raise InvalidParam("widths must be positive")
        if self.n_sp_ga < 1 or self.n_sp_mask < 1:
            raise InvalidParam("superpixel counts must be >= 1")
        if not self.compactness > 0:
            raise InvalidParam("compactness must be > 0")
        if not 1 <= self.n_ssn <= self.widths[-1]:
            raise InvalidParam(f"n_ssn must lie in [1, {self.widths[-1]}]")
        if not self.target_scale > 0:
            raise InvalidParam("target_scale must be > 0")
        if not 0 < self.variance_target <= 1:
            raise InvalidParam("variance_target must lie in (0, 1]")
        if self.trait_samples < 2 or self.ssn_pairs < 2:
            raise InvalidParam("trait_samples and ssn_pairs must be >= 2")
        if not self.spread_sizes or min(self.spread_sizes) < 2 or self.spread_repeats < 1:
            raise InvalidParam("spread sizes must be >= 2 with >= 1 repeat")
        if not 0 < self.flag_multi <= self.flag_single:
            raise InvalidParam("need 0 < flag_multi <= flag_single")
        if self.search_predicate not in ("above", "below"):
            raise InvalidParam("search_predicate must be 'above' or 'below'")
        if self.search_concept not in CONCEPTS:
            raise InvalidParam(f"search_concept must be one of {CONCEPTS}")
        if self.search_class not in self.classes:
            raise InvalidParam(f"search_class must be one of {self.classes}")
        if self.attack_pairs < 1 or self.ga_samples < 0 or self.report_radars < 0:
            raise InvalidParam("attack_pairs must be >= 1; ga_samples and report_radars >= 0")
        if self.workers < 1:
            raise InvalidParam("workers must be >= 1")

    def as_dict(self):
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def config_fields():
    return dataclasses.fields(PipelineConfig)


def save_config(path, config):
    return io.write_json(path, {"schema_version": SCHEMA_VERSION, **config.as_dict()})


def load_config(path):
    data = io.read_json(path)
    version = data.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise IoError(path, f"unsupported config schema_version {version!r} (expected {SCHEMA_VERSION})")
    known = {f.name for f in config_fields()}
    unknown = sorted(set(data) - known)
    if unknown:
        raise IoError(path, f"unknown config keys {unknown}")
    return PipelineConfig(**data)


def run_root():
    return Path(os.environ.get(RUN_ROOT_ENV, "runs"))


# ---------------------------------------------------------------- run directory


class Run:
    """A run directory plus the bookkeeping of the step being executed.
    All file writes go through this object on the calling thread."""

    def __init__(self, path, config):
        self.path = Path(path)
        self.config = config
        self._inputs = {}
        self._outputs = {}

    def file(self, rel):
        return self.path / rel

    def require(self, step, rel, producer, hint=None):
        p = self.file(rel)
        if not p.exists():
            raise MissingPrerequisite(step, producer, hint or f"run 'semxai {producer}' first (missing {rel})")
        self._inputs[str(rel)] = io.sha256_file(p)
        return p

    def wrote(self, path):
        path = Path(path)
        self._outputs[str(path.relative_to(self.path))] = io.sha256_file(path)
        return path

    def begin(self):
        self._inputs, self._outputs = {}, {}
        self.wrote(save_config(self.file(CONFIG_FILE), self.config))

    def finish(self, step, seeds):
        mpath = self.file(MANIFEST_FILE)
        manifest = io.read_json(mpath) if mpath.exists() else {"schema_version": SCHEMA_VERSION, "steps": {}}
        manifest["steps"][step] = {
            "completed": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
            "corpus": self.config.corpus,
            "seeds": seeds,
            "inputs": dict(sorted(self._inputs.items())),
            "outputs": dict(sorted(self._outputs.items())),
        }
        io.write_json(mpath, manifest)
        return manifest["steps"][step]


def _pool_map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def load_corpus(config):
    if config.corpus == "synthetic":
        return corpus_mod.generate_synthetic_corpus(config.corpus_spec())
    return corpus_mod.load_folder_corpus(config.corpus, config.image_size, config.classes)


def _split(config):
    return corpus_mod.split(load_corpus(config), config.test_fraction, config.split_seed)


def _model(run, step):
    return nn.load_checkpoint(run.require(step, "model/model.ckpt", "train"))


def _space_name(cls, concept):
    return f"{cls}_{concept}"


def _load_spaces(run, step, fitted):
    spaces = {}
    for cls in run.config.classes:
        for concept in CONCEPTS:
            name = _space_name(cls, concept)
            if fitted:
                fit_path = run.require(step, f"stats/{name}_fit.json", "fit-stats",
                                       f"run 'semxai fit-stats' first (missing stats/{name}_fit.json)")
            space = io.load_semantic_space(run.require(step, f"semspace/{name}.json", "extract-semspace"))
            if fitted:
                space.fit = io.load_fit(fit_path)
            spaces[space.key] = space
    return spaces


# ---------------------------------------------------------------- steps


def step_train(run):
    cfg = run.config
    train_set, test_set = _split(cfg)
    arch = nn.desk_architecture(3, cfg.widths, len(cfg.classes))
    model, losses = nn.train(train_set.images, train_set.labels, cfg.train_config(), arch=arch,
                             classes=cfg.classes)
    d = run.file("model")
    run.wrote(io.atomic_write_bytes(d / "model.ckpt", nn.checkpoint_bytes(model)))
    run.wrote(io.write_csv(d / "loss.csv", ["batch", "loss"], enumerate(losses)))
    metrics = {
        "train_accuracy": nn.accuracy(model, train_set.images, train_set.labels),
        "test_accuracy": nn.accuracy(model, test_set.images, test_set.labels),
        "n_train": len(train_set),
        "n_test": len(test_set),
    }
    run.wrote(io.write_json(d / "metrics.json", metrics))
    run.wrote(plotting.loss_curve(losses, d / "loss.png"))
    log.info("test accuracy %.3f", metrics["test_accuracy"])
    return {"train_seed": cfg.train_seed, "corpus_seed": cfg.corpus_seed, "split_seed": cfg.split_seed}


def step_extract_traits(run):
    cfg = run.config
    model = _model(run, "extract-traits")
    train_set, _ = _split(cfg)
    d = run.file("traits")
    ratios, trends = {}, {}
    spread_rows, layer_rows = [], []
    for c, cls in enumerate(cfg.classes):
        pool = train_set.of_class(cls)
        feats = nn.forward_features(model, pool.images)
        n_s = min(cfg.trait_samples, len(pool))
        pca = row_centered_pca(feats[:n_s], variance=cfg.variance_target)
        for p in io.save_pca(d / f"{cls}_pca", pca):
            run.wrote(p)
        ratios[cls] = pca.ratios
        sizes = [s for s in cfg.spread_sizes if s <= len(pool)]
        rep = spread_by_sample_size(feats, sizes, cfg.spread_repeats, cfg.spread_seed + c)
        spread_rows += [(cls, s, rep[s].e) for s in sizes]
        trends[cls] = (sizes, [rep[s].e for s in sizes])
        layer_rows += [(cls, i, kind, r) for i, (kind, r) in enumerate(layer_ratios(model, pool.images[:n_s]))]
        if cfg.ga_samples:
            run.wrote(_traits_ga(run, model, pool, c, cls))
    run.wrote(io.write_csv(d / "spread.csv", ["class", "n_s", "e_percent"], spread_rows))
    run.wrote(io.write_csv(d / "layer_ratios.csv", ["class", "layer", "kind", "ratio"], layer_rows))
    run.wrote(plotting.info_ratios(ratios, d / "info_ratios.png"))
    run.wrote(plotting.spread_trend(trends, d / "spread.png"))
    first = [(k, r) for cls_, _, k, r in layer_rows if cls_ == cfg.classes[0]]
    run.wrote(plotting.layer_ratios(first, d / "layer_ratios.png"))
    return {"spread_seed": cfg.spread_seed, "ga_seed": cfg.ga_seed}


def _traits_ga(run, model, pool, c, cls):
    """Best superpixel combination for a few samples: traces and images."""
    cfg = run.config
    imgs = pool.images[:cfg.ga_samples]

    def job(i):
        seg = slic_segment(imgs[i], cfg.n_sp_ga, cfg.compactness)
        res = evolve(model, imgs[i], seg, c, cfg.ga_config(i))
        return seg, res

    out = _pool_map(job, range(len(imgs)), cfg.workers)
    d = run.file("traits/ga")
    rows = []
    tiles, titles = [], []
    for i, (seg, res) in enumerate(out):
        rows += [(pool.ids[i], g, e, m) for g, e, m in res.trace_rows()]
        tiles += [imgs[i], genome_to_image(imgs[i], seg, res.genome, model.mean)]
        titles += [pool.ids[i], f"p={res.fitness:.3f}"]
    run.wrote(io.write_csv(d / f"{cls}_trace.csv", ["id", "generation", "elite_fitness", "mean_fitness"], rows))
    run.wrote(plotting.ga_trace(out[0][1], d / f"{cls}_trace.png"))
    return plotting.image_grid(tiles, d / f"{cls}_best.png", ncols=4, titles=titles)


def _pairs(data, concept, n):
    """First ``n`` samples carrying ``concept``: unmasked and masked images."""
    if data.parts is None:
        raise InvalidParam("corpus has no part annotations; semantic spaces need masks")
    has = np.array([concept in m for m in data.masks])
    sub = data.subset(np.flatnonzero(has)[:n])
    return sub, sub.masked(concept)


def step_extract_semspace(run):
    cfg = run.config
    model = _model(run, "extract-semspace")
    train_set, _ = _split(cfg)
    d = run.file("semspace")
    for cls in cfg.classes:
        pool = train_set.of_class(cls)
        for concept in CONCEPTS:
            sub, masked = _pairs(pool, concept, cfg.ssn_pairs)
            fa = nn.forward_features(model, sub.images)
            fb = nn.forward_features(model, masked)
            space, pa, pb = extract_semantic_space(fa, fb, cfg.n_ssn, concept, cls)
            name = _space_name(cls, concept)
            run.wrote(io.save_semantic_space(d / f"{name}.json", space, cfg.target_scale))
            rows = [(j, pa[j], pb[j], pa[j] - pb[j]) for j in range(len(pa))]
            run.wrote(io.write_csv(d / f"{name}_pcs.csv", ["feature", "unmasked", "masked", "difference"], rows))
            run.wrote(plotting.ssn_difference(pa, pb if pa @ pb >= 0 else -pb, space, d / f"{name}_diff.png"))
            run.wrote(plotting.image_grid([sub.images[0], masked[0]], d / f"{name}_mask_example.png", ncols=2,
                                          titles=["unmasked", "masked"]))
    return {"corpus_seed": cfg.corpus_seed, "split_seed": cfg.split_seed}


def _display(image):
    """Min-max stretch for showing an activation-maximisation result."""
    lo, hi = image.min(), image.max()
    return (image - lo) / (hi - lo) if hi > lo else np.zeros_like(image)


def step_visualize(run):
    cfg = run.config
    spaces = _load_spaces(run, "visualize", fitted=False)
    model = _model(run, "visualize")
    keys = list(spaces)

    def job(key):
        return visualize(model, build_target_encoding(spaces[key], cfg.target_scale), cfg.vis_config())

    results = _pool_map(job, keys, cfg.workers)
    d = run.file("vis")
    tiles, titles = [], []
    for (concept, cls), res in zip(keys, results):
        name = _space_name(cls, concept)
        run.wrote(io.write_rgb_png(d / f"{name}.png", _display(res.image)))
        run.wrote(io.write_csv(d / f"{name}_trace.csv", ["iteration", "objective"], enumerate(res.trace)))
        tiles.append(_display(res.image))
        titles.append(name)
    run.wrote(plotting.image_grid(tiles, d / "semantic_spaces.png", ncols=len(CONCEPTS), titles=titles))
    return {}


def step_fit_stats(run):
    cfg = run.config
    spaces = _load_spaces(run, "fit-stats", fitted=False)
    model = _model(run, "fit-stats")
    train_set, _ = _split(cfg)
    d = run.file("stats")
    summary = []
    for c, cls in enumerate(cfg.classes):
        feats = nn.forward_features(model, train_set.of_class(cls).images)
        for concept in CONCEPTS:
            space = spaces[(concept, cls)]
            a = weighted_activation(feats, space)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                fit = fit_activation_distribution(a)
            for w in caught:
                log.warning("%s: %s", _space_name(cls, concept), w.message)
            name = _space_name(cls, concept)
            run.wrote(io.save_fit(d / f"{name}_fit.json", fit))
            counts, edges = np.histogram(a, bins=30)
            rows = [(edges[i], edges[i + 1], int(counts[i])) for i in range(len(counts))]
            run.wrote(io.write_csv(d / f"{name}_hist.csv", ["bin_lo", "bin_hi", "count"], rows))
            run.wrote(plotting.activation_fit(a, fit, d / f"{name}_dist.png", title=name))
            summary.append((cls, concept, fit.n, fit.mu, fit.sigma, fit.a_min, fit.a_max, qq_r2(a)))
    header = ["class", "concept", "n", "mu", "sigma", "a_min", "a_max", "qq_r2"]
    run.wrote(io.write_csv(d / "summary.csv", header, summary))
    return {"corpus_seed": cfg.corpus_seed, "split_seed": cfg.split_seed}


def _radar_row(radar):
    return [p for _, _, p in radar.rows()]


def _radar_header(classes):
    return [f"P_{cls}_{c}" for cls in classes for c in CONCEPTS]


def step_assess(run):
    cfg = run.config
    spaces = _load_spaces(run, "assess", fitted=True)
    model = _model(run, "assess")
    _, test_set = _split(cfg)
    feats = nn.forward_features(model, test_set.images)
    preds = nn.softmax(nn.dense_logits(model, feats)).argmax(axis=1)

    def job(i):
        radar = compute_radar(None, model, spaces, features=feats[i])
        ind = derive_indicators(radar, int(preds[i]))
        return radar, ind, generate_explanation(ind)

    out = _pool_map(job, range(len(test_set)), cfg.workers)
    d = run.file("assess")
    rows, lines, long_rows = [], [], []
    for i, (radar, ind, expl) in enumerate(out):
        long_rows += [(test_set.ids[i], c, k, p) for c, k, p in radar.rows()]
        flag = flag_adversarial(radar, cfg.flag_single, cfg.flag_multi)
        rows.append([test_set.ids[i], cfg.classes[test_set.labels[i]], ind.predicted, *_radar_row(radar),
                     ind.p_max, ind.s_max, ind.delta_max, int(flag)])
        lines.append(f"{test_set.ids[i]}\t{expl.sentence}")
        if i < cfg.report_radars:
            safe = test_set.ids[i].replace("/", "_")
            run.wrote(plotting.radar_chart(radar, d / "radars" / f"{safe}.svg", title=expl.sentence[:60]))
    header = ["id", "label", "predicted", *_radar_header(cfg.classes), "p_max", "s_max", "delta_max", "flagged"]
    run.wrote(io.write_csv(d / "radar.csv", header, rows))
    run.wrote(io.write_csv(d / "radar_long.csv", ["id", "concept", "class", "P"], long_rows))
    run.wrote(io.atomic_write_text(d / "explanations.txt", "\n".join(lines) + "\n"))
    return {"corpus_seed": cfg.corpus_seed, "split_seed": cfg.split_seed}


def step_search(run):
    cfg = run.config
    spaces = _load_spaces(run, "search", fitted=True)
    model = _model(run, "search")
    data = load_corpus(cfg)
    space = spaces[(cfg.search_concept, cfg.search_class)]
    feats = nn.forward_features(model, data.images)
    hits = search_samples(feats, space, cfg.search_predicate, cfg.search_threshold, ids=range(len(data)))
    p = semantic_probability(weighted_activation(feats, space), space.fit)
    d = run.file("search")
    rows = [(data.ids[i], data.classes[data.labels[i]], p[i]) for i in hits]
    run.wrote(io.write_csv(d / "results.csv", ["id", "label", "P"], rows))
    run.wrote(io.write_json(d / "query.json", {
        "class": cfg.search_class, "concept": cfg.search_concept,
        "predicate": cfg.search_predicate, "threshold": cfg.search_threshold, "n_hits": len(hits),
    }))
    shown = hits[:16]
    run.wrote(plotting.image_grid([data.images[i] for i in shown], d / "hits.png",
                                  titles=[f"{p[i]:.2f}" for i in shown]))
    return {"corpus_seed": cfg.corpus_seed}


def step_detect_adv(run):
    cfg = run.config
    spaces = _load_spaces(run, "detect-adv", fitted=True)
    model = _model(run, "detect-adv")
    _, test_set = _split(cfg)
    rng = np.random.default_rng(cfg.attack_seed)
    idx = np.sort(rng.choice(len(test_set), size=min(cfg.attack_pairs, len(test_set)), replace=False))
    n_cls = len(cfg.classes)

    def job(j):
        i = idx[j]
        x = test_set.images[i]
        target = (int(test_set.labels[i]) + 1) % n_cls
        return pgd_attack(model, x, target, cfg.attack_config(j)), target

    attacked = _pool_map(job, range(len(idx)), cfg.workers)
    adv = np.stack([a for a, _ in attacked])
    nat = test_set.images[idx]
    f_nat, f_adv = nn.forward_features(model, nat), nn.forward_features(model, adv)
    p_nat = nn.softmax(nn.dense_logits(model, f_nat)).argmax(axis=1)
    p_adv = nn.softmax(nn.dense_logits(model, f_adv)).argmax(axis=1)
    rows = []
    for j, i in enumerate(idx):
        r_nat = compute_radar(None, model, spaces, features=f_nat[j])
        r_adv = compute_radar(None, model, spaces, features=f_adv[j])
        rows.append([
            test_set.ids[i], cfg.classes[test_set.labels[i]], cfg.classes[attacked[j][1]],
            cfg.classes[p_nat[j]], cfg.classes[p_adv[j]],
            int(flag_adversarial(r_nat, cfg.flag_single, cfg.flag_multi)),
            int(flag_adversarial(r_adv, cfg.flag_single, cfg.flag_multi)),
            float(np.abs(adv[j] - nat[j]).max()),
        ])
    header = ["id", "label", "target", "pred_natural", "pred_attacked", "flag_natural", "flag_attacked", "linf"]
    d = run.file("adv")
    run.wrote(io.write_csv(d / "pairs.csv", header, rows))
    summary = {
        "n_pairs": len(rows),
        "epsilon": cfg.pgd_epsilon,
        "attack_success": float(np.mean([r[4] == r[2] for r in rows])),
        "flag_rate_natural": float(np.mean([r[5] for r in rows])),
        "flag_rate_attacked": float(np.mean([r[6] for r in rows])),
    }
    run.wrote(io.write_json(d / "summary.json", summary))
    run.wrote(plotting.flag_rates(summary, d / "flag_rates.png"))
    k = min(4, len(idx))
    tiles = [t for j in range(k) for t in (nat[j], adv[j])]
    run.wrote(plotting.image_grid(tiles, d / "examples.png", ncols=4,
                                  titles=[t for j in range(k) for t in ("natural", "attacked")]))
    return {"attack_seed": cfg.attack_seed, "split_seed": cfg.split_seed}


STEP_FUNCS = {
    "train": step_train,
    "extract-traits": step_extract_traits,
    "extract-semspace": step_extract_semspace,
    "visualize": step_visualize,
    "fit-stats": step_fit_stats,
    "assess": step_assess,
    "search": step_search,
    "detect-adv": step_detect_adv,
}


def run_step(step, config, run_dir):
    """Execute one step in ``run_dir``; returns its manifest entry."""
    if step not in STEP_FUNCS:
        raise InvalidParam(f"unknown step {step!r}; choose from {', '.join(STEPS)}")
    run = Run(run_dir, config)
    run.begin()
    seeds = STEP_FUNCS[step](run)
    return run.finish(step, seeds)


def run_pipeline(config, run_dir, steps=STEPS):
    return {s: run_step(s, config, run_dir) for s in steps}


__all__ = [
    "PipelineConfig", "STEPS", "SCHEMA_VERSION", "RUN_ROOT_ENV", "load_config", "save_config",
    "run_step", "run_pipeline", "run_root", "load_corpus", "NotFitted",
]
