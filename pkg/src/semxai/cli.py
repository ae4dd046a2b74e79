"""Command line entry point.  Every PipelineConfig key is also a flag."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import io, pipeline, plotting
from .errors import MissingPrerequisite, SemXaiError
from .superpixel import slic_segment

log = logging.getLogger("semxai")

HELP = {
    "train": "train the CNN on the corpus",
    "extract-traits": "row-centred PCA of GAP features, spread and layer ratios, GA demos",
    "extract-semspace": "semantic spaces from masked/unmasked sample pairs",
    "visualize": "activation maximisation image for every semantic space",
    "fit-stats": "fit the activation distribution of every semantic space",
    "assess": "radar, indicators and explanation for every test image",
    "search": "samples whose semantic probability passes a threshold",
    "detect-adv": "PGD attack test pairs and compare adversarial flag rates",
    "run-all": "every step above in order",
}


def _flag_type(default):
    if isinstance(default, bool):
        return lambda s: s.lower() in ("1", "true", "yes")
    return type(default)


def _config_parent():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run")
    g.add_argument("--config", type=Path, help="JSON config file (default: the run's config.json if present)")
    g.add_argument("--run", default="default", help=f"run name under ${pipeline.RUN_ROOT_ENV} (default ./runs)")
    g.add_argument("--run-dir", type=Path, help="explicit run directory; overrides --run")
    g.add_argument("-v", "--verbose", action="store_true")
    g = p.add_argument_group("config keys")
    for f in pipeline.config_fields():
        flag = "--" + f.name.replace("_", "-")
        default = f.default
        if isinstance(default, tuple):
            g.add_argument(flag, dest=f.name, nargs="+", type=type(default[0]), default=None,
                           metavar=f.name.upper(), help=f"default {' '.join(map(str, default))}")
        else:
            g.add_argument(flag, dest=f.name, type=_flag_type(default), default=None,
                           metavar=f.name.upper(), help=f"default {default}")
    return p


def build_parser():
    parser = argparse.ArgumentParser(prog="semxai", description="Semantic explanations for a small CNN.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    parent = _config_parent()
    for name in (*pipeline.STEPS, "run-all"):
        sub.add_parser(name, parents=[parent], help=HELP[name])
    p = sub.add_parser("make-corpus", parents=[parent], help="write the synthetic corpus as PNG folders")
    p.add_argument("out", type=Path)
    p = sub.add_parser("segment", parents=[parent],
                       help="SLIC label map (n_sp_mask segments) and id overlay for hand-written mask specs")
    p.add_argument("image", type=Path)
    p.add_argument("out", type=Path, help="output directory")
    return parser


def run_dir_of(args):
    return args.run_dir if args.run_dir is not None else pipeline.run_root() / args.run


def resolve_config(args, run_dir):
    """Config file (explicit, else the run's saved one, else defaults) with
    command-line overrides applied on top."""
    if args.config is not None:
        base = pipeline.load_config(args.config).as_dict()
    elif (run_dir / pipeline.CONFIG_FILE).exists():
        base = pipeline.load_config(run_dir / pipeline.CONFIG_FILE).as_dict()
    else:
        base = {}
    for f in pipeline.config_fields():
        v = getattr(args, f.name, None)
        if v is not None:
            base[f.name] = v
    return pipeline.PipelineConfig(**base)


def _segment(args, config):
    img = io.read_rgb_png(args.image, config.image_size)
    seg = slic_segment(img, config.n_sp_mask, config.compactness)
    stem = args.image.stem
    io.write_label_png(args.out / f"{stem}.parts.png", seg.labels)
    plotting.segment_overlay(img, seg.labels, args.out / f"{stem}.overlay.png")
    print(f"{seg.n_segments} segments -> {args.out / (stem + '.parts.png')}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run_dir = run_dir_of(args)
        config = resolve_config(args, run_dir)
        if args.command == "segment":
            _segment(args, config)
            return 0
        if args.command == "make-corpus":
            corpus_mod.write_folder_corpus(corpus_mod.generate_synthetic_corpus(config.corpus_spec()), args.out)
            return 0
        steps = pipeline.STEPS if args.command == "run-all" else (args.command,)
        for step in steps:
            entry = pipeline.run_step(step, config, run_dir)
            print(f"{step}: {len(entry['outputs'])} artifacts in {run_dir}")
    except MissingPrerequisite as exc:
        print(f"semxai: error: {exc}", file=sys.stderr)
        return 2
    except SemXaiError as exc:
        print(f"semxai: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
