"""Image corpora: a seeded procedural two-class generator with ground-truth
part maps, and PNG folder ingestion."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, InvalidParam, IoError
from .semstats import CONCEPTS
from .superpixel import MaskSpec, mask_segments

PART_IDS = {"background": 0, "body": 1, "head": 2, "eyes": 3, "nose": 4, "legs": 5}
# concept -> part whose mean colour replaces it when masked
MASK_FILL = {"eyes": "head", "nose": "head", "legs": "background"}
MIN_SIZE = 24

FUR = np.array([
    [0.85, 0.55, 0.25],  # ginger
    [0.55, 0.55, 0.58],  # grey
    [0.45, 0.30, 0.18],  # brown
    [0.15, 0.14, 0.14],  # black
    [0.93, 0.91, 0.86],  # white
    [0.86, 0.76, 0.55],  # cream
])


@dataclass
class CorpusSpec:
    source: str = "synthetic"
    classes: tuple = ("cat", "dog")
    counts: int | tuple = 200
    size: int = 64
    seed: int = 0

    def __post_init__(self):
        self.classes = tuple(self.classes)
        counts = (self.counts,) * len(self.classes) if np.isscalar(self.counts) else tuple(self.counts)
        if len(counts) != len(self.classes) or min(counts) < 1:
            raise InvalidParam("need one count >= 1 per class")
        self.counts = tuple(int(c) for c in counts)
        if self.size < 1:
            raise InvalidParam("image size must be >= 1")


@dataclass
class Corpus:
    images: np.ndarray  # (N, 3, H, W) in [0, 1]
    labels: np.ndarray
    classes: tuple
    ids: list
    parts: np.ndarray | None = None  # (N, H, W) integer part maps
    masks: list = field(default_factory=list)  # per image: concept -> MaskSpec

    def __len__(self):
        return len(self.images)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return Corpus(
            self.images[idx], self.labels[idx], self.classes, [self.ids[i] for i in idx],
            None if self.parts is None else self.parts[idx],
            [self.masks[i] for i in idx] if self.masks else [],
        )

    def of_class(self, name):
        return self.subset(np.flatnonzero(self.labels == self.classes.index(name)))

    def masked(self, concept):
        """Copy of the images with ``concept`` painted over by its fill part."""
        if self.parts is None or not self.masks:
            raise InvalidParam("corpus carries no part annotations")
        out = np.empty_like(self.images)
        for i in range(len(self)):
            spec = self.masks[i].get(concept)
            out[i] = self.images[i] if spec is None else mask_segments(self.images[i], self.parts[i], spec)
        return out

    def has_part(self, concept):
        pid = PART_IDS[concept]
        return np.array([np.any(p == pid) for p in self.parts])


def split(corpus, test_fraction=0.2, seed=0):
    """Deterministic stratified train/test split."""
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(len(corpus.classes)):
        idx = np.flatnonzero(corpus.labels == c)
        idx = idx[rng.permutation(len(idx))]
        n_test = int(round(test_fraction * len(idx)))
        test_idx.extend(idx[:n_test])
        train_idx.extend(idx[n_test:])
    return corpus.subset(np.sort(train_idx)), corpus.subset(np.sort(test_idx))


# ---------------------------------------------------------------- drawing


class _Canvas:
    def __init__(self, size, background):
        self.n = size
        self.yy, self.xx = np.mgrid[0:size, 0:size].astype(np.float64) + 0.5
        self.rgb = np.empty((size, size, 3))
        self.rgb[:] = background
        self.parts = np.zeros((size, size), np.uint16)

    def paint(self, region, color, part):
        self.rgb[region] = color
        self.parts[region] = PART_IDS[part]

    def ellipse(self, cy, cx, ry, rx):
        return ((self.yy - cy) / ry) ** 2 + ((self.xx - cx) / rx) ** 2 <= 1.0

    def rect(self, y0, y1, x0, x1):
        return (self.yy >= y0) & (self.yy < y1) & (self.xx >= x0) & (self.xx < x1)

    def triangle(self, p0, p1, p2):
        def side(a, b):
            return (b[1] - a[1]) * (self.yy - a[0]) - (b[0] - a[0]) * (self.xx - a[1])

        s0, s1, s2 = side(p0, p1), side(p1, p2), side(p2, p0)
        return ((s0 >= 0) & (s1 >= 0) & (s2 >= 0)) | ((s0 <= 0) & (s1 <= 0) & (s2 <= 0))


def _draw_animal(rng, size, kind):
    u = size / 64.0
    bg = rng.uniform(0.25, 0.75, 3) * rng.uniform(0.7, 1.0)
    cv = _Canvas(size, bg)
    fur = np.clip(FUR[rng.integers(len(FUR))] + rng.normal(0, 0.04, 3), 0, 1)
    if np.linalg.norm(fur - bg) < 0.25:
        bg = np.clip(1.0 - fur * 0.8, 0, 1)
        cv.rgb[:] = bg
    dark = fur * 0.55
    face_left = rng.random() < 0.5
    sgn = -1.0 if face_left else 1.0

    # body and legs
    bcy = size * rng.uniform(0.58, 0.64)
    bcx = size * 0.5 + rng.uniform(-3, 3) * u
    bry = rng.uniform(7, 9) * u
    brx = rng.uniform(15, 18) * u
    if kind == "cat":
        leg_w, leg_len = rng.uniform(2.0, 3.0) * u, rng.uniform(9, 13) * u
    else:
        leg_w, leg_len = rng.uniform(4.0, 5.5) * u, rng.uniform(7, 10) * u
    legs_shown = rng.random() > 0.08
    if legs_shown:
        top = bcy + bry * 0.3
        for f in (-0.75, -0.4, 0.4, 0.75):
            x = bcx + f * brx
            cv.paint(cv.rect(top, min(top + leg_len, size - 0.5), x - leg_w / 2, x + leg_w / 2), dark, "legs")
    cv.paint(cv.ellipse(bcy, bcx, bry, brx), fur, "body")
    # tail
    tx = bcx - sgn * brx
    if kind == "cat":
        cv.paint(cv.rect(bcy - 14 * u, bcy, tx - 1.2 * u, tx + 1.2 * u), fur, "body")
    else:
        cv.paint(cv.ellipse(bcy - 4 * u, tx - sgn * 2 * u, 2.2 * u, 5 * u), fur, "body")

    # head
    hr = rng.uniform(9.5, 12) * u
    hcy = bcy - bry - hr * rng.uniform(0.45, 0.65)
    hcx = bcx + sgn * brx * rng.uniform(0.45, 0.65)
    hcx = float(np.clip(hcx, hr + 1, size - hr - 1))
    hcy = float(max(hcy, hr + 4 * u))
    if kind == "cat":
        head = cv.ellipse(hcy, hcx, hr, hr)
        for side in (-1, 1):
            base = hcx + side * hr * 0.55
            ear = cv.triangle((hcy - hr * 0.5, base - side * 4 * u), (hcy - hr * 0.3, base + side * 4 * u),
                              (hcy - hr - 5 * u, base + side * 1.5 * u))
            cv.paint(ear, fur, "head")
        cv.paint(head, fur, "head")
    else:
        head = cv.ellipse(hcy, hcx, hr * 0.92, hr * 1.12)
        cv.paint(head, fur, "head")
        muzzle = cv.ellipse(hcy + hr * 0.35, hcx, hr * 0.45, hr * 0.6)
        cv.paint(muzzle, np.clip(fur * 0.85 + 0.12, 0, 1), "head")
        for side in (-1, 1):
            ear = cv.ellipse(hcy + 1 * u, hcx + side * hr * 1.08, hr * 0.6, 2.6 * u)
            cv.paint(ear, dark, "head")

    # eyes
    er = rng.uniform(1.4, 3.0) * u
    ey = hcy - hr * 0.18
    gap = hr * rng.uniform(0.38, 0.5)
    for side in (-1, 1):
        ex = hcx + side * gap
        if kind == "cat":
            iris = np.array([0.55, 0.8, 0.2]) if rng.random() < 0.5 else np.array([0.9, 0.8, 0.2])
            cv.paint(cv.ellipse(ey, ex, er * 1.1, er * 1.4), iris, "eyes")
            cv.paint(cv.ellipse(ey, ex, er * 1.0, er * 0.4), np.array([0.03, 0.03, 0.03]), "eyes")
        else:
            cv.paint(cv.ellipse(ey, ex, er * 1.2, er * 1.2), np.array([0.22, 0.12, 0.05]), "eyes")
            cv.paint(cv.ellipse(ey - er * 0.4, ex + er * 0.4, er * 0.4, er * 0.4), np.array([0.95, 0.95, 0.95]), "eyes")

    # nose
    ny = hcy + hr * 0.35
    if kind == "cat":
        ns = rng.uniform(1.5, 2.6) * u
        cv.paint(cv.triangle((ny - ns, hcx - ns * 1.2), (ny - ns, hcx + ns * 1.2), (ny + ns, hcx)),
                 np.array([0.95, 0.55, 0.6]), "nose")
    else:
        ns = rng.uniform(2.2, 3.6) * u
        cv.paint(cv.ellipse(ny, hcx, ns * 0.8, ns * 1.2), np.array([0.05, 0.04, 0.04]), "nose")

    rgb = cv.rgb + rng.normal(0, 0.025, cv.rgb.shape)
    img = np.round(np.clip(rgb, 0, 1) * 255).astype(np.uint8)
    return img.transpose(2, 0, 1).astype(np.float64) / 255.0, cv.parts


def mask_specs_for(parts):
    """One MaskSpec per concept present in a part map."""
    specs = {}
    present = set(np.unique(parts).tolist())
    for concept in CONCEPTS:
        pid = PART_IDS[concept]
        fill = PART_IDS[MASK_FILL[concept]]
        if pid in present and fill in present:
            specs[concept] = MaskSpec(frozenset({pid}), fill)
    return specs


def generate_synthetic_corpus(spec):
    """Draw ``spec.counts`` images per class.  Each image gets its own child
    seed, so corpora of different sizes share their leading images."""
    if spec.size < MIN_SIZE:
        raise InvalidParam(f"synthetic images need size >= {MIN_SIZE} to hold all parts, got {spec.size}")
    kinds = ("cat", "dog")
    images, labels, ids, parts, masks = [], [], [], [], []
    for c, (name, count) in enumerate(zip(spec.classes, spec.counts)):
        kind = kinds[c % 2]
        for i in range(count):
            rng = np.random.default_rng([spec.seed, c, i])
            img, pm = _draw_animal(rng, spec.size, kind)
            images.append(img)
            parts.append(pm)
            labels.append(c)
            ids.append(f"{name}_{i:05d}")
            masks.append(mask_specs_for(pm))
    return Corpus(np.stack(images), np.asarray(labels), spec.classes, ids, np.stack(parts), masks)


# ---------------------------------------------------------------- folders


def load_folder_corpus(root, size, classes=None):
    """Read ``root/<class>/<name>.png`` images, resized with nearest neighbour.

    Optional annotations per image: ``<name>.parts.png`` (16-bit part map) and
    ``<name>.parts.json`` (concept -> mask spec).
    """
    from . import io

    root = Path(root)
    if not root.is_dir():
        raise IoError(root, "corpus folder does not exist")
    if classes is None:
        classes = tuple(sorted(p.name for p in root.iterdir() if p.is_dir()))
    images, labels, ids, parts, masks = [], [], [], [], []
    annotated = True
    for c, name in enumerate(classes):
        files = sorted(p for p in (root / name).glob("*.png") if not p.name.endswith(".parts.png"))
        for f in files:
            images.append(io.read_rgb_png(f, size))
            labels.append(c)
            ids.append(f"{name}/{f.stem}")
            pfile = f.with_name(f.stem + ".parts.png")
            sfile = f.with_name(f.stem + ".parts.json")
            if pfile.exists() and sfile.exists():
                parts.append(io.read_label_png(pfile, size))
                masks.append(io.read_mask_specs(sfile))
            else:
                annotated = False
    if not images:
        raise EmptyDataset(f"no PNG images under {root}")
    return Corpus(
        np.stack(images), np.asarray(labels), tuple(classes), ids,
        np.stack(parts) if annotated else None, masks if annotated else [],
    )


def write_folder_corpus(corpus, root):
    """Inverse of :func:`load_folder_corpus` (used to export synthetic data)."""
    from . import io

    root = Path(root)
    for i, ident in enumerate(corpus.ids):
        cls = corpus.classes[corpus.labels[i]]
        stem = ident.split("/")[-1]
        d = root / cls
        io.write_rgb_png(d / f"{stem}.png", corpus.images[i])
        if corpus.parts is not None:
            io.write_label_png(d / f"{stem}.parts.png", corpus.parts[i])
            io.write_mask_specs(d / f"{stem}.parts.json", corpus.masks[i])
