"""File formats: PNG images and label maps, JSON sidecars, CSV tables.

All writers go through a temp file + rename so a crash never leaves a
half-written artifact behind.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import IoError
from .superpixel import MaskSpec


def atomic_write_bytes(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text):
    return atomic_write_bytes(path, text.encode("utf-8"))


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read(path):
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoError(path, f"cannot read ({exc.strerror or exc})") from exc


# ---------------------------------------------------------------- json


def write_json(path, obj):
    return atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    raw = _read(path)
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IoError(path, f"corrupt JSON ({exc})") from exc


def write_mask_specs(path, specs):
    payload = {c: {"targets": sorted(s.targets), "fill": s.fill} for c, s in specs.items()}
    return write_json(path, payload)


def read_mask_specs(path):
    data = read_json(path)
    try:
        return {c: MaskSpec(frozenset(d["targets"]), d["fill"]) for c, d in data.items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise IoError(path, f"bad mask spec ({exc})") from exc


# ---------------------------------------------------------------- csv


def write_csv(path, header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return atomic_write_text(path, buf.getvalue())


def read_csv(path):
    text = _read(path).decode("utf-8")
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows:
        raise IoError(path, "empty CSV")
    return rows[0], rows[1:]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


# ---------------------------------------------------------------- png


def _png_bytes(arr, mode=None):
    buf = _io.BytesIO()
    PILImage.fromarray(arr, mode=mode).save(buf, format="PNG", optimize=False)
    return buf.getvalue()


def to_uint8(image):
    """``(3, H, W)`` float image -> ``(H, W, 3)`` uint8, clamped to ``[0, 1]``."""
    x = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return np.round(x.transpose(1, 2, 0) * 255.0).astype(np.uint8)


def write_rgb_png(path, image):
    return atomic_write_bytes(path, _png_bytes(to_uint8(image)))


def read_rgb_png(path, size=None):
    """RGB PNG -> ``(3, H, W)`` float in ``[0, 1]``, optionally resized
    (nearest neighbour) to ``size x size``."""
    raw = _read(path)
    try:
        img = PILImage.open(_io.BytesIO(raw))
        img.load()
    except Exception as exc:  # PIL raises a zoo of exception types
        raise IoError(path, f"unreadable PNG ({exc})") from exc
    img = img.convert("RGB")
    if size is not None and img.size != (size, size):
        img = img.resize((size, size), PILImage.NEAREST)
    return np.asarray(img, dtype=np.float64).transpose(2, 0, 1) / 255.0


def write_label_png(path, labels):
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > 65535:
        raise ValueError("label values must fit in 16 bits")
    return atomic_write_bytes(path, _png_bytes(labels.astype(np.uint16)))


def read_label_png(path, size=None):
    raw = _read(path)
    try:
        img = PILImage.open(_io.BytesIO(raw))
        img.load()
    except Exception as exc:
        raise IoError(path, f"unreadable label map ({exc})") from exc
    if size is not None and img.size != (size, size):
        img = img.resize((size, size), PILImage.NEAREST)
    return np.asarray(img).astype(np.int64)


# ---------------------------------------------------------------- structured artifacts


def space_to_dict(space, scale=None):
    d = {
        "concept": space.concept,
        "class": space.class_name,
        "indices": [int(i) for i in space.indices],
        "weights": [float(w) for w in space.weights],
        "width": int(space.width),
        "meta": space.meta,
    }
    if scale is not None:
        d["scale"] = float(scale)
    if space.fit is not None:
        d["fit"] = space.fit.as_dict()
    return d


def space_from_dict(d):
    from .semspace import SemanticSpace
    from .semstats import FittedActivation

    fit = d.get("fit")
    return SemanticSpace(
        d["concept"], d["class"], d["indices"], d["weights"], d["width"], d.get("meta", {}),
        FittedActivation(**fit) if fit is not None else None,
    )


def save_semantic_space(path, space, scale=None):
    return write_json(path, space_to_dict(space, scale))


def load_semantic_space(path):
    d = read_json(path)
    try:
        return space_from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise IoError(path, f"bad semantic space ({exc})") from exc


def save_fit(path, fit):
    return write_json(path, fit.as_dict())


def load_fit(path):
    from .semstats import FittedActivation

    d = read_json(path)
    try:
        return FittedActivation(float(d["mu"]), float(d["sigma"]), float(d["a_min"]), float(d["a_max"]), int(d["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise IoError(path, f"bad fitted distribution ({exc})") from exc


def save_pca(stem, result):
    """``<stem>.csv`` holds the PC scores per feature, ``<stem>.json`` the spectrum."""
    stem = Path(stem)
    header = ["feature"] + [f"pc{i + 1}" for i in range(result.k)]
    rows = [[j, *result.scores[j]] for j in range(len(result.scores))]
    csv_path = write_csv(stem.with_suffix(".csv"), header, rows)
    meta = {
        "k": result.k,
        "rank": result.rank,
        "eigenvalues": [float(v) for v in result.eigenvalues],
        "ratios": [float(v) for v in result.ratios],
        "n_samples": len(result.row_means),
    }
    return csv_path, write_json(stem.with_suffix(".json"), meta)


def load_pca_scores(stem):
    _, rows = read_csv(Path(stem).with_suffix(".csv"))
    return np.array([[float(v) for v in r[1:]] for r in rows])
