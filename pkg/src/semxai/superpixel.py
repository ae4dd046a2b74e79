"""SLIC superpixels in CIELAB space and superpixel-level masking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InvalidParam, ShapeMismatch

# sRGB (D65) -> XYZ
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_D65 = np.array([0.95047, 1.0, 1.08883])
_EPS = (6.0 / 29.0) ** 3


def rgb_to_lab(image):
    """Convert a ``(3, H, W)`` sRGB image in ``[0, 1]`` to CIELAB (D65)."""
    rgb = np.asarray(image, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[0] != 3:
        raise ShapeMismatch(f"expected a (3, H, W) RGB image, got shape {rgb.shape}")
    lin = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = np.tensordot(_RGB_TO_XYZ, lin, axes=1) / _D65[:, None, None]
    f = np.where(xyz > _EPS, np.cbrt(xyz), xyz / (3 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    l = 116.0 * f[1] - 16.0
    a = 500.0 * (f[0] - f[1])
    b = 200.0 * (f[1] - f[2])
    return np.stack([np.clip(l, 0.0, 100.0), a, b])


@dataclass(frozen=True)
class MaskSpec:
    """Segments to paint over and the segment whose mean colour they get."""

    targets: frozenset
    fill: int

    def __post_init__(self):
        object.__setattr__(self, "targets", frozenset(int(t) for t in self.targets))
        object.__setattr__(self, "fill", int(self.fill))
        if self.fill in self.targets:
            raise InvalidParam("fill segment cannot also be a target")


@dataclass
class Segmentation:
    labels: np.ndarray  # (H, W) int
    centers: np.ndarray  # (n, 5) rows of [l, a, b, x, y]
    k_s: int
    grid_interval: float
    compactness: float
    spatial_normalizer: float
    residuals: list = field(default_factory=list)

    @property
    def n_segments(self):
        return len(self.centers)

    @property
    def n_pixels(self):
        return self.labels.size


def _grid_shape(h, w, k):
    """Rows x columns of seeds: most seeds not exceeding ``k`` with cells no
    more than 2:1 elongated; ties go to squarer cells, then more columns."""
    best, best_key = (1, 1), None
    fallback, fallback_key = (1, 1), None
    for ny in range(1, min(h, k) + 1):
        for nx in range(1, min(w, k // ny) + 1):
            r = abs(np.log((h / ny) / (w / nx)))
            key = (ny * nx, -round(r, 12), nx)
            if r <= np.log(2) + 1e-12 and (best_key is None or key > best_key):
                best, best_key = (ny, nx), key
            fkey = (-round(r, 12), ny * nx, nx)
            if fallback_key is None or fkey > fallback_key:
                fallback, fallback_key = (ny, nx), fkey
    return best if best_key is not None else fallback


def _lab_gradient(lab):
    p = np.pad(lab, ((0, 0), (1, 1), (1, 1)), mode="edge")
    gx = p[:, 1:-1, 2:] - p[:, 1:-1, :-2]
    gy = p[:, 2:, 1:-1] - p[:, :-2, 1:-1]
    return (gx ** 2).sum(0) + (gy ** 2).sum(0)


def _seeds(lab, k_s):
    _, h, w = lab.shape
    ny, nx = _grid_shape(h, w, k_s)
    grad = _lab_gradient(lab)
    seeds = []
    for i in range(ny):
        for j in range(nx):
            y = int((i + 0.5) * h / ny)
            x = int((j + 0.5) * w / nx)
            best = (np.inf, y, x)
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and grad[yy, xx] < best[0]:
                        best = (grad[yy, xx], yy, xx)
            _, y, x = best
            seeds.append([*lab[:, y, x], x, y])
    return np.asarray(seeds, dtype=np.float64)


def _cluster_means(lab, labels, n):
    _, h, w = lab.shape
    yy, xx = np.mgrid[0:h, 0:w]
    flat = labels.ravel()
    counts = np.bincount(flat, minlength=n).astype(np.float64)
    feats = [lab[0], lab[1], lab[2], xx, yy]
    sums = np.stack([np.bincount(flat, weights=f.ravel(), minlength=n) for f in feats], axis=1)
    return sums, counts


def _enforce_connectivity(labels):
    """Merge every disconnected piece of a segment into the largest segment it
    touches, then renumber in raster order."""
    labels = labels.copy()
    while True:
        changed = False
        sizes = np.bincount(labels.ravel())
        for lab in np.unique(labels):
            comp, n = ndimage.label(labels == lab)
            if n <= 1:
                continue
            comp_sizes = np.bincount(comp.ravel())[1:]
            keep = int(np.argmax(comp_sizes)) + 1
            for c in range(1, n + 1):
                if c == keep:
                    continue
                piece = comp == c
                ring = ndimage.binary_dilation(piece) & ~piece
                neigh = np.unique(labels[ring])
                neigh = neigh[neigh != lab]
                if len(neigh) == 0:
                    continue
                target = neigh[np.argmax(sizes[neigh])]
                labels[piece] = target
                changed = True
            sizes = np.bincount(labels.ravel(), minlength=len(sizes))
        if not changed:
            break
    _, first = np.unique(labels.ravel(), return_index=True)
    order = np.unique(labels.ravel())[np.argsort(first)]
    remap = np.zeros(labels.max() + 1, dtype=np.int64)
    remap[order] = np.arange(len(order))
    return remap[labels]


def slic_segment(image, k_s, compactness=10.0, max_iter=10, threshold=1e-3, enforce_connectivity=True):
    """Simple linear iterative clustering.

    Seeds start on an even grid with interval ``S = sqrt(H*W / k_s)`` and move
    to the lowest-gradient pixel of their 3x3 neighbourhood.  Each round
    assigns pixels within a ``2S x 2S`` window of a centre using
    ``D = sqrt((d_lab / compactness)^2 + (d_xy / S)^2)`` and moves centres to
    their cluster means; iteration stops when the summed centre displacement
    falls below ``threshold`` or after ``max_iter`` rounds.
    """
    lab = rgb_to_lab(image)
    _, h, w = lab.shape
    n_pix = h * w
    if not 1 <= k_s <= n_pix:
        raise InvalidParam(f"k_s must lie in [1, {n_pix}], got {k_s}")
    if max_iter < 1:
        raise InvalidParam("max_iter must be >= 1")
    if not compactness > 0:
        raise InvalidParam("compactness must be > 0")
    step = float(np.sqrt(n_pix / k_s))
    centers = _seeds(lab, k_s)
    n = len(centers)
    yy, xx = np.mgrid[0:h, 0:w]
    labels = np.full((h, w), -1, dtype=np.int64)
    residuals = []
    for _ in range(max_iter):
        best = np.full((h, w), np.inf)
        labels[:] = -1
        for k, (l, a, b, cx, cy) in enumerate(centers):
            y0, y1 = max(0, int(np.floor(cy - step))), min(h, int(np.ceil(cy + step)) + 1)
            x0, x1 = max(0, int(np.floor(cx - step))), min(w, int(np.ceil(cx + step)) + 1)
            win = lab[:, y0:y1, x0:x1]
            dc2 = (win[0] - l) ** 2 + (win[1] - a) ** 2 + (win[2] - b) ** 2
            ds2 = (yy[y0:y1, x0:x1] - cy) ** 2 + (xx[y0:y1, x0:x1] - cx) ** 2
            d = dc2 / compactness ** 2 + ds2 / step ** 2
            region = best[y0:y1, x0:x1]
            closer = d < region
            region[closer] = d[closer]
            labels[y0:y1, x0:x1][closer] = k
        orphan = labels < 0
        if orphan.any():
            d2 = (yy[orphan][:, None] - centers[None, :, 4]) ** 2 + (xx[orphan][:, None] - centers[None, :, 3]) ** 2
            labels[orphan] = np.argmin(d2, axis=1)
        sums, counts = _cluster_means(lab, labels, n)
        new = centers.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        residual = float(np.linalg.norm(new - centers, axis=1).sum())
        residuals.append(residual)
        centers = new
        if residual < threshold:
            break
    if enforce_connectivity:
        labels = _enforce_connectivity(labels)
    else:
        _, labels = np.unique(labels, return_inverse=True)
        labels = labels.reshape(h, w)
    m = int(labels.max()) + 1
    sums, counts = _cluster_means(lab, labels, m)
    centers = sums / counts[:, None]
    return Segmentation(labels, centers, int(k_s), step, float(compactness), step, residuals)


def _label_map(seg):
    return seg.labels if isinstance(seg, Segmentation) else np.asarray(seg)


def mask_segments(image, seg, spec):
    """Replace every pixel of the target segments with the fill segment's
    mean RGB colour."""
    image = np.asarray(image)
    labels = _label_map(seg)
    if labels.shape != image.shape[1:]:
        raise ShapeMismatch(f"label map {labels.shape} does not match image {image.shape[1:]}")
    present = set(np.unique(labels).tolist())
    bad = [t for t in spec.targets | {spec.fill} if t not in present]
    if bad:
        raise InvalidParam(f"segment ids {sorted(bad)} not in label map")
    out = image.copy()
    if not spec.targets:
        return out
    fill = image[:, labels == spec.fill].mean(axis=1)
    hit = np.isin(labels, list(spec.targets))
    out[:, hit] = fill[:, None]
    return out


def grid_segmentation(h, w, rows, cols):
    """Label map of ``rows x cols`` rectangular blocks, for tests and GA demos."""
    ys = np.minimum(np.arange(h) * rows // h, rows - 1)
    xs = np.minimum(np.arange(w) * cols // w, cols - 1)
    labels = ys[:, None] * cols + xs[None, :]
    n = rows * cols
    centers = np.zeros((n, 5))
    yy, xx = np.mgrid[0:h, 0:w]
    for k in range(n):
        sel = labels == k
        centers[k, 3], centers[k, 4] = xx[sel].mean(), yy[sel].mean()
    step = float(np.sqrt(h * w / n))
    return Segmentation(labels, centers, n, step, 10.0, step, [])
