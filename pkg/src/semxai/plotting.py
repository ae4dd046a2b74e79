"""Report figures.  Everything renders off-screen and is written with
deterministic metadata so repeated runs produce byte-identical files."""

from __future__ import annotations

import io as _io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy import stats  # noqa: E402

from .io import atomic_write_bytes, to_uint8  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "svg.hashsalt": "semxai",
    "svg.fonttype": "none",
}


def figure(width=4.5, height=3.2, **kw):
    with plt.rc_context(STYLE):
        return plt.subplots(figsize=(width, height), **kw)


def save(fig, path):
    """Write ``fig`` as PNG or SVG (by suffix) and close it."""
    fmt = str(path).rsplit(".", 1)[-1].lower()
    meta = {"Date": None} if fmt == "svg" else {"Software": None}
    buf = _io.BytesIO()
    with plt.rc_context(STYLE):
        fig.tight_layout()
        fig.savefig(buf, format=fmt, metadata=meta)
    plt.close(fig)
    return atomic_write_bytes(path, buf.getvalue())


def loss_curve(losses, path, window=10):
    fig, ax = figure()
    ax.plot(losses, lw=0.6, color="0.7", label="batch")
    if len(losses) >= window:
        smooth = np.convolve(losses, np.ones(window) / window, mode="valid")
        ax.plot(np.arange(window - 1, len(losses)), smooth, color="C0", label=f"{window}-batch mean")
    ax.set_xlabel("batch")
    ax.set_ylabel("cross-entropy")
    ax.legend(frameon=False)
    return save(fig, path)


def info_ratios(ratios_by_class, path, n=5):
    fig, ax = figure()
    width = 0.8 / max(len(ratios_by_class), 1)
    for i, (name, r) in enumerate(ratios_by_class.items()):
        r = np.asarray(r)[:n] * 100
        x = np.arange(1, len(r) + 1) + (i - (len(ratios_by_class) - 1) / 2) * width
        ax.bar(x, r, width=width, label=name)
        for xi, ri in zip(x, r):
            ax.annotate(f"{ri:.1f}", (xi, ri), ha="center", va="bottom", fontsize=7)
    ax.set_xlabel("PC")
    ax.set_ylabel("information ratio (%)")
    ax.legend(frameon=False)
    return save(fig, path)


def spread_trend(sizes_by_class, path):
    fig, ax = figure()
    for name, (sizes, e) in sizes_by_class.items():
        ax.plot(sizes, e, marker="o", label=name)
    ax.set_xlabel("$N_s$")
    ax.set_ylabel("spread e (%)")
    ax.legend(frameon=False)
    return save(fig, path)


def layer_ratios(rows, path):
    fig, ax = figure(5.5, 3.0)
    kinds = [k for k, _ in rows]
    vals = [v * 100 for _, v in rows]
    ax.plot(range(len(vals)), vals, marker="o")
    ax.set_xticks(range(len(vals)))
    ax.set_xticklabels(kinds, rotation=45, ha="right")
    ax.set_ylabel("1st PC information ratio (%)")
    return save(fig, path)


def ssn_difference(pc_unmask, pc_mask, space, path):
    fig, axes = figure(8.0, 3.0, ncols=2)
    x = np.arange(len(pc_unmask))
    axes[0].plot(x, pc_unmask, lw=0.8, label="unmasked")
    axes[0].plot(x, pc_mask, lw=0.8, label="masked")
    axes[0].set_xlabel("feature")
    axes[0].set_ylabel("1st PC score")
    axes[0].legend(frameon=False)
    d = np.asarray(pc_unmask) - np.asarray(pc_mask)
    axes[1].bar(x, d, color="0.6")
    axes[1].bar(space.indices, space.weights, color="C3")
    for i, w in zip(space.indices, space.weights):
        axes[1].annotate(str(i), (i, w), ha="center", va="bottom" if w >= 0 else "top", fontsize=7)
    axes[1].set_xlabel("feature")
    axes[1].set_ylabel("unmasked - masked")
    fig.suptitle(f"{space.class_name} {space.concept}")
    return save(fig, path)


def activation_fit(values, fit, path, title=""):
    """Histogram with the fitted normal density, and the normal q-q plot."""
    values = np.asarray(values)
    fig, axes = figure(8.0, 3.0, ncols=2)
    axes[0].hist(values, bins=30, density=True, color="0.75")
    grid = np.linspace(values.min(), values.max(), 200)
    axes[0].plot(grid, stats.norm.pdf(grid, fit.mu, fit.sigma), color="C3")
    axes[0].set_xlabel("$A_s$")
    axes[0].set_ylabel("density")
    (osm, osr), (slope, icpt, r) = stats.probplot(values, dist="norm")
    axes[1].plot(osm, osr, ".", ms=3)
    axes[1].plot(osm, slope * osm + icpt, color="C3")
    axes[1].set_xlabel("normal quantile")
    axes[1].set_ylabel("ordered $A_s$")
    axes[1].set_title(f"$R^2$ = {r * r:.3f}")
    fig.suptitle(title)
    return save(fig, path)


def radar_chart(radar, path, title=""):
    labels = [f"{k}\n{c}" for k in radar.classes for c in radar.concepts]
    vals = [radar.values[(c, k)] for k in radar.classes for c in radar.concepts]
    ang = np.linspace(0, 2 * np.pi, len(vals), endpoint=False)
    with plt.rc_context(STYLE):
        fig = plt.figure(figsize=(3.6, 3.6))
        ax = fig.add_subplot(projection="polar")
    ax.plot(np.r_[ang, ang[:1]], np.r_[vals, vals[:1]], color="C3")
    ax.fill(np.r_[ang, ang[:1]], np.r_[vals, vals[:1]], color="C3", alpha=0.25)
    ax.set_xticks(ang)
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylim(0, max(1.0, max(vals)))
    ax.set_title(title, fontsize=8)
    return save(fig, path)


def ga_trace(result, path):
    fig, ax = figure()
    ax.plot(result.elite_trace, label="elite")
    ax.plot(result.mean_trace, label="population mean")
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness")
    ax.legend(frameon=False)
    return save(fig, path)


def image_grid(images, path, ncols=8, titles=None):
    """Tile ``(3, H, W)`` images (clamped to ``[0, 1]``) into one PNG."""
    n = len(images)
    nrows = max(1, int(np.ceil(n / ncols)))
    ncols = min(ncols, max(n, 1))
    fig, axes = figure(1.2 * ncols, 1.3 * nrows, nrows=nrows, ncols=ncols, squeeze=False)
    for i, ax in enumerate(axes.ravel()):
        ax.axis("off")
        if i < n:
            ax.imshow(to_uint8(images[i]), interpolation="nearest")
            if titles is not None:
                ax.set_title(titles[i], fontsize=6)
    return save(fig, path)


def segment_overlay(image, labels, path):
    """Image with superpixel boundaries and ids, for writing mask specs by hand."""
    rgb = to_uint8(image).astype(np.float64) / 255
    edge = np.zeros(labels.shape, dtype=bool)
    edge[:, 1:] |= labels[:, 1:] != labels[:, :-1]
    edge[1:, :] |= labels[1:, :] != labels[:-1, :]
    rgb[edge] = (1.0, 0.0, 0.0)
    fig, ax = figure(5, 5)
    ax.imshow(rgb, interpolation="nearest")
    ax.axis("off")
    for k in np.unique(labels):
        yy, xx = np.nonzero(labels == k)
        ax.annotate(str(k), (xx.mean(), yy.mean()), ha="center", va="center", fontsize=7, color="yellow")
    return save(fig, path)


def flag_rates(summary, path):
    fig, ax = figure(3.5, 3.0)
    names = ["natural", "attacked"]
    vals = [summary["flag_rate_natural"], summary["flag_rate_attacked"]]
    ax.bar(names, vals, color=["C0", "C3"])
    ax.set_ylim(0, 1)
    ax.set_ylabel("flagged fraction")
    return save(fig, path)
