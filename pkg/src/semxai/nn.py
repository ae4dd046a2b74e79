"""Small NumPy convolutional network: conv/ReLU/max-pool blocks, global average
pooling, a dense classifier, Adam training and input-space gradients.

Weights are stored as float32.  Every layer computes in the dtype of its
input, so passing float64 images gives an exact double-precision evaluation
of the same network (used by the finite-difference checks).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EmptyDataset, InvalidParam, IoError, ShapeMismatch
from .io import atomic_write_bytes
from .regularizers import tv_regularizer

CHECKPOINT_MAGIC = b"SEMXAI-CKPT\n"
CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------- layers


class Conv2D:
    """Stride-1, same-padded 2-D convolution with an odd square kernel."""

    kind = "conv"

    def __init__(self, in_channels, out_channels, kernel=3):
        if kernel % 2 != 1:
            raise InvalidParam("kernel size must be odd for same padding")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.params = {
            "weight": np.zeros((out_channels, in_channels, kernel, kernel), np.float32),
            "bias": np.zeros(out_channels, np.float32),
        }

    def describe(self):
        return {"type": self.kind, "in": self.in_channels, "out": self.out_channels, "kernel": self.kernel}

    def init(self, rng):
        fan_in = self.in_channels * self.kernel ** 2
        bound = np.sqrt(6.0 / fan_in)
        shape = self.params["weight"].shape
        self.params["weight"] = rng.uniform(-bound, bound, shape).astype(np.float32)
        self.params["bias"] = np.zeros(self.out_channels, np.float32)

    def output_shape(self, shape):
        c, h, w = shape
        if c != self.in_channels:
            raise ShapeMismatch(f"conv expects {self.in_channels} channels, got {c}")
        return (self.out_channels, h, w)

    def forward(self, x):
        w = self.params["weight"].astype(x.dtype, copy=False)
        b = self.params["bias"].astype(x.dtype, copy=False)
        p = self.kernel // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        win = sliding_window_view(xp, (self.kernel, self.kernel), axis=(2, 3))
        # win: (N, C, H, W, k, k)
        y = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))  # (N, H, W, F)
        y += b
        return np.ascontiguousarray(y.transpose(0, 3, 1, 2)), win

    def backward(self, grad, win):
        w = self.params["weight"].astype(grad.dtype, copy=False)
        n, _, h, wd = grad.shape
        k = self.kernel
        p = k // 2
        dw = np.tensordot(grad, win, axes=([0, 2, 3], [0, 2, 3]))  # (F, C, k, k)
        db = grad.sum(axis=(0, 2, 3))
        cols = np.tensordot(grad, w, axes=([1], [0]))  # (N, H, W, C, k, k)
        dxp = np.zeros((n, self.in_channels, h + 2 * p, wd + 2 * p), grad.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + h, j:j + wd] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, p:p + h, p:p + wd], {"weight": dw, "bias": db}


class ReLU:
    kind = "relu"

    def __init__(self):
        self.params = {}

    def describe(self):
        return {"type": self.kind}

    def init(self, rng):
        pass

    def output_shape(self, shape):
        return shape

    def forward(self, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, grad, mask):
        return grad * mask, {}


class MaxPool2D:
    """Non-overlapping max pooling; trailing rows/columns that do not fill a
    window are dropped."""

    kind = "maxpool"

    def __init__(self, size=2):
        self.size = size
        self.params = {}

    def describe(self):
        return {"type": self.kind, "size": self.size}

    def init(self, rng):
        pass

    def output_shape(self, shape):
        c, h, w = shape
        if h < self.size or w < self.size:
            raise ShapeMismatch(f"max-pool window {self.size} larger than map {h}x{w}")
        return (c, h // self.size, w // self.size)

    def forward(self, x):
        s = self.size
        n, c, h, w = x.shape
        ho, wo = h // s, w // s
        xc = x[:, :, :ho * s, :wo * s]
        blocks = xc.reshape(n, c, ho, s, wo, s).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho, wo, s * s)
        idx = blocks.argmax(axis=-1)
        y = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
        return y, (x.shape, idx)

    def backward(self, grad, cache):
        shape, idx = cache
        s = self.size
        n, c, h, w = shape
        ho, wo = h // s, w // s
        onehot = np.zeros((n, c, ho, wo, s * s), grad.dtype)
        np.put_along_axis(onehot, idx[..., None], grad[..., None], axis=-1)
        dx = np.zeros(shape, grad.dtype)
        dx[:, :, :ho * s, :wo * s] = (
            onehot.reshape(n, c, ho, wo, s, s).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho * s, wo * s)
        )
        return dx, {}


class GlobalAvgPool:
    kind = "gap"

    def __init__(self):
        self.params = {}

    def describe(self):
        return {"type": self.kind}

    def init(self, rng):
        pass

    def output_shape(self, shape):
        return (shape[0],)

    def forward(self, x):
        return x.mean(axis=(2, 3)), x.shape

    def backward(self, grad, shape):
        h, w = shape[2], shape[3]
        return np.broadcast_to(grad[:, :, None, None] / (h * w), shape).copy(), {}


class Dense:
    kind = "dense"

    def __init__(self, in_features, out_features):
        self.in_features = in_features
        self.out_features = out_features
        self.params = {
            "weight": np.zeros((out_features, in_features), np.float32),
            "bias": np.zeros(out_features, np.float32),
        }

    def describe(self):
        return {"type": self.kind, "in": self.in_features, "out": self.out_features}

    def init(self, rng):
        bound = np.sqrt(6.0 / self.in_features)
        shape = self.params["weight"].shape
        self.params["weight"] = rng.uniform(-bound, bound, shape).astype(np.float32)
        self.params["bias"] = np.zeros(self.out_features, np.float32)

    def output_shape(self, shape):
        if shape != (self.in_features,):
            raise ShapeMismatch(f"dense expects ({self.in_features},), got {shape}")
        return (self.out_features,)

    def forward(self, x):
        w = self.params["weight"].astype(x.dtype, copy=False)
        b = self.params["bias"].astype(x.dtype, copy=False)
        return x @ w.T + b, x

    def backward(self, grad, x):
        w = self.params["weight"].astype(grad.dtype, copy=False)
        return grad @ w, {"weight": grad.T @ x, "bias": grad.sum(axis=0)}


LAYER_TYPES = {
    "conv": lambda d: Conv2D(d["in"], d["out"], d.get("kernel", 3)),
    "relu": lambda d: ReLU(),
    "maxpool": lambda d: MaxPool2D(d.get("size", 2)),
    "gap": lambda d: GlobalAvgPool(),
    "dense": lambda d: Dense(d["in"], d["out"]),
}


def desk_architecture(in_channels=3, widths=(16, 32, 64), n_classes=2, kernel=3):
    """Conv blocks (conv -> ReLU -> 2x2 max-pool) followed by GAP and a dense head."""
    arch = []
    c = in_channels
    for w in widths:
        arch += [{"type": "conv", "in": c, "out": w, "kernel": kernel}, {"type": "relu"}, {"type": "maxpool", "size": 2}]
        c = w
    arch += [{"type": "gap"}, {"type": "dense", "in": c, "out": n_classes}]
    return arch


# ---------------------------------------------------------------- model


@dataclass
class TrainConfig:
    epochs: int = 3
    batch_size: int = 16
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise InvalidParam("epochs must be >= 0")
        if self.batch_size < 1:
            raise InvalidParam("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise InvalidParam("learning_rate must be > 0")


@dataclass
class CnnModel:
    """Feature stack ending in exactly one GAP layer, then an optional dense head.

    ``mean``/``std`` are the per-channel standardisation statistics applied to
    raw ``[0, 1]`` images before the first layer.
    """

    layers: list
    input_shape: tuple
    mean: np.ndarray
    std: np.ndarray
    seed: int = 0
    classes: tuple = ("class0", "class1")
    _gap: int = field(init=False, repr=False)

    def __post_init__(self):
        self.input_shape = tuple(int(v) for v in self.input_shape)
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise InvalidParam(f"input shape must be (C, H, W) with all dims >= 1, got {self.input_shape}")
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        if self.mean.shape != (self.input_shape[0],) or self.std.shape != (self.input_shape[0],):
            raise ShapeMismatch("standardisation statistics must have one entry per input channel")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.std)) and np.all(self.std > 0)):
            raise InvalidParam("standardisation mean/std must be finite with std > 0")
        kinds = [layer.kind for layer in self.layers]
        if kinds.count("gap") != 1:
            raise InvalidParam("model needs exactly one global-average-pool layer")
        self._gap = kinds.index("gap")
        if any(k != "dense" for k in kinds[self._gap + 1:]):
            raise InvalidParam("only dense layers may follow global average pooling")
        if any(k == "dense" for k in kinds[:self._gap]):
            raise InvalidParam("dense layers must come after global average pooling")
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
        self.classes = tuple(self.classes)

    @property
    def architecture(self):
        return [layer.describe() for layer in self.layers]

    @property
    def feature_width(self):
        shape = self.input_shape
        for layer in self.layers[: self._gap + 1]:
            shape = layer.output_shape(shape)
        return shape[0]

    @property
    def n_classes(self):
        return self.layers[-1].out_features if self._gap < len(self.layers) - 1 else self.feature_width

    @property
    def feature_layers(self):
        return self.layers[: self._gap + 1]

    @property
    def head_layers(self):
        return self.layers[self._gap + 1:]

    def standardize(self, images):
        shape = (-1, 1, 1)
        return (np.asarray(images) - self.mean.reshape(shape)) / self.std.reshape(shape)

    def destandardize(self, z):
        shape = (-1, 1, 1)
        return np.asarray(z) * self.std.reshape(shape) + self.mean.reshape(shape)

    def copy(self):
        clone = build_model(self.architecture, self.input_shape, self.mean, self.std, seed=self.seed, classes=self.classes)
        for src, dst in zip(self.layers, clone.layers):
            dst.params = {k: v.copy() for k, v in src.params.items()}
        return clone


def build_model(arch, input_shape, mean=None, std=None, seed=0, classes=None, init=True):
    """Instantiate layers from an architecture descriptor with seeded fan-in
    uniform initialisation."""
    layers = []
    for d in arch:
        if d["type"] not in LAYER_TYPES:
            raise InvalidParam(f"unknown layer type {d['type']!r}")
        layers.append(LAYER_TYPES[d["type"]](d))
    c = input_shape[0]
    mean = np.zeros(c) if mean is None else mean
    std = np.ones(c) if std is None else std
    if classes is None:
        n_out = layers[-1].out_features if layers and layers[-1].kind == "dense" else 2
        classes = tuple(f"class{i}" for i in range(n_out))
    model = CnnModel(layers, input_shape, mean, std, seed=seed, classes=classes)
    if init:
        rng = np.random.default_rng(seed)
        for layer in layers:
            layer.init(rng)
    return model


# ---------------------------------------------------------------- forward / backward


def _as_batch(model, images):
    x = np.asarray(images)
    single = x.ndim == 3
    if single:
        x = x[None]
    if x.ndim != 4 or tuple(x.shape[1:]) != model.input_shape:
        raise ShapeMismatch(f"expected image shape {model.input_shape}, got {tuple(np.shape(images))}")
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    return x, single


def _run(layers, x, keep=False):
    caches = []
    for layer in layers:
        x, cache = layer.forward(x)
        if keep:
            caches.append(cache)
    return x, caches


def _backprop(layers, caches, grad):
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        grad, grads[i] = layers[i].backward(grad, caches[i])
    return grad, grads


def standardized_features(model, z, batch=256):
    """GAP features for inputs already in standardised units."""
    x, single = _as_batch(model, z)
    out = [_run(model.feature_layers, x[i:i + batch])[0] for i in range(0, len(x), batch)]
    feats = np.concatenate(out, axis=0)
    return feats[0] if single else feats


def forward_features(model, images, batch=256):
    """Length-C GAP activations for one ``(C, H, W)`` image or a batch."""
    x, single = _as_batch(model, images)
    feats = standardized_features(model, model.standardize(x), batch=batch)
    return feats[0] if single else feats


def forward_maps(model, images):
    """Intermediate activations after every layer up to and including GAP."""
    x, _ = _as_batch(model, images)
    x = model.standardize(x)
    maps = []
    for layer in model.feature_layers:
        x, _ = layer.forward(x)
        maps.append(x)
    return maps


def dense_logits(model, features):
    x = np.asarray(features)
    single = x.ndim == 1
    out, _ = _run(model.head_layers, x[None] if single else x)
    return out[0] if single else out


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict(model, images, batch=256):
    """Class probabilities, softmax over the dense output."""
    return softmax(dense_logits(model, forward_features(model, images, batch=batch)))


def objective_gradient(model, z, target, lam, beta):
    """Value and input gradient of ``||phi(z) - target||^2 + lam * TV_beta(z)``.

    ``z`` is a single image in the network's standardised input space.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (model.feature_width,):
        raise ShapeMismatch(f"target must have length {model.feature_width}, got {target.shape}")
    if lam < 0 or not beta > 0:
        raise InvalidParam("need lam >= 0 and beta > 0")
    x, single = _as_batch(model, z)
    if not single:
        raise ShapeMismatch("objective_gradient takes a single image")
    feats, caches = _run(model.feature_layers, x, keep=True)
    resid = feats[0] - target.astype(x.dtype)
    value = float(resid @ resid)
    grad, _ = _backprop(model.feature_layers, caches, (2.0 * resid)[None])
    grad = grad[0]
    if lam > 0:
        tv, tv_grad = tv_regularizer(x[0], beta)
        value += lam * tv
        grad = grad + lam * tv_grad
    return value, grad


def class_loss_gradient(model, z, labels):
    """Mean cross-entropy and its gradient w.r.t. standardised inputs ``z``."""
    x, single = _as_batch(model, z)
    labels = np.atleast_1d(np.asarray(labels))
    logits, caches = _run(model.layers, x, keep=True)
    p = softmax(logits)
    n = len(x)
    loss = -np.log(np.clip(p[np.arange(n), labels], 1e-300, None)).mean()
    d = p.copy()
    d[np.arange(n), labels] -= 1.0
    grad, _ = _backprop(model.layers, caches, d / n)
    return float(loss), grad[0] if single else grad


# ---------------------------------------------------------------- training


def channel_stats(images):
    x = np.asarray(images, dtype=np.float64)
    mean = x.mean(axis=(0, 2, 3))
    std = x.std(axis=(0, 2, 3))
    std[std == 0] = 1.0
    return mean, std


def train(images, labels, config=None, arch=None, classes=None, model=None, on_epoch=None):
    """Fit the network with Adam on mini-batches of softmax cross-entropy.

    A fresh model is built from ``arch`` (default: the desk architecture) with
    standardisation statistics taken from ``images``; pass ``model`` to keep
    training an existing one.  Returns the trained model and the per-batch
    loss trace.
    """
    config = config or TrainConfig()
    images = np.asarray(images)
    labels = np.asarray(labels, dtype=np.int64)
    if images.size == 0 or len(images) == 0:
        raise EmptyDataset("training set is empty")
    if images.ndim != 4:
        raise ShapeMismatch("images must be stacked as (N, C, H, W)")
    if len(labels) != len(images):
        raise ShapeMismatch("one label per image required")
    if model is None:
        n_classes = int(labels.max()) + 1 if classes is None else len(classes)
        arch = arch or desk_architecture(images.shape[1], n_classes=max(n_classes, 2))
        mean, std = channel_stats(images)
        model = build_model(arch, images.shape[1:], mean, std, seed=config.seed, classes=classes)
    else:
        model = model.copy()
    if tuple(images.shape[1:]) != model.input_shape:
        raise ShapeMismatch(f"images have shape {images.shape[1:]}, model expects {model.input_shape}")

    rng = np.random.default_rng(config.seed + 1)
    z_all = model.standardize(images).astype(np.float32)
    params = [(layer, name) for layer in model.layers for name in layer.params]
    m = {key: np.zeros_like(key[0].params[key[1]]) for key in params}
    v = {key: np.zeros_like(key[0].params[key[1]]) for key in params}
    step = 0
    losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(images))
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            x, y = z_all[idx], labels[idx]
            logits, caches = _run(model.layers, x, keep=True)
            p = softmax(logits.astype(np.float64))
            n = len(idx)
            losses.append(float(-np.log(np.clip(p[np.arange(n), y], 1e-300, None)).mean()))
            d = p
            d[np.arange(n), y] -= 1.0
            _, grads = _backprop(model.layers, caches, (d / n).astype(np.float32))
            step += 1
            b1, b2 = config.beta1, config.beta2
            lr_t = config.learning_rate * np.sqrt(1 - b2 ** step) / (1 - b1 ** step)
            for layer, g in zip(model.layers, grads):
                for name, gv in (g or {}).items():
                    key = (layer, name)
                    m[key] = b1 * m[key] + (1 - b1) * gv
                    v[key] = b2 * v[key] + (1 - b2) * gv * gv
                    upd = lr_t * m[key] / (np.sqrt(v[key]) + config.eps)
                    layer.params[name] = (layer.params[name] - upd).astype(np.float32)
        if on_epoch is not None:
            on_epoch(epoch, losses)
    return model, np.asarray(losses)


def accuracy(model, images, labels):
    probs = predict(model, images)
    return float(np.mean(probs.argmax(axis=1) == np.asarray(labels)))


# ---------------------------------------------------------------- checkpoint


def checkpoint_bytes(model):
    blobs = []
    layout = []
    for i, layer in enumerate(model.layers):
        for name in sorted(layer.params):
            arr = np.ascontiguousarray(layer.params[name], dtype="<f4")
            layout.append({"layer": i, "name": name, "shape": list(arr.shape)})
            blobs.append(arr.tobytes())
    header = {
        "version": CHECKPOINT_VERSION,
        "architecture": model.architecture,
        "input_shape": list(model.input_shape),
        "mean": [float(v) for v in model.mean],
        "std": [float(v) for v in model.std],
        "seed": int(model.seed),
        "classes": list(model.classes),
        "blobs": layout,
    }
    text = json.dumps(header, sort_keys=True).encode()
    return CHECKPOINT_MAGIC + struct.pack("<Q", len(text)) + text + b"".join(blobs)


def save_checkpoint(model, path):
    """Text header (JSON) followed by little-endian float32 blobs in layer order."""
    atomic_write_bytes(path, checkpoint_bytes(model))


def load_checkpoint(path):
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(path, f"cannot read checkpoint ({exc.strerror or exc})") from exc
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise IoError(path, "not a checkpoint file")
    off = len(CHECKPOINT_MAGIC)
    if len(raw) < off + 8:
        raise IoError(path, "truncated header")
    (hlen,) = struct.unpack("<Q", raw[off:off + 8])
    off += 8
    try:
        header = json.loads(raw[off:off + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IoError(path, f"corrupt header ({exc})") from exc
    off += hlen
    if header.get("version") != CHECKPOINT_VERSION:
        raise IoError(path, f"unsupported checkpoint version {header.get('version')}")
    model = build_model(
        header["architecture"], header["input_shape"], header["mean"], header["std"],
        seed=header["seed"], classes=header["classes"], init=False,
    )
    params = {}
    for entry in header["blobs"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        nbytes = 4 * count
        if off + nbytes > len(raw):
            raise IoError(path, "truncated weight data")
        params[(entry["layer"], entry["name"])] = (
            np.frombuffer(raw, dtype="<f4", count=count, offset=off).reshape(entry["shape"]).astype(np.float32)
        )
        off += nbytes
    if off != len(raw):
        raise IoError(path, "trailing bytes after weight data")
    for (i, name), arr in params.items():
        if arr.shape != model.layers[i].params[name].shape:
            raise IoError(path, f"layer {i} {name} has shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise IoError(path, f"layer {i} {name} has non-finite weights")
        model.layers[i].params[name] = arr
    return model
