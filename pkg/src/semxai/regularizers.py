"""Total-variation image prior."""

import numpy as np

from .errors import InvalidParam


def tv_regularizer(image, beta):
    """Total variation ``sum_k sum_ij (dx^2 + dy^2)^(beta/2)`` and its gradient.

    ``dx`` pairs pixel (i, j) with (i, j+1) and ``dy`` with (i+1, j).  A
    difference whose neighbour lies outside the image is left out of the inner
    sum rather than padded.  Accepts ``(H, W)`` or ``(C, H, W)`` arrays.
    """
    if not beta > 0:
        raise InvalidParam("beta must be > 0")
    z = np.asarray(image)
    if not np.issubdtype(z.dtype, np.floating):
        z = z.astype(np.float64)
    squeeze = z.ndim == 2
    if squeeze:
        z = z[None]
    dx = z[:, :, 1:] - z[:, :, :-1]
    dy = z[:, 1:, :] - z[:, :-1, :]
    s = np.zeros_like(z)
    s[:, :, :-1] += dx * dx
    s[:, :-1, :] += dy * dy
    half = beta / 2.0
    value = float(np.sum(s ** half))

    # d/ds of s^(beta/2); at s == 0 the subgradient 0 is used when beta < 2
    if beta == 2:
        w = np.full_like(s, half)
    else:
        w = np.zeros_like(s)
        pos = s > 0
        w[pos] = half * s[pos] ** (half - 1.0)
    gx = 2.0 * w[:, :, :-1] * dx
    gy = 2.0 * w[:, :-1, :] * dy
    grad = np.zeros_like(z)
    grad[:, :, 1:] += gx
    grad[:, :, :-1] -= gx
    grad[:, 1:, :] += gy
    grad[:, :-1, :] -= gy
    return value, (grad[0] if squeeze else grad)
