"""Epsilon layer-wise relevance propagation.

For a weighted layer with input activations ``a`` and weights ``w`` the
contribution of input ``i`` to output ``j`` is ``z_ij = a_i * w_ij``, and

    R_i = sum_j  z_ij / (s_j + eps * sign(s_j)) * R_j,
    s_j = sum_i' z_i'j + b_j,

with ``sign(0) = +1``. ReLU passes relevance through untouched and 2x2 max
pooling sends each window's relevance to its (first, row-major) maximum.
"""

from __future__ import annotations

import numpy as np

from .imagecore import Image, image_to_tensor
from .nn import Layer, Network, ShapeError, conv2d, forward

__all__ = [
    "DEFAULT_EPSILON",
    "DegenerateDenominatorError",
    "LrpError",
    "seed_relevance",
    "propagate_dense",
    "propagate_conv",
    "propagate_relu",
    "propagate_maxpool",
    "propagate",
    "relevance_of_image",
]

DEFAULT_EPSILON = 0.01


class DegenerateDenominatorError(ZeroDivisionError):
    """A zero stabilized denominator met non-zero upper relevance (only at eps=0)."""

    def __init__(self, unit, layer=None):
        where = "" if layer is None else f"layer {layer}: "
        super().__init__(f"{where}degenerate denominator at output unit {unit}")
        self.unit = unit
        self.layer = layer


class LrpError(RuntimeError):
    """Wraps a failure inside ``relevance_of_image`` with the layer index."""

    def __init__(self, layer, cause):
        super().__init__(f"layer {layer}: {cause}")
        self.layer = layer
        self.cause = cause


def seed_relevance(output, mode="argmax"):
    """Initial relevance over the network output.

    ``mode="argmax"`` keeps the winning logit's value and zeros the rest;
    any array-like is taken verbatim as the seed.
    """
    output = np.asarray(output, dtype=np.float64)
    if isinstance(mode, str):
        if mode != "argmax":
            raise ValueError(f"unknown seed mode {mode!r}")
        flat = output.reshape(-1)
        seed = np.zeros_like(flat)
        k = int(np.argmax(flat))
        seed[k] = flat[k]
        return seed.reshape(output.shape)
    seed = np.asarray(mode, dtype=np.float64)
    if seed.size != output.size:
        raise ValueError(f"explicit seed has {seed.size} entries, output has {output.size}")
    return seed.reshape(output.shape)


def _check_eps(eps):
    if not eps >= 0:
        raise ValueError(f"epsilon must be non-negative, got {eps}")


def _ratio(pre, relevance, eps):
    """``R_j / (s_j + eps * sign(s_j))`` with zero relevance over zero denominators."""
    denom = pre + eps * np.where(pre >= 0, 1.0, -1.0)
    zero = denom == 0
    if np.any(zero & (relevance != 0)):
        unit = np.unravel_index(np.argmax(zero & (relevance != 0)), denom.shape)
        raise DegenerateDenominatorError(unit if len(unit) > 1 else int(unit[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(zero, 0.0, relevance / np.where(zero, 1.0, denom))


def propagate_dense(acts, layer: Layer, relevance, eps=DEFAULT_EPSILON):
    """Redistribute ``relevance`` over the layer input; result has ``acts``' shape."""
    _check_eps(eps)
    a = np.asarray(acts, dtype=np.float64)
    r = np.asarray(relevance, dtype=np.float64).reshape(-1)
    w, b = layer.weights, layer.bias
    if a.size != w.shape[1] or r.size != w.shape[0]:
        raise ShapeError(f"dense {w.shape} vs activations {a.shape}, relevance {r.shape}")
    flat = a.reshape(-1)
    s = _ratio(w @ flat + b, r, eps)
    return (flat * (w.T @ s)).reshape(a.shape)


def propagate_conv(acts, layer: Layer, relevance, eps=DEFAULT_EPSILON):
    """Conv counterpart of :func:`propagate_dense` over the unrolled convolution."""
    _check_eps(eps)
    a = np.asarray(acts, dtype=np.float64)
    r = np.asarray(relevance, dtype=np.float64)
    w, p = layer.weights, layer.padding
    pre = conv2d(a, w, layer.bias, p)
    if r.shape != pre.shape:
        raise ShapeError(f"conv relevance shape {r.shape} != output shape {pre.shape}")
    s = _ratio(pre, r, eps)
    _, oh, ow = s.shape
    kh, kw = w.shape[2:]
    c, h, wd = a.shape
    back = np.zeros((c, h + 2 * p, wd + 2 * p))
    for i in range(kh):
        for j in range(kw):
            back[:, i : i + oh, j : j + ow] += np.einsum("oc,ohw->chw", w[:, :, i, j], s)
    return a * back[:, p : p + h, p : p + wd]


def propagate_relu(relevance):
    return relevance


def propagate_maxpool(acts, relevance):
    a = np.asarray(acts, dtype=np.float64)
    r = np.asarray(relevance, dtype=np.float64)
    if a.ndim != 3 or a.shape[1] % 2 or a.shape[2] % 2:
        raise ShapeError(f"maxpool2x2 expects (c, even h, even w), got {a.shape}")
    c, h, w = a.shape
    if r.shape != (c, h // 2, w // 2):
        raise ShapeError(f"maxpool relevance shape {r.shape} != {(c, h // 2, w // 2)}")
    win = a.reshape(c, h // 2, 2, w // 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h // 2, w // 2, 4)
    # argmax returns the first maximum, i.e. row-major tie-break inside the window
    onehot = np.arange(4) == np.argmax(win, axis=-1)[..., None]
    out = np.where(onehot, r[..., None], 0.0)
    return out.reshape(c, h // 2, w // 2, 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h, w)


def propagate(net: Network, trace, seed, eps=DEFAULT_EPSILON):
    """Run the backward relevance pass for an existing ``trace``."""
    r = np.asarray(seed, dtype=np.float64)
    for idx in range(len(net.layers) - 1, -1, -1):
        layer, a = net.layers[idx], trace.inputs[idx]
        try:
            if layer.kind == "dense":
                r = propagate_dense(a, layer, r, eps)
            elif layer.kind == "conv2d":
                r = propagate_conv(a, layer, r, eps)
            elif layer.kind == "relu":
                r = propagate_relu(r)
            elif layer.kind == "maxpool2x2":
                r = propagate_maxpool(a, r)
            else:
                r = r.reshape(a.shape)
        except DegenerateDenominatorError as e:
            raise DegenerateDenominatorError(e.unit, layer=idx) from None
        except ShapeError as e:
            raise LrpError(idx, e) from e
    return r


def relevance_of_image(net: Network, x, eps=DEFAULT_EPSILON, seed_mode="argmax"):
    """Per-input relevance, shaped like the network input.

    ``x`` is an :class:`Image` (converted to a ``(c, h, w)`` tensor in
    [0, 1]) or an array already in ``net.input_shape``.
    """
    if isinstance(x, Image):
        x = image_to_tensor(x)
        if len(net.input_shape) == 1:
            x = x.reshape(-1)
    trace = forward(net, x)
    return propagate(net, trace, seed_relevance(trace.output, seed_mode), eps)
