"""Tiny float64 inference engine for feed-forward / convolutional classifiers.

Only five layer kinds exist: ``dense``, ``conv2d`` (stride 1, zero padding,
cross-correlation), ``relu``, ``maxpool2x2`` and ``flatten``. A dense layer
accepts any input whose size equals its fan-in and flattens it implicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "LAYER_KINDS",
    "ModelFormatError",
    "ShapeError",
    "Layer",
    "Network",
    "ForwardTrace",
    "load_network",
    "save_network",
    "network_from_dict",
    "network_to_dict",
    "forward",
    "apply_layer",
    "conv2d",
    "random_network",
]

LAYER_KINDS = ("dense", "conv2d", "relu", "maxpool2x2", "flatten")


class ModelFormatError(ValueError):
    """The model document cannot be parsed into layers."""


class ShapeError(ValueError):
    """Incompatible tensor shapes; ``layer`` is the offending layer index."""

    def __init__(self, message, layer=None):
        super().__init__(message if layer is None else f"layer {layer}: {message}")
        self.layer = layer


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Layer:
    kind: str
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None
    padding: int = 0

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ModelFormatError(f"unknown layer kind {self.kind!r}")
        weighted = self.kind in ("dense", "conv2d")
        if weighted != (self.weights is not None) or weighted != (self.bias is not None):
            raise ModelFormatError(
                f"{self.kind} layers {'need' if weighted else 'take no'} weights and bias"
            )
        if weighted:
            w, b = _frozen(self.weights), _frozen(self.bias)
            ndim = 2 if self.kind == "dense" else 4
            if w.ndim != ndim:
                raise ModelFormatError(f"{self.kind} weights must be {ndim}-D, got {w.ndim}-D")
            if b.shape != (w.shape[0],):
                raise ModelFormatError(
                    f"bias length {b.shape} does not match {w.shape[0]} outputs"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ModelFormatError("non-finite weights")
            object.__setattr__(self, "weights", w)
            object.__setattr__(self, "bias", b)
        if int(self.padding) != self.padding or self.padding < 0:
            raise ModelFormatError("padding must be a non-negative integer")
        if self.padding and self.kind != "conv2d":
            raise ModelFormatError("padding only applies to conv2d")
        object.__setattr__(self, "padding", int(self.padding))

    def output_shape(self, shape):
        """Shape produced from an input of ``shape``; raises ShapeError."""
        if self.kind == "dense":
            n = int(np.prod(shape))
            if n != self.weights.shape[1]:
                raise ShapeError(f"dense expects {self.weights.shape[1]} inputs, got {n}")
            return (self.weights.shape[0],)
        if self.kind == "conv2d":
            if len(shape) != 3:
                raise ShapeError(f"conv2d expects (c, h, w) input, got {shape}")
            c, h, w = shape
            oc, ic, kh, kw = self.weights.shape
            if c != ic:
                raise ShapeError(f"conv2d expects {ic} input channels, got {c}")
            oh, ow = h + 2 * self.padding - kh + 1, w + 2 * self.padding - kw + 1
            if oh < 1 or ow < 1:
                raise ShapeError(f"conv2d kernel {kh}x{kw} larger than padded input")
            return (oc, oh, ow)
        if self.kind == "maxpool2x2":
            if len(shape) != 3 or shape[1] % 2 or shape[2] % 2:
                raise ShapeError(f"maxpool2x2 needs (c, h, w) with even h, w; got {shape}")
            return (shape[0], shape[1] // 2, shape[2] // 2)
        if self.kind == "flatten":
            return (int(np.prod(shape)),)
        return tuple(shape)


@dataclass(frozen=True)
class Network:
    layers: tuple
    input_shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        if not self.layers:
            raise ModelFormatError("network needs at least one layer")
        if len(self.input_shape) not in (1, 3) or min(self.input_shape) < 1:
            raise ModelFormatError(f"bad input_shape {self.input_shape}")
        shapes = [self.input_shape]
        for i, layer in enumerate(self.layers):
            try:
                shapes.append(layer.output_shape(shapes[-1]))
            except ShapeError as e:
                raise ShapeError(str(e), layer=i) from None
        object.__setattr__(self, "shapes", tuple(shapes))

    @property
    def output_shape(self):
        return self.shapes[-1]


@dataclass(frozen=True)
class ForwardTrace:
    """``inputs[i]`` is the activation fed into layer ``i``."""

    inputs: tuple
    output: np.ndarray


# --------------------------------------------------------------------------
# Model file


def network_from_dict(doc) -> Network:
    try:
        input_shape = doc["input_shape"]
        specs = doc["layers"]
    except (KeyError, TypeError):
        raise ModelFormatError("model needs 'input_shape' and 'layers'") from None
    layers = []
    for i, spec in enumerate(specs):
        try:
            kind = spec["kind"]
        except (KeyError, TypeError):
            raise ModelFormatError(f"layer {i} has no 'kind'") from None
        try:
            if kind in ("dense", "conv2d"):
                layer = Layer(
                    kind,
                    np.asarray(spec["weights"], dtype=np.float64),
                    np.asarray(spec["bias"], dtype=np.float64),
                    spec.get("padding", 0),
                )
            elif "weights" in spec or "bias" in spec:
                raise ModelFormatError(f"{kind} layers take no weights and bias")
            else:
                layer = Layer(kind)
        except KeyError as e:
            raise ModelFormatError(f"layer {i}: missing field {e}") from None
        except (ValueError, TypeError) as e:
            if isinstance(e, ModelFormatError):
                raise ModelFormatError(f"layer {i}: {e}") from None
            raise ModelFormatError(f"layer {i}: ragged or non-numeric weights") from None
        layers.append(layer)
    try:
        shape = tuple(int(d) for d in input_shape)
    except (TypeError, ValueError):
        raise ModelFormatError(f"bad input_shape {input_shape!r}") from None
    return Network(layers, shape)


def network_to_dict(net: Network) -> dict:
    layers = []
    for layer in net.layers:
        spec = {"kind": layer.kind}
        if layer.weights is not None:
            spec["weights"] = layer.weights.tolist()
            spec["bias"] = layer.bias.tolist()
        if layer.kind == "conv2d":
            spec["padding"] = layer.padding
        layers.append(spec)
    return {"input_shape": list(net.input_shape), "layers": layers}


def load_network(path) -> Network:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"invalid JSON: {e}") from None
    return network_from_dict(doc)


def save_network(net: Network, path) -> None:
    with open(path, "w") as f:
        json.dump(network_to_dict(net), f)


# --------------------------------------------------------------------------
# Inference


def conv2d(x, weights, bias, padding=0):
    """Stride-1 cross-correlation of ``x`` (c, h, w) with ``weights`` (o, c, kh, kw)."""
    kh, kw = weights.shape[2:]
    if padding:
        x = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))  # c, oh, ow, kh, kw
    return np.einsum("chwij,ocij->ohw", windows, weights) + bias[:, None, None]


def _maxpool(x):
    c, h, w = x.shape
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def apply_layer(layer: Layer, x):
    if layer.kind == "dense":
        return layer.weights @ x.reshape(-1) + layer.bias
    if layer.kind == "conv2d":
        return conv2d(x, layer.weights, layer.bias, layer.padding)
    if layer.kind == "relu":
        return np.maximum(x, 0.0)
    if layer.kind == "maxpool2x2":
        return _maxpool(x)
    return x.reshape(-1)


def forward(net: Network, x) -> ForwardTrace:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != net.input_shape:
        raise ShapeError(f"input shape {x.shape} != network input {net.input_shape}")
    inputs = []
    for layer in net.layers:
        inputs.append(x)
        x = apply_layer(layer, x)
    return ForwardTrace(tuple(inputs), x)


def random_network(input_shape, n_classes=10, channels=(4, 4), seed=0,
                   target_size=16, positive=False, bias_scale=0.0) -> Network:
    """Small conv net on ``input_shape`` with He-scaled random weights.

    Each entry of ``channels`` adds conv3x3(pad 1) + relu + maxpool; further
    pooling shrinks the map to at most ``target_size`` before the dense head.
    """
    rng = np.random.default_rng(seed)
    c, h, w = input_shape
    layers = []
    for oc in channels:
        std = np.sqrt(2.0 / (c * 9))
        wts = rng.normal(0.0, std, size=(oc, c, 3, 3))
        if positive:
            wts = np.abs(wts)
        layers += [
            Layer("conv2d", wts, bias_scale * rng.normal(size=oc), padding=1),
            Layer("relu"),
        ]
        if h % 2 == 0 and w % 2 == 0:
            layers.append(Layer("maxpool2x2"))
            h, w = h // 2, w // 2
        c = oc
    while max(h, w) > target_size and h % 2 == 0 and w % 2 == 0:
        layers.append(Layer("maxpool2x2"))
        h, w = h // 2, w // 2
    n = c * h * w
    wts = rng.normal(0.0, np.sqrt(1.0 / n), size=(n_classes, n))
    if positive:
        wts = np.abs(wts)
    layers += [Layer("flatten"), Layer("dense", wts, bias_scale * rng.normal(size=n_classes))]
    return Network(layers, input_shape)
