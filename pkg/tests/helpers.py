"""Independent reference implementations used as test oracles."""

import math
from fractions import Fraction

import numpy as np

from rdic.nn import Layer, Network


def lrp_dense_oracle(a, w, b, r_upper, eps):
    """Epsilon rule written out with explicit loops (sign(0) = +1)."""
    n_out, n_in = w.shape
    out = [0.0] * n_in
    for j in range(n_out):
        s = sum(a[i] * w[j, i] for i in range(n_in)) + b[j]
        denom = s + eps * (1.0 if s >= 0 else -1.0)
        for i in range(n_in):
            out[i] += a[i] * w[j, i] / denom * r_upper[j]
    return np.array(out)


def unrolled_conv(layer: Layer, in_shape):
    """Dense (weights, bias) equivalent of a stride-1 zero-padded conv layer."""
    c, h, wd = in_shape
    w = layer.weights
    oc, _, kh, kw = w.shape
    p = layer.padding
    oh, ow = h + 2 * p - kh + 1, wd + 2 * p - kw + 1
    mat = np.zeros((oc * oh * ow, c * h * wd))
    for o in range(oc):
        for i in range(oh):
            for j in range(ow):
                row = (o * oh + i) * ow + j
                for ci in range(c):
                    for y in range(h):
                        for x in range(wd):
                            di, dj = y - i + p, x - j + p
                            if 0 <= di < kh and 0 <= dj < kw:
                                mat[row, (ci * h + y) * wd + x] = w[o, ci, di, dj]
    bias = np.repeat(layer.bias, oh * ow)
    return mat, bias


def random_positive_network(rng):
    """Bias-free, positive-weight network of <= 3 layers and <= 64 units per layer."""
    kind = rng.integers(5)
    pos = lambda *shape: rng.uniform(0.05, 1.0, size=shape)  # noqa: E731
    if kind == 0:
        n, m = rng.integers(1, 65, 2)
        return Network([Layer("dense", pos(m, n), np.zeros(m))], (int(n),))
    if kind == 1:
        n, k, m = rng.integers(1, 65, 3)
        return Network([Layer("dense", pos(k, n), np.zeros(k)), Layer("relu"),
                        Layer("dense", pos(m, k), np.zeros(m))], (int(n),))
    c, oc = rng.integers(1, 4, 2)
    h = w = 4
    conv = Layer("conv2d", pos(oc, c, 3, 3), np.zeros(oc), padding=int(rng.integers(0, 2)))
    net0 = Network([conv], (int(c), h, w))
    oc_, oh, ow = net0.output_shape
    if kind == 2:
        m = rng.integers(1, 11)
        return Network([conv, Layer("relu"), Layer("dense", pos(m, oc_ * oh * ow), np.zeros(m))],
                       (int(c), h, w))
    if kind == 3 and oh % 2 == 0 and ow % 2 == 0:
        m = rng.integers(1, 11)
        return Network([conv, Layer("maxpool2x2"),
                        Layer("dense", pos(m, oc_ * oh * ow // 4), np.zeros(m))], (int(c), h, w))
    conv2 = Layer("conv2d", pos(2, oc_, 1, 1), np.zeros(2))
    return Network([conv, Layer("relu"), conv2], (int(c), h, w))


def threshold_oracle(rel):
    """Mean-magnitude threshold in exact rational arithmetic."""
    mags = [[abs(Fraction(v)) for v in row] for row in np.asarray(rel).tolist()]
    flat = [v for row in mags for v in row]
    mean = sum(flat) / len(flat)
    return np.array([[v >= mean for v in row] for row in mags])


def dilate_oracle(mask, radius):
    """Minkowski sum of the set pixels with a (2r+1) square, clipped to the frame."""
    h, w = mask.shape
    out = np.zeros_like(mask, dtype=bool)
    for y, x in zip(*np.nonzero(mask)):
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                if 0 <= y + dy < h and 0 <= x + dx < w:
                    out[y + dy, x + dx] = True
    return out


_COS = [[math.cos((2 * x + 1) * u * math.pi / 16) for u in range(8)] for x in range(8)]
_C = [1 / math.sqrt(2)] + [1.0] * 7


def dct_oracle(s):
    """O(64^2) DCT-II straight from the definition, ``S[v, u]`` with row freq v."""
    s = np.asarray(s).tolist()
    out = np.zeros((8, 8))
    for v in range(8):
        for u in range(8):
            acc = 0.0
            for y in range(8):
                row, cy = s[y], _COS[y][v]
                for x in range(8):
                    acc += row[x] * _COS[x][u] * cy
            out[v, u] = 0.25 * _C[u] * _C[v] * acc
    return out


def idct_oracle(S):
    S = np.asarray(S).tolist()
    out = np.zeros((8, 8))
    for y in range(8):
        for x in range(8):
            acc = 0.0
            for v in range(8):
                row, cy = S[v], _COS[y][v] * _C[v]
                for u in range(8):
                    acc += _C[u] * row[u] * _COS[x][u] * cy
            out[y, x] = 0.25 * acc
    return out


def random_rect_mask(rng, shape, lo, hi):
    """Union of random rectangles with pixel coverage in [lo, hi]."""
    h, w = shape
    while True:
        m = np.zeros(shape, dtype=bool)
        while m.mean() < lo:
            y, x = rng.integers(0, h), rng.integers(0, w)
            bh, bw = rng.integers(h // 32 + 1, h // 5 + 2), rng.integers(w // 32 + 1, w // 5 + 2)
            m[y:y + bh, x:x + bw] = True
        if m.mean() <= hi:
            return m
