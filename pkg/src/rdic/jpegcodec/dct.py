"""8x8 DCT-II / DCT-III and quantization.

The forward transform is separable: ``S = C @ s @ C.T`` with
``C[u, x] = c(u)/2 * cos((2x+1) u pi / 16)``, ``c(0) = 1/sqrt(2)``. Arrays
of blocks with trailing shape ``(8, 8)`` are transformed in one call.
"""

import numpy as np

_u = np.arange(8)[:, None]
_x = np.arange(8)[None, :]
DCT_MATRIX = np.where(_u == 0, 1 / np.sqrt(2), 1.0) / 2 * np.cos((2 * _x + 1) * _u * np.pi / 16)
del _u, _x


def fdct_block(samples):
    """Forward DCT of level-shifted samples; works on ``(..., 8, 8)`` stacks."""
    s = np.asarray(samples, dtype=np.float64)
    return DCT_MATRIX @ s @ DCT_MATRIX.T


def idct_block(coefs):
    """Inverse of :func:`fdct_block` (output is still level-shifted)."""
    c = np.asarray(coefs, dtype=np.float64)
    return DCT_MATRIX.T @ c @ DCT_MATRIX


def round_half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def quantize_block(coefs, table):
    """Divide by ``table`` and round half away from zero; returns int32."""
    return round_half_away(np.asarray(coefs) / table).astype(np.int32)


def dequantize_block(q, table):
    return np.asarray(q, dtype=np.int32) * table
