"""Relevance map -> binary RoI mask -> 8x8 block quality map.

A pixel is RoI when its absolute relevance reaches the mean absolute
relevance of the map. Masks are boolean ``(height, width)`` arrays; block
maps are boolean ``(ceil(h/8), ceil(w/8))`` arrays where ``True`` means the
block keeps the high-quality quantization.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .imagecore import Image, parse_pnm, pnm_bytes

__all__ = [
    "BLOCK",
    "spatial_relevance",
    "threshold_mask",
    "dilate",
    "block_project",
    "expand_blocks",
    "mask_to_image",
    "mask_from_image",
    "read_mask",
    "write_mask",
]

BLOCK = 8


def spatial_relevance(rel):
    """Collapse a ``(c, h, w)`` relevance map to ``(h, w)`` by summing channels."""
    rel = np.asarray(rel, dtype=np.float64)
    if rel.ndim == 3:
        rel = rel.sum(axis=0)
    if rel.ndim != 2:
        raise ValueError(f"relevance must be (h, w) or (c, h, w), got {rel.shape}")
    return rel


def threshold_mask(rel) -> np.ndarray:
    """``|r| >= mean(|r|)`` per pixel, after summing any channel axis."""
    mag = np.abs(spatial_relevance(rel))
    if not np.all(np.isfinite(mag)):
        raise ValueError("relevance contains non-finite values")
    mean = math.fsum(mag.ravel().tolist()) / mag.size
    # rounding can push the mean above the max of a constant map
    return mag >= min(mean, float(mag.max()))


def dilate(mask, radius=1, iterations=2) -> np.ndarray:
    """Binary dilation by a ``(2r+1)``-square, repeated ``iterations`` times.

    Pixels outside the image count as background.
    """
    mask = np.asarray(mask, dtype=bool)
    if radius < 0 or iterations < 0:
        raise ValueError("radius and iterations must be >= 0")
    if radius == 0 or iterations == 0:
        return mask.copy()
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    return ndimage.binary_dilation(mask, structure=structure, iterations=iterations)


def block_project(mask) -> np.ndarray:
    """Flag every 8x8 block (edge blocks included) holding at least one RoI pixel."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    bh, bw = -(-h // BLOCK), -(-w // BLOCK)
    padded = np.zeros((bh * BLOCK, bw * BLOCK), dtype=bool)
    padded[:h, :w] = mask
    return padded.reshape(bh, BLOCK, bw, BLOCK).any(axis=(1, 3))


def expand_blocks(blocks, height, width) -> np.ndarray:
    """Pixel mask covering exactly the flagged blocks, cropped to the image."""
    blocks = np.asarray(blocks, dtype=bool)
    full = np.repeat(np.repeat(blocks, BLOCK, axis=0), BLOCK, axis=1)
    return full[:height, :width]


def mask_to_image(mask) -> Image:
    return Image(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def mask_from_image(img: Image) -> np.ndarray:
    """Non-zero samples of a grayscale mask image are RoI."""
    if img.channels != 1:
        raise ValueError("mask image must be grayscale")
    return img.pixels[:, :, 0] != 0


def write_mask(mask, path) -> None:
    with open(path, "wb") as f:
        f.write(pnm_bytes(mask_to_image(mask)))


def read_mask(path) -> np.ndarray:
    with open(path, "rb") as f:
        return mask_from_image(parse_pnm(f.read()))
