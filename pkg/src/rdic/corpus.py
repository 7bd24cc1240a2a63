"""Deterministic benchmark rasters: gradients, checkerboards, filtered noise,
a synthetic aerial-like scene and one natural photograph."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np
from scipy import ndimage

from .imagecore import Image, parse_pnm, write_pnm

__all__ = ["natural_photo", "synthetic_corpus", "write_corpus"]


def _u8(x):
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def _noise(rng, shape, sigma):
    n = ndimage.gaussian_filter(rng.normal(size=shape), sigma=sigma, mode="wrap")
    return (n - n.mean()) / n.std()


def natural_photo() -> Image:
    """512x512 RGB photograph (NASA astronaut portrait, public domain)."""
    data = resources.files("rdic").joinpath("data/astronaut.ppm").read_bytes()
    return parse_pnm(data)


def _scene(rng, size):
    """Textured ground with a few bright 'vehicles' and a dark 'road'."""
    ground = 110 + 18 * _noise(rng, (size, size), 6) + 6 * _noise(rng, (size, size), 1)
    yy, xx = np.mgrid[:size, :size]
    road = np.abs((yy - 0.35 * xx) - size * 0.4) < size * 0.03
    ground[road] = 60 + 4 * _noise(rng, (size, size), 1)[road]
    for _ in range(12):
        cy, cx = rng.integers(16, size - 16, size=2)
        h, w = rng.integers(6, 14, size=2)
        ground[cy : cy + h, cx : cx + w] = rng.integers(190, 250)
    tint = np.stack([ground, ground * 1.02 + 6, ground * 0.9], axis=-1)
    return Image(_u8(tint))


def synthetic_corpus(size=512, seed=0, include_photo=True) -> dict:
    """Name -> Image, always generated identically for a given ``seed``."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:size, :size].astype(np.float64) / (size - 1)
    r = np.hypot(yy - 0.5, xx - 0.5)
    out = {}
    out["gradient_h"] = Image(_u8(255 * xx))
    out["gradient_rgb"] = Image(_u8(np.stack([255 * xx, 255 * yy, 255 * (1 - xx) * yy], -1)))
    out["gradient_radial"] = Image(_u8(255 * np.clip(1 - r * 1.4, 0, 1)))
    cb = ((np.arange(size)[:, None] // 64) + (np.arange(size)[None, :] // 64)) % 2
    out["checker_aligned"] = Image(_u8(40 + 170 * cb))
    cb = ((np.arange(size)[:, None] // 37) + (np.arange(size)[None, :] // 37)) % 2
    colors = np.array([[200, 60, 40], [30, 90, 180]], dtype=np.float64)
    out["checker_offset_rgb"] = Image(_u8(colors[cb]))
    out["noise_fine"] = Image(_u8(128 + 40 * _noise(rng, (size, size), 1.5)))
    out["noise_coarse"] = Image(_u8(128 + 50 * _noise(rng, (size, size), 4.0)))
    out["noise_rgb"] = Image(_u8(128 + 45 * _noise(rng, (size, size, 3), (3.0, 3.0, 0))))
    out["zone_plate"] = Image(_u8(128 + 100 * np.cos(40 * np.pi * r**2)))
    out["aerial_scene"] = _scene(rng, size)
    if include_photo:
        photo = natural_photo()
        if size > min(photo.height, photo.width):
            raise ValueError(f"photo is only {photo.height}x{photo.width}")
        y0, x0 = (photo.height - size) // 2, (photo.width - size) // 2
        out["photo_astronaut"] = Image(photo.pixels[y0:y0 + size, x0:x0 + size])
    return out


def write_corpus(directory, **kwargs) -> list:
    """Write :func:`synthetic_corpus` as PGM/PPM files; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, img in synthetic_corpus(**kwargs).items():
        path = directory / f"{name}.{'pgm' if img.channels == 1 else 'ppm'}"
        write_pnm(img, path)
        paths.append(path)
    return paths
