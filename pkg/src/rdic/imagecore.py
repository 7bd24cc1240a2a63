"""Pixel containers, PNM/PFM file I/O, JFIF color conversion and fidelity metrics.

Images are stored as read-only ``uint8`` arrays of shape ``(height, width,
channels)``; single-channel planes (relevance maps, color planes) are plain
2-D ``float64`` arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Image",
    "PnmError",
    "BadMagicError",
    "BadHeaderError",
    "UnsupportedMaxvalError",
    "TruncatedDataError",
    "RegionMetrics",
    "read_pnm",
    "write_pnm",
    "pnm_bytes",
    "parse_pnm",
    "read_pfm",
    "write_pfm",
    "rgb_to_ycbcr",
    "ycbcr_to_rgb",
    "psnr",
    "region_metrics",
    "image_to_tensor",
]


class PnmError(ValueError):
    """Raised for malformed PNM/PFM files."""


class BadMagicError(PnmError):
    pass


class BadHeaderError(PnmError):
    pass


class UnsupportedMaxvalError(PnmError):
    pass


class TruncatedDataError(PnmError):
    pass


@dataclass(frozen=True)
class Image:
    """8-bit raster with 1 (gray) or 3 (RGB) interleaved channels.

    ``pixels`` has shape ``(height, width, channels)``. A 2-D array is
    accepted and treated as grayscale. The stored array is a private
    read-only copy.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, 1|3) pixels, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image dimensions must be >= 1")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer) or px.min() < 0 or px.max() > 255:
                raise ValueError("pixels must be 8-bit unsigned samples")
        px = np.array(px, dtype=np.uint8, copy=True)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def data(self) -> bytes:
        """Row-major interleaved samples."""
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(
            self.pixels, other.pixels
        )

    __hash__ = None


# --------------------------------------------------------------------------
# PNM / PFM

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(buf: bytes, count: int, start: int):
    """Pull whitespace separated header tokens, skipping ``#`` comments."""
    tokens = []
    pos = start
    for _ in range(count):
        m = _TOKEN.match(buf, pos)
        if m is None:
            raise BadHeaderError("incomplete header")
        tokens.append(m.group(1))
        pos = m.end()
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise BadHeaderError("header must end with a single whitespace byte")
    return tokens, pos + 1


def parse_pnm(buf: bytes) -> Image:
    """Decode an in-memory binary PGM (P5) or PPM (P6) with maxval 255."""
    magic = buf[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise BadMagicError(f"bad magic {magic!r}, expected b'P5' or b'P6'")
    if len(buf) < 3 or not buf[2:3].isspace():
        raise BadHeaderError("missing whitespace after magic")
    tokens, offset = _header_tokens(buf, 3, 2)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise BadHeaderError(f"non-integer header fields {tokens!r}") from None
    if width < 1 or height < 1:
        raise BadHeaderError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"unsupported maxval {maxval}")
    n = width * height * channels
    payload = buf[offset : offset + n]
    if len(payload) < n:
        raise TruncatedDataError(f"expected {n} sample bytes, found {len(payload)}")
    px = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return Image(px)


def read_pnm(path) -> Image:
    with open(path, "rb") as f:
        return parse_pnm(f.read())


def pnm_bytes(img: Image) -> bytes:
    """Serialized P5/P6 representation of ``img``."""
    magic = b"P5" if img.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + img.data


def write_pnm(img: Image, path) -> None:
    with open(path, "wb") as f:
        f.write(pnm_bytes(img))


def write_pfm(plane: np.ndarray, path) -> None:
    """Write a 2-D float plane as little-endian grayscale PFM.

    PFM stores rows bottom-to-top; values are narrowed to float32.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError("PFM writer expects a single 2-D plane")
    if not np.all(np.isfinite(plane)):
        raise ValueError("plane contains non-finite values")
    h, w = plane.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n%d %d\n-1.0\n" % (w, h))
        f.write(plane[::-1].astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a grayscale (``Pf``) PFM into a ``float64`` plane, top row first."""
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:2] != b"Pf":
        raise BadMagicError(f"bad PFM magic {buf[:2]!r}, expected b'Pf'")
    if len(buf) < 3 or not buf[2:3].isspace():
        raise BadHeaderError("missing whitespace after magic")
    tokens, offset = _header_tokens(buf, 3, 2)
    try:
        width, height = int(tokens[0]), int(tokens[1])
        scale = float(tokens[2])
    except ValueError:
        raise BadHeaderError(f"bad PFM header {tokens!r}") from None
    if width < 1 or height < 1 or scale == 0.0:
        raise BadHeaderError(f"bad PFM header {tokens!r}")
    dtype = "<f4" if scale < 0 else ">f4"
    n = width * height * 4
    payload = buf[offset : offset + n]
    if len(payload) < n:
        raise TruncatedDataError(f"expected {n} payload bytes, found {len(payload)}")
    plane = np.frombuffer(payload, dtype=dtype).reshape(height, width)[::-1]
    plane = plane.astype(np.float64)
    if not np.all(np.isfinite(plane)):
        raise PnmError("PFM contains non-finite values")
    return plane


# --------------------------------------------------------------------------
# Color


def rgb_to_ycbcr(img: Image):
    """Full-range JFIF RGB -> (Y, Cb, Cr) float planes, unclamped."""
    if img.channels != 3:
        raise ValueError(f"rgb_to_ycbcr needs 3 channels, got {img.channels}")
    px = img.pixels.astype(np.float64)
    r, g, b = px[..., 0], px[..., 1], px[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return y, cb, cr


def _to_u8(x):
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def ycbcr_to_rgb(y, cb, cr) -> Image:
    y, cb, cr = (np.asarray(p, dtype=np.float64) for p in (y, cb, cr))
    if not (y.shape == cb.shape == cr.shape) or y.ndim != 2:
        raise ValueError("Y, Cb and Cr planes must be 2-D with equal shapes")
    cb = cb - 128.0
    cr = cr - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return Image(np.stack([_to_u8(r), _to_u8(g), _to_u8(b)], axis=-1))


# --------------------------------------------------------------------------
# Metrics


def psnr(mse: float) -> float:
    """PSNR in dB for 8-bit samples; ``inf`` when ``mse == 0``."""
    if mse < 0:
        raise ValueError("mse must be non-negative")
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


@dataclass(frozen=True)
class RegionMetrics:
    """Error statistics over the whole image and over the RoI / background.

    An empty region reports zero samples, ``mse == 0`` and infinite PSNR.
    ``sse_*`` are exact integer sums of squared sample differences.
    """

    mse_total: float
    mse_roi: float
    mse_bg: float
    psnr_total_db: float
    psnr_roi_db: float
    psnr_bg_db: float
    n_total: int
    n_roi: int
    n_bg: int
    sse_total: int = field(repr=False)
    sse_roi: int = field(repr=False)
    sse_bg: int = field(repr=False)


def region_metrics(original: Image, decoded: Image, mask=None) -> RegionMetrics:
    """MSE / PSNR of ``decoded`` against ``original``, split by ``mask``.

    ``mask`` is a boolean ``(height, width)`` array; a mask pixel selects all
    channels of that pixel. Without a mask the whole image is RoI.
    """
    if original.pixels.shape != decoded.pixels.shape:
        raise ValueError(
            f"shape mismatch {original.pixels.shape} vs {decoded.pixels.shape}"
        )
    diff = original.pixels.astype(np.int64) - decoded.pixels.astype(np.int64)
    sq = (diff * diff).sum(axis=2)
    c = original.channels
    if mask is None:
        mask = np.ones(sq.shape, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != sq.shape:
            raise ValueError(f"mask shape {mask.shape} does not match {sq.shape}")
    sse_roi = int(sq[mask].sum())
    sse_bg = int(sq[~mask].sum())
    n_roi = int(mask.sum()) * c
    n_total = sq.size * c
    n_bg = n_total - n_roi
    sse_total = sse_roi + sse_bg

    def mse(sse, n):
        return sse / n if n else 0.0

    m_t, m_r, m_b = mse(sse_total, n_total), mse(sse_roi, n_roi), mse(sse_bg, n_bg)
    return RegionMetrics(
        mse_total=m_t,
        mse_roi=m_r,
        mse_bg=m_b,
        psnr_total_db=psnr(m_t),
        psnr_roi_db=psnr(m_r),
        psnr_bg_db=psnr(m_b),
        n_total=n_total,
        n_roi=n_roi,
        n_bg=n_bg,
        sse_total=sse_total,
        sse_roi=sse_roi,
        sse_bg=sse_bg,
    )


def image_to_tensor(img: Image) -> np.ndarray:
    """``(channels, height, width)`` float64 tensor with samples scaled to [0, 1]."""
    return np.transpose(img.pixels, (2, 0, 1)).astype(np.float64) / 255.0

