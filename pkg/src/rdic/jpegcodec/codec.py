"""Baseline JFIF encoder / decoder (4:4:4, fixed Annex K Huffman tables).

The region-adaptive encoder writes one table set (the RoI quality) and
degrades background blocks by quantizing them at the background quality,
reconstructing, and requantizing with the RoI tables.
"""

from __future__ import annotations

import struct

import numpy as np

from ..imagecore import Image, rgb_to_ycbcr, ycbcr_to_rgb
from . import entropy
from .dct import dequantize_block, fdct_block, idct_block, quantize_block
from .tables import (AC_CHROMA, AC_LUMA, DC_CHROMA, DC_LUMA, UNZIGZAG, ZIGZAG,
                     quality_scale, quality_to_tables)

__all__ = [
    "JpegError",
    "MarkerError",
    "HuffmanDecodeError",
    "TruncatedStreamError",
    "UnsupportedJpegError",
    "encode",
    "encode_region_adaptive",
    "decode",
    "decode_coefficients",
    "decode_planes",
    "quantized_coefficients",
]

SOI, EOI, SOS, DQT, DHT, DRI, APP0 = 0xD8, 0xD9, 0xDA, 0xDB, 0xC4, 0xDD, 0xE0
SOF_BASELINE = (0xC0, 0xC1)

# baseline category limits: |AC| <= 1023, DC differences within 11 bits
AC_LIMIT = 1023
DC_MIN, DC_MAX = -1024, 1023


class JpegError(ValueError):
    """Malformed or unsupported JPEG stream; ``offset`` is a byte position."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} at byte {offset}")
        self.offset = offset


class MarkerError(JpegError):
    pass


class HuffmanDecodeError(JpegError):
    pass


class TruncatedStreamError(JpegError):
    pass


class UnsupportedJpegError(JpegError):
    pass


_HUFF = {
    "dc_luma": entropy.HuffmanTable(*DC_LUMA),
    "ac_luma": entropy.HuffmanTable(*AC_LUMA),
    "dc_chroma": entropy.HuffmanTable(*DC_CHROMA),
    "ac_chroma": entropy.HuffmanTable(*AC_CHROMA),
}


# --------------------------------------------------------------------------
# Encoding


def _planes(img: Image):
    if img.channels == 3:
        return list(rgb_to_ycbcr(img))
    return [img.pixels[:, :, 0].astype(np.float64)]


def _blockify(plane):
    """Edge-replicate to a multiple of 8 and return (bh, bw, 8, 8) blocks."""
    h, w = plane.shape
    bh, bw = -(-h // 8), -(-w // 8)
    padded = np.pad(plane, ((0, bh * 8 - h), (0, bw * 8 - w)), mode="edge")
    return padded.reshape(bh, 8, bw, 8).transpose(0, 2, 1, 3)


def _dct_planes(img: Image):
    return [fdct_block(_blockify(p - 128.0)) for p in _planes(img)]


def _clip(q):
    q = q.copy()
    q[..., 0, 0] = np.clip(q[..., 0, 0], DC_MIN, DC_MAX)
    dc = q[..., 0, 0].copy()
    np.clip(q, -AC_LIMIT, AC_LIMIT, out=q)
    q[..., 0, 0] = dc
    return q


def _component_tables(n_components, q):
    luma, chroma = quality_to_tables(q)
    return [luma] + [chroma] * (n_components - 1)


def quantized_coefficients(img: Image, q: int, blocks=None, q_bg=None):
    """Quantized (bh, bw, 8, 8) int32 coefficients per component.

    With a block map and ``q_bg``, background blocks follow the
    quantize / dequantize / requantize chain against the ``q`` tables.
    """
    coefs = _dct_planes(img)
    tables = _component_tables(len(coefs), q)
    out = [quantize_block(c, t) for c, t in zip(coefs, tables)]
    if blocks is not None:
        bg_tables = _component_tables(len(coefs), q_bg)
        bg = ~np.asarray(blocks, dtype=bool)
        for i, (c, t, tb) in enumerate(zip(coefs, tables, bg_tables)):
            coarse = dequantize_block(quantize_block(c[bg], tb), tb)
            out[i][bg] = quantize_block(coarse, t)
    return [_clip(q) for q in out]


def _segment(marker, payload=b""):
    return struct.pack(">BBH", 0xFF, marker, len(payload) + 2) + payload


def _headers(img: Image, tables):
    ncomp = img.channels
    parts = [b"\xff\xd8"]
    parts.append(_segment(APP0, b"JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00"))
    for tid, table in enumerate(tables[: 1 if ncomp == 1 else 2]):
        zz = table.reshape(64)[ZIGZAG]
        parts.append(_segment(DQT, bytes([tid]) + bytes(zz.astype(np.uint8))))
    sof = struct.pack(">BHHB", 8, img.height, img.width, ncomp)
    for c in range(ncomp):
        sof += bytes([c + 1, 0x11, 0 if c == 0 else 1])
    parts.append(_segment(SOF_BASELINE[0], sof))
    dht = [(0x00, "dc_luma"), (0x10, "ac_luma")]
    if ncomp == 3:
        dht += [(0x01, "dc_chroma"), (0x11, "ac_chroma")]
    for cls_id, name in dht:
        parts.append(_segment(DHT, bytes([cls_id]) + _HUFF[name].segment_payload()))
    sos = bytes([ncomp])
    for c in range(ncomp):
        sos += bytes([c + 1, 0x00 if c == 0 else 0x11])
    sos += bytes([0, 63, 0])
    parts.append(_segment(SOS, sos))
    return b"".join(parts)


def _scan_order(quantized):
    """Interleave blocks MCU by MCU: (coefs zigzag, component of each block)."""
    stacked = np.stack([q.reshape(-1, 64) for q in quantized], axis=1)  # mcu, comp, 64
    nmcu, ncomp, _ = stacked.shape
    coefs = np.ascontiguousarray(stacked.reshape(-1, 64)[:, ZIGZAG], dtype=np.int32)
    comp = np.tile(np.arange(ncomp, dtype=np.int64), nmcu)
    return coefs, comp


def _entropy_code(quantized):
    coefs, comp = _scan_order(quantized)
    ncomp = len(quantized)
    names = ["luma"] if ncomp == 1 else ["luma", "chroma"]
    dc = entropy.stack_tables([_HUFF["dc_" + n] for n in names])
    ac = entropy.stack_tables([_HUFF["ac_" + n] for n in names])
    sel = np.array([0] + [1] * (ncomp - 1), dtype=np.int64)
    status, buf, n = entropy.encode_blocks(coefs, comp, sel, sel, dc[0], dc[1], ac[0], ac[1])
    if status != entropy.OK:
        raise ValueError("coefficient outside the baseline Huffman alphabet")
    return buf[:n].tobytes()


def _assemble(img, quantized, q):
    tables = _component_tables(img.channels, q)
    return _headers(img, tables) + _entropy_code(quantized) + b"\xff\xd9"


def _check_dims(img):
    if img.width > 65535 or img.height > 65535:
        raise ValueError("JPEG dimensions are limited to 65535")


def encode(img: Image, q: int) -> bytes:
    """Baseline JFIF bytes for ``img`` at IJG quality ``q``."""
    _check_dims(img)
    return _assemble(img, quantized_coefficients(img, q), q)


def encode_region_adaptive(img: Image, blocks, q_roi: int, q_bg: int) -> bytes:
    """One baseline stream: RoI blocks at ``q_roi``, background degraded to ``q_bg``.

    ``blocks`` is the boolean (ceil(h/8), ceil(w/8)) map, True for RoI.
    """
    _check_dims(img)
    quality_scale(q_roi), quality_scale(q_bg)
    if q_roi < q_bg:
        raise ValueError(f"q_roi ({q_roi}) must be >= q_bg ({q_bg})")
    blocks = np.asarray(blocks, dtype=bool)
    expected = (-(-img.height // 8), -(-img.width // 8))
    if blocks.shape != expected:
        raise ValueError(f"block map shape {blocks.shape} != {expected}")
    quantized = quantized_coefficients(img, q_roi, blocks=blocks, q_bg=q_bg)
    return _assemble(img, quantized, q_roi)


# --------------------------------------------------------------------------
# Decoding


class _Frame:
    def __init__(self):
        self.qtables = {}
        self.huffman = {}
        self.width = self.height = None
        self.components = []  # (id, quant table id)
        self.coefs = None
        self.seen_scan = False


def _read_u16(buf, pos):
    if pos + 2 > len(buf):
        raise TruncatedStreamError("unexpected end of stream", pos)
    return (buf[pos] << 8) | buf[pos + 1]


def _parse_dqt(frame, seg, offset):
    pos = 0
    while pos < len(seg):
        pq, tq = seg[pos] >> 4, seg[pos] & 15
        pos += 1
        size = 128 if pq else 64
        if pq > 1 or tq > 3:
            raise MarkerError("bad DQT table spec", offset + pos)
        if pos + size > len(seg):
            raise MarkerError("short DQT segment", offset + pos)
        raw = np.frombuffer(bytes(seg[pos : pos + size]), dtype=">u2" if pq else np.uint8)
        pos += size
        natural = np.empty(64, dtype=np.int32)
        natural[ZIGZAG] = raw
        frame.qtables[tq] = natural.reshape(8, 8)


def _parse_dht(frame, seg, offset):
    pos = 0
    while pos < len(seg):
        if pos + 17 > len(seg):
            raise MarkerError("short DHT segment", offset + pos)
        tc, th = seg[pos] >> 4, seg[pos] & 15
        bits = list(seg[pos + 1 : pos + 17])
        pos += 17
        count = sum(bits)
        if tc > 1 or th > 3 or pos + count > len(seg):
            raise MarkerError("bad DHT table spec", offset + pos)
        try:
            frame.huffman[(tc, th)] = entropy.HuffmanTable(bits, seg[pos : pos + count])
        except ValueError as e:
            raise MarkerError(f"invalid Huffman table: {e}", offset + pos) from None
        pos += count


def _parse_sof(frame, seg, offset):
    if frame.width is not None:
        raise MarkerError("multiple frames", offset)
    if len(seg) < 6:
        raise MarkerError("short SOF segment", offset)
    precision, height, width, nf = struct.unpack(">BHHB", bytes(seg[:6]))
    if precision != 8:
        raise UnsupportedJpegError(f"{precision}-bit precision", offset)
    if height == 0 or width == 0:
        raise UnsupportedJpegError("zero frame dimension (DNL)", offset)
    if nf not in (1, 3):
        raise UnsupportedJpegError(f"{nf} components", offset)
    if len(seg) < 6 + 3 * nf:
        raise MarkerError("short SOF segment", offset)
    comps = []
    for i in range(nf):
        cid, hv, tq = seg[6 + 3 * i : 9 + 3 * i]
        if nf > 1 and hv != 0x11:
            raise UnsupportedJpegError("chroma subsampling", offset)
        comps.append((cid, tq))
    frame.width, frame.height, frame.components = width, height, comps
    bh, bw = -(-height // 8), -(-width // 8)
    frame.coefs = np.zeros((nf, bh * bw, 64), dtype=np.int32)


def _scan_end(buf, start):
    """Index of the marker that terminates entropy data beginning at ``start``."""
    arr = np.frombuffer(buf, dtype=np.uint8, offset=start)
    ff = np.flatnonzero(arr[:-1] == 0xFF)
    nxt = arr[ff + 1]
    markers = ff[nxt != 0x00]
    if markers.size == 0:
        raise TruncatedStreamError("entropy data not terminated by a marker", len(buf))
    end = int(markers[0])
    if 0xD0 <= arr[end + 1] <= 0xD7:
        raise UnsupportedJpegError("restart markers", start + end)
    stuffed = ff[(nxt == 0x00) & (ff < end)]
    keep = np.ones(end, dtype=bool)
    keep[stuffed + 1] = False
    return start + end, arr[:end][keep], stuffed


def _decode_scan(frame, buf, seg, offset, scan_start):
    if frame.width is None:
        raise MarkerError("SOS before SOF", offset)
    ns = seg[0] if seg else 0
    if len(seg) != 4 + 2 * ns or ns < 1:
        raise MarkerError("bad SOS length", offset)
    ids = [c for c, _ in frame.components]
    scomps = []
    for i in range(ns):
        cs, tables = seg[1 + 2 * i], seg[2 + 2 * i]
        if cs not in ids:
            raise MarkerError(f"scan references unknown component {cs}", offset)
        scomps.append((ids.index(cs), tables >> 4, tables & 15))
    ss, se, a = seg[1 + 2 * ns : 4 + 2 * ns]
    if (ss, se, a) != (0, 63, 0):
        raise UnsupportedJpegError("non-sequential scan parameters", offset)
    end, data, stuffed = _scan_end(buf, scan_start)

    nblk = frame.coefs.shape[1]
    if ns == 1:
        comp = np.zeros(nblk, dtype=np.int64)
    else:
        comp = np.tile(np.arange(ns, dtype=np.int64), nblk)
    dc_tabs, ac_tabs, dc_sel, ac_sel = [], [], [], []
    for _, td, ta in scomps:
        for cls, t, tabs, sel in ((0, td, dc_tabs, dc_sel), (1, ta, ac_tabs, ac_sel)):
            if (cls, t) not in frame.huffman:
                raise MarkerError(f"scan uses undefined Huffman table {cls}/{t}", offset)
            sel.append(len(tabs))
            tabs.append(frame.huffman[(cls, t)])
    dc = entropy.stack_tables(dc_tabs)
    ac = entropy.stack_tables(ac_tabs)
    status, bitpos, coefs = entropy.decode_blocks(
        data, data.size * 8, comp, np.array(dc_sel), np.array(ac_sel),
        dc[2], dc[3], dc[4], dc[5], ac[2], ac[3], ac[4], ac[5],
    )
    if status != entropy.OK:
        clean = bitpos // 8
        where = scan_start + clean + int(np.searchsorted(stuffed, clean, side="right"))
        if status == entropy.TRUNCATED:
            raise TruncatedStreamError("entropy data ended early", where)
        raise HuffmanDecodeError(
            "invalid Huffman code" if status == entropy.BAD_CODE else "AC run past block end",
            where,
        )
    coefs = coefs.reshape(-1, ns, 64) if ns > 1 else coefs[:, None, :]
    for j, (ci, _, _) in enumerate(scomps):
        frame.coefs[ci] = coefs[:, j, :]
    frame.seen_scan = True
    return end


def decode_coefficients(stream: bytes):
    """Parse ``stream``; returns (frame, quantized coefs zigzag (comp, blocks, 64))."""
    buf = bytes(stream)
    if len(buf) < 2 or buf[0] != 0xFF or buf[1] != SOI:
        raise MarkerError("missing SOI", 0)
    frame = _Frame()
    pos = 2
    while True:
        if pos >= len(buf):
            raise TruncatedStreamError("stream ended before EOI", pos)
        if buf[pos] != 0xFF:
            raise MarkerError(f"expected marker, found 0x{buf[pos]:02x}", pos)
        while pos < len(buf) and buf[pos] == 0xFF:
            pos += 1
        if pos >= len(buf):
            raise TruncatedStreamError("stream ended inside marker", pos)
        marker, mpos = buf[pos], pos - 1
        pos += 1
        if marker == EOI:
            if not frame.seen_scan:
                raise MarkerError("EOI before any scan", mpos)
            return frame, frame.coefs
        if marker == SOI or 0xD0 <= marker <= 0xD7 or marker == 0x01:
            raise MarkerError(f"unexpected marker 0x{marker:02x}", mpos)
        length = _read_u16(buf, pos)
        if length < 2:
            raise MarkerError("bad segment length", pos)
        if pos + length > len(buf):
            raise TruncatedStreamError("segment runs past end of stream", pos)
        seg = buf[pos + 2 : pos + length]
        offset = pos + 2
        pos += length
        if marker == DQT:
            _parse_dqt(frame, seg, offset)
        elif marker == DHT:
            _parse_dht(frame, seg, offset)
        elif marker in SOF_BASELINE:
            _parse_sof(frame, seg, offset)
        elif 0xC0 <= marker <= 0xCF and marker not in (DHT, 0xC8, 0xCC):
            raise UnsupportedJpegError(f"SOF marker 0x{marker:02x} (not baseline)", mpos)
        elif marker == DRI:
            if len(seg) >= 2 and (seg[0] or seg[1]):
                raise UnsupportedJpegError("restart interval", mpos)
        elif marker == SOS:
            pos = _decode_scan(frame, buf, seg, offset, pos)
        elif 0xE0 <= marker <= 0xEF or marker == 0xFE:
            pass
        else:
            raise MarkerError(f"unexpected marker 0x{marker:02x}", mpos)


def decode_planes(stream: bytes):
    """Component planes (Y or Y, Cb, Cr) as floats clamped to [0, 255]."""
    frame, coefs = decode_coefficients(stream)
    bh, bw = -(-frame.height // 8), -(-frame.width // 8)
    planes = []
    for ci, (_, tq) in enumerate(frame.components):
        if tq not in frame.qtables:
            raise MarkerError(f"component uses undefined quantization table {tq}")
        natural = coefs[ci][:, UNZIGZAG].reshape(bh, bw, 8, 8)
        pixels = idct_block(natural * frame.qtables[tq]) + 128.0
        plane = pixels.transpose(0, 2, 1, 3).reshape(bh * 8, bw * 8)
        planes.append(np.clip(plane[: frame.height, : frame.width], 0.0, 255.0))
    return planes


def decode(stream: bytes) -> Image:
    """Decode a baseline, non-subsampled JPEG stream to an Image."""
    planes = decode_planes(stream)
    if len(planes) == 3:
        return ycbcr_to_rgb(*planes)
    return Image(np.floor(planes[0] + 0.5).astype(np.uint8))
