"""Baseline Huffman entropy coding (DC DPCM + AC run-length) of 8x8 blocks.

The bit-level loops are compiled with numba; table construction and error
translation stay in Python.
"""

import numpy as np
from numba import njit

# kernel status codes
OK = 0
BAD_CODE = 1
TRUNCATED = 2
BAD_RUN = 3
MISSING_SYMBOL = 4


class HuffmanTable:
    """Canonical Huffman table built from a (BITS, HUFFVAL) pair."""

    def __init__(self, bits, values):
        bits = [int(b) for b in bits]
        values = [int(v) for v in values]
        if len(bits) != 16 or sum(bits) != len(values) or len(values) > 256:
            raise ValueError("inconsistent Huffman BITS / HUFFVAL")
        self.bits = tuple(bits)
        self.values = tuple(values)
        self.codes = np.zeros(256, dtype=np.int64)
        self.sizes = np.zeros(256, dtype=np.int64)
        self.mincode = np.zeros(17, dtype=np.int64)
        self.maxcode = np.full(18, -1, dtype=np.int64)
        self.valptr = np.zeros(17, dtype=np.int64)
        self.huffval = np.zeros(256, dtype=np.int64)
        self.huffval[: len(values)] = values
        code = k = 0
        for length in range(1, 17):
            n = bits[length - 1]
            if n:
                self.valptr[length] = k
                self.mincode[length] = code
                for _ in range(n):
                    self.codes[values[k]] = code
                    self.sizes[values[k]] = length
                    code += 1
                    k += 1
                self.maxcode[length] = code - 1
                if code > (1 << length):
                    raise ValueError("Huffman code space overflow")
            code <<= 1

    def segment_payload(self):
        return bytes(self.bits) + bytes(self.values)


def stack_tables(tables):
    """Pack a list of HuffmanTable into 2-D arrays for the kernels."""
    return tuple(
        np.stack([getattr(t, name) for t in tables])
        for name in ("codes", "sizes", "mincode", "maxcode", "valptr", "huffval")
    )


@njit(cache=True)
def _category(v):
    v = abs(v)
    s = 0
    while v:
        s += 1
        v >>= 1
    return s


@njit(cache=True)
def _put(out, n, acc, nacc, code, size):
    acc = (acc << size) | (code & ((1 << size) - 1))
    nacc += size
    while nacc >= 8:
        nacc -= 8
        b = (acc >> nacc) & 0xFF
        out[n] = b
        n += 1
        if b == 0xFF:
            out[n] = 0
            n += 1
    acc &= (1 << nacc) - 1
    return n, acc, nacc


@njit(cache=True)
def encode_blocks(coefs, comp, dc_sel, ac_sel, dc_codes, dc_sizes, ac_codes, ac_sizes):
    """Entropy code ``coefs`` (nblocks, 64; zigzag order) in the given block order.

    ``comp[i]`` is the component of block ``i``; ``dc_sel`` / ``ac_sel`` map
    components to table rows. Returns (status, bytes, length).
    """
    nblocks = coefs.shape[0]
    out = np.empty(nblocks * 64 * 8 + 16, dtype=np.uint8)
    pred = np.zeros(dc_sel.shape[0], dtype=np.int64)
    n = 0
    acc = np.int64(0)
    nacc = 0
    for i in range(nblocks):
        c = comp[i]
        td = dc_sel[c]
        ta = ac_sel[c]
        dc = np.int64(coefs[i, 0])
        diff = dc - pred[c]
        pred[c] = dc
        s = _category(diff)
        if dc_sizes[td, s] == 0:
            return MISSING_SYMBOL, out, n
        n, acc, nacc = _put(out, n, acc, nacc, dc_codes[td, s], dc_sizes[td, s])
        if s:
            bits = diff if diff > 0 else diff + (1 << s) - 1
            n, acc, nacc = _put(out, n, acc, nacc, bits, s)
        run = 0
        for k in range(1, 64):
            v = np.int64(coefs[i, k])
            if v == 0:
                run += 1
                continue
            while run > 15:
                n, acc, nacc = _put(out, n, acc, nacc, ac_codes[ta, 0xF0], ac_sizes[ta, 0xF0])
                run -= 16
            s = _category(v)
            sym = (run << 4) | s
            if s > 10 or ac_sizes[ta, sym] == 0:
                return MISSING_SYMBOL, out, n
            n, acc, nacc = _put(out, n, acc, nacc, ac_codes[ta, sym], ac_sizes[ta, sym])
            bits = v if v > 0 else v + (1 << s) - 1
            n, acc, nacc = _put(out, n, acc, nacc, bits, s)
            run = 0
        if run:
            n, acc, nacc = _put(out, n, acc, nacc, ac_codes[ta, 0], ac_sizes[ta, 0])
    if nacc:
        pad = 8 - nacc
        n, acc, nacc = _put(out, n, acc, nacc, (1 << pad) - 1, pad)
    return OK, out, n


@njit(cache=True)
def _decode_symbol(data, nbits, pos, mincode, maxcode, valptr, huffval, t):
    code = 0
    for length in range(1, 17):
        if pos >= nbits:
            return -TRUNCATED, pos
        code = (code << 1) | ((data[pos >> 3] >> (7 - (pos & 7))) & 1)
        pos += 1
        if code <= maxcode[t, length]:
            return huffval[t, valptr[t, length] + code - mincode[t, length]], pos
    return -BAD_CODE, pos


@njit(cache=True)
def _receive_extend(data, nbits, pos, s):
    if pos + s > nbits:
        return 0, pos, False
    v = 0
    for _ in range(s):
        v = (v << 1) | ((data[pos >> 3] >> (7 - (pos & 7))) & 1)
        pos += 1
    if v < (1 << (s - 1)):
        v += 1 - (1 << s)
    return v, pos, True


@njit(cache=True)
def decode_blocks(data, nbits, comp, dc_sel, ac_sel,
                  dc_min, dc_max, dc_ptr, dc_val, ac_min, ac_max, ac_ptr, ac_val):
    """Inverse of :func:`encode_blocks` over unstuffed scan bytes.

    Returns (status, bit position of failure, coefs in zigzag order).
    """
    nblocks = comp.shape[0]
    coefs = np.zeros((nblocks, 64), dtype=np.int32)
    pred = np.zeros(dc_sel.shape[0], dtype=np.int64)
    pos = 0
    for i in range(nblocks):
        c = comp[i]
        td = dc_sel[c]
        ta = ac_sel[c]
        start = pos
        s, pos = _decode_symbol(data, nbits, pos, dc_min, dc_max, dc_ptr, dc_val, td)
        if s < 0:
            return -s, start, coefs
        if s > 11:
            return BAD_CODE, start, coefs
        diff = 0
        if s:
            diff, pos, ok = _receive_extend(data, nbits, pos, s)
            if not ok:
                return TRUNCATED, pos, coefs
        pred[c] += diff
        coefs[i, 0] = pred[c]
        k = 1
        while k < 64:
            start = pos
            rs, pos = _decode_symbol(data, nbits, pos, ac_min, ac_max, ac_ptr, ac_val, ta)
            if rs < 0:
                return -rs, start, coefs
            r = rs >> 4
            s = rs & 15
            if s == 0:
                if r == 15:
                    k += 16
                    if k > 64:
                        return BAD_RUN, start, coefs
                    continue
                break
            k += r
            if k > 63:
                return BAD_RUN, start, coefs
            v, pos, ok = _receive_extend(data, nbits, pos, s)
            if not ok:
                return TRUNCATED, pos, coefs
            coefs[i, k] = v
            k += 1
    return OK, pos, coefs
