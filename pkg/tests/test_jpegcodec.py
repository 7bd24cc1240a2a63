import io
import math
import struct

import numpy as np
import pytest

from rdic.imagecore import Image, region_metrics
from rdic.jpegcodec import (HuffmanDecodeError, MarkerError, TruncatedStreamError,
                            UnsupportedJpegError, decode, decode_coefficients, decode_planes,
                            encode, encode_region_adaptive, quality_to_tables,
                            quantized_coefficients)
from rdic.roimask import block_project, expand_blocks

PIL = pytest.importorskip("PIL.Image")


def markers(stream):
    """Marker codes of the header segments up to and including SOS."""
    out, pos = [], 2
    while True:
        m = stream[pos + 1]
        out.append(m)
        if m == 0xDA:
            return out
        pos += 2 + struct.unpack(">H", stream[pos + 2:pos + 4])[0]


def small(rng, h=21, w=27, c=3):
    base = np.linspace(0, 255, w)[None, :, None] + rng.normal(0, 20, (h, w, c))
    return Image(np.clip(base, 0, 255).astype(np.uint8))


class TestFraming:
    @pytest.mark.parametrize("c", [1, 3])
    def test_markers(self, rng, c):
        s = encode(small(rng, c=c), 75)
        assert s[:4] == b"\xff\xd8\xff\xe0" and s[-2:] == b"\xff\xd9"
        assert s[6:11] == b"JFIF\x00" and s[11:13] == b"\x01\x01"
        want = [0xE0, 0xDB, 0xDB, 0xC0, 0xC4, 0xC4, 0xC4, 0xC4, 0xDA] if c == 3 else \
               [0xE0, 0xDB, 0xC0, 0xC4, 0xC4, 0xDA]
        assert markers(s) == want

    def test_sof_fields(self, rng):
        s = encode(small(rng), 75)
        i = s.index(b"\xff\xc0")
        length, p, h, w, nf = struct.unpack(">HBHHB", s[i + 2:i + 10])
        assert (length, p, h, w, nf) == (17, 8, 21, 27, 3)
        comps = s[i + 10:i + 19]
        assert comps == bytes([1, 0x11, 0, 2, 0x11, 1, 3, 0x11, 1])

    def test_dqt_zigzag(self, rng):
        s = encode(small(rng, c=1), 60)
        i = s.index(b"\xff\xdb")
        table = np.frombuffer(s[i + 5:i + 69], np.uint8)
        luma = quality_to_tables(60)[0].reshape(-1)
        from rdic.jpegcodec.tables import ZIGZAG
        np.testing.assert_array_equal(table, luma[ZIGZAG])

    def test_byte_stuffing(self, corpus):
        s = encode(corpus["noise_fine"], 100)
        start = s.index(b"\xff\xda")
        start += 2 + struct.unpack(">H", s[start + 2:start + 4])[0]
        scan = np.frombuffer(s[start:-2], np.uint8)
        ff = np.flatnonzero(scan == 0xFF)
        assert ff.size > 0
        assert np.all(scan[ff + 1] == 0)

    def test_deterministic(self, corpus):
        img = corpus["photo_astronaut"]
        assert encode(img, 83) == encode(img, 83)


class TestRoundTrip:
    @pytest.mark.parametrize("c", [1, 3])
    @pytest.mark.parametrize("q", [1, 10, 50, 90, 100])
    def test_odd_sizes(self, rng, c, q):
        for h, w in [(1, 1), (7, 9), (8, 8), (17, 3), (33, 40)]:
            img = small(rng, h, w, c)
            out = decode(encode(img, q))
            assert out.pixels.shape == img.pixels.shape
            if q == 100:
                assert region_metrics(img, out).psnr_total_db > 40

    @pytest.mark.parametrize("q", [1, 5, 25, 50, 75, 100])
    def test_mid_gray_exact(self, q):
        for c in (1, 3):
            img = Image(np.full((19, 13, c), 128, np.uint8))
            assert decode(encode(img, q)) == img

    def test_flat_levels(self):
        for q in (10, 50, 80, 95):
            dc_div = int(quality_to_tables(q)[0][0, 0])
            for v in range(0, 256, 3):
                img = Image(np.full((16, 24), v, np.uint8))
                out = decode(encode(img, q)).pixels
                assert np.all(out == out[0, 0, 0])
                if q >= 80:
                    assert out[0, 0, 0] == v
                else:
                    assert abs(int(out[0, 0, 0]) - v) <= math.ceil(dc_div / 16)

    def test_coefficients_survive(self, corpus):
        img = corpus["aerial_scene"]
        _, coefs = decode_coefficients(encode(img, 70))
        want = quantized_coefficients(img, 70)
        from rdic.jpegcodec.tables import ZIGZAG
        for ci in range(3):
            np.testing.assert_array_equal(coefs[ci], want[ci].reshape(-1, 64)[:, ZIGZAG])


class TestReferenceDecoder:
    """Cross-check against libjpeg (through Pillow) in both directions."""

    @pytest.mark.parametrize("q", [10, 50, 90, 100])
    def test_gray(self, corpus, q):
        img = corpus["noise_coarse"]
        s = encode(img, q)
        ref = np.asarray(PIL.open(io.BytesIO(s)))
        assert np.abs(ref.astype(int) - decode(s).pixels[:, :, 0]).max() <= 1

    @pytest.mark.parametrize("q", [10, 50, 90, 100])
    def test_color_components(self, corpus, q):
        s = encode(corpus["photo_astronaut"], q)
        ref = PIL.open(io.BytesIO(s))
        ref.draft("YCbCr", ref.size)
        ycc = np.asarray(ref).astype(float)
        ours = [np.floor(p + 0.5) for p in decode_planes(s)]
        for i in range(3):
            assert np.abs(ours[i] - ycc[..., i]).max() <= 1

    @pytest.mark.parametrize("q", [10, 90])
    def test_color_rgb(self, corpus, q):
        s = encode(corpus["photo_astronaut"], q)
        ref = np.asarray(PIL.open(io.BytesIO(s)).convert("RGB")).astype(int)
        # libjpeg's fixed-point color transform adds up to one more unit
        assert np.abs(ref - decode(s).pixels).max() <= 2

    @pytest.mark.parametrize("mode,kwargs", [("L", {}), ("RGB", {"subsampling": 0})])
    def test_decodes_foreign_streams(self, corpus, mode, kwargs):
        src = corpus["photo_astronaut"].pixels
        arr = src[:, :, 1] if mode == "L" else src
        buf = io.BytesIO()
        PIL.fromarray(arr).save(buf, "JPEG", quality=85, **kwargs)
        ref = np.asarray(PIL.open(io.BytesIO(buf.getvalue()))).astype(int)
        ours = decode(buf.getvalue()).pixels.astype(int)
        assert np.abs(ref.reshape(ours.shape) - ours).max() <= 2

    def test_foreign_optimized_huffman(self, corpus):
        buf = io.BytesIO()
        PIL.fromarray(corpus["aerial_scene"].pixels).save(
            buf, "JPEG", quality=70, subsampling=0, optimize=True)
        ref = np.asarray(PIL.open(io.BytesIO(buf.getvalue()))).astype(int)
        assert np.abs(ref - decode(buf.getvalue()).pixels).max() <= 2

    def test_rejects_subsampled(self, corpus):
        buf = io.BytesIO()
        PIL.fromarray(corpus["photo_astronaut"].pixels).save(buf, "JPEG", subsampling=2)
        with pytest.raises(UnsupportedJpegError, match="subsampling"):
            decode(buf.getvalue())

    def test_rejects_progressive(self, corpus):
        buf = io.BytesIO()
        PIL.fromarray(corpus["photo_astronaut"].pixels).save(buf, "JPEG", progressive=True)
        with pytest.raises(UnsupportedJpegError):
            decode(buf.getvalue())


class TestDecodeErrors:
    @pytest.fixture
    def stream(self, rng):
        return encode(small(rng, 40, 40), 80)

    def test_missing_soi(self, stream):
        with pytest.raises(MarkerError, match="missing SOI") as e:
            decode(b"\x00" + stream[1:])
        assert e.value.offset == 0

    def test_truncated_inside_scan(self, stream):
        with pytest.raises(TruncatedStreamError):
            decode(stream[: len(stream) // 2])

    def test_truncated_missing_eoi(self, stream):
        with pytest.raises(TruncatedStreamError):
            decode(stream[:-2])

    def test_truncated_header(self, stream):
        with pytest.raises(TruncatedStreamError):
            decode(stream[:30])

    def test_huffman_failure(self, stream):
        start = stream.index(b"\xff\xda")
        start += 2 + struct.unpack(">H", stream[start + 2:start + 4])[0]
        # luma DC table has no all-ones code
        bad = stream[:start] + b"\xfe\x00" * 4 + stream[start + 8:]
        with pytest.raises(HuffmanDecodeError) as e:
            decode(bad)
        assert e.value.offset is not None and e.value.offset >= start

    def test_bad_marker_sequence(self, stream):
        with pytest.raises(MarkerError):
            decode(stream[:2] + b"\xff\xd9")
        with pytest.raises(MarkerError):
            decode(stream[:2] + b"\x12\x34" + stream[2:])

    def test_error_kinds_distinct(self):
        kinds = [MarkerError, HuffmanDecodeError, TruncatedStreamError, UnsupportedJpegError]
        assert len({k for k in kinds}) == 4
        assert not any(a is not b and issubclass(a, b) for a in kinds for b in kinds)


class TestRegionAdaptive:
    def test_all_roi_bit_identical(self, corpus):
        img = corpus["aerial_scene"]
        blocks = np.ones((64, 64), bool)
        assert encode_region_adaptive(img, blocks, 90, 40) == encode(img, 90)

    def test_all_bg_unit_tables(self, corpus):
        img = corpus["noise_coarse"]
        blocks = np.zeros((64, 64), bool)
        _, coefs = decode_coefficients(encode_region_adaptive(img, blocks, 100, 50))
        _, coarse = decode_coefficients(encode(img, 50))
        from rdic.jpegcodec.tables import ZIGZAG
        table = quality_to_tables(50)[0].reshape(-1)[ZIGZAG]
        np.testing.assert_array_equal(coefs[0], coarse[0] * table)

    def test_roi_pixels_identical(self, corpus, rng):
        img = corpus["photo_astronaut"]
        ref = decode(encode(img, 95)).pixels
        for _ in range(3):
            blocks = rng.random((64, 64)) < 0.3
            out = decode(encode_region_adaptive(img, blocks, 95, 30)).pixels
            roi = expand_blocks(blocks, 512, 512)
            assert np.array_equal(out[roi], ref[roi])
            assert not np.array_equal(out[~roi], ref[~roi])

    def test_size_sandwich(self, corpus, rng):
        for name in ("photo_astronaut", "noise_fine", "gradient_rgb"):
            img = corpus[name]
            m = rng.random((512, 512)) < 0.0005
            blocks = block_project(m)
            size = len(encode_region_adaptive(img, blocks, 100, 50))
            assert len(encode(img, 50)) < size < len(encode(img, 100))

    def test_equal_qualities(self, corpus, rng):
        img = corpus["zone_plate"]
        blocks = rng.random((64, 64)) < 0.5
        assert encode_region_adaptive(img, blocks, 70, 70) == encode(img, 70)

    def test_argument_checks(self, corpus):
        img = corpus["zone_plate"]
        with pytest.raises(ValueError, match="q_roi"):
            encode_region_adaptive(img, np.ones((64, 64), bool), 50, 100)
        with pytest.raises(ValueError, match="block map"):
            encode_region_adaptive(img, np.ones((8, 8), bool), 100, 50)
