import numpy as np
import pytest

from helpers import dct_oracle, idct_oracle
from rdic.jpegcodec import fdct_block, idct_block, quality_to_tables, quantize_block
from rdic.jpegcodec.entropy import HuffmanTable
from rdic.jpegcodec.tables import (AC_CHROMA, AC_LUMA, CHROMA_QUANT, DC_CHROMA, DC_LUMA,
                                   LUMA_QUANT, UNZIGZAG, ZIGZAG)


class TestQuality:
    def test_q50_is_base(self):
        luma, chroma = quality_to_tables(50)
        np.testing.assert_array_equal(luma, LUMA_QUANT)
        np.testing.assert_array_equal(chroma, CHROMA_QUANT)

    def test_q100_all_ones(self):
        for t in quality_to_tables(100):
            assert (t == 1).all()

    def test_q90_dc(self):
        assert quality_to_tables(90)[0][0, 0] == 3

    def test_low_quality_clamps_to_255(self):
        luma, chroma = quality_to_tables(1)
        assert luma.max() == 255 and chroma.min() == 255

    def test_q25_scale(self):
        # scale = 5000 // 25 = 200, entry 16 -> (3200 + 50) // 100 = 32
        assert quality_to_tables(25)[0][0, 0] == 32

    @pytest.mark.parametrize("q", [0, 101, 50.5, -3])
    def test_out_of_range(self, q):
        with pytest.raises(ValueError):
            quality_to_tables(q)

    def test_entries_in_range_and_monotone(self):
        prev = None
        for q in range(1, 101):
            luma, chroma = quality_to_tables(q)
            assert luma.min() >= 1 and luma.max() <= 255
            if prev is not None:
                assert np.all(luma <= prev)
            prev = luma


class TestZigzag:
    def test_permutation(self):
        assert sorted(ZIGZAG.tolist()) == list(range(64))
        np.testing.assert_array_equal(ZIGZAG[UNZIGZAG], np.arange(64))

    def test_walks_antidiagonals(self):
        diag = [(k // 8) + (k % 8) for k in ZIGZAG]
        assert diag == sorted(diag)
        for a, b in zip(ZIGZAG[:-1], ZIGZAG[1:]):
            (ya, xa), (yb, xb) = divmod(int(a), 8), divmod(int(b), 8)
            assert max(abs(ya - yb), abs(xa - xb)) == 1


class TestHuffmanSpecs:
    @pytest.mark.parametrize("spec", [DC_LUMA, DC_CHROMA, AC_LUMA, AC_CHROMA])
    def test_prefix_free_and_complete(self, spec):
        bits, values = spec
        assert sum(bits) == len(values) == len(set(values))
        kraft = sum(n * 2.0 ** -(i + 1) for i, n in enumerate(bits))
        assert kraft < 1  # the all-ones code is reserved
        t = HuffmanTable(bits, values)
        codes = [format(int(t.codes[v]), f"0{int(t.sizes[v])}b") for v in values]
        for a in codes:
            assert "1" * len(a) != a
            for b in codes:
                assert a == b or not b.startswith(a)

    @pytest.mark.parametrize("spec", [AC_LUMA, AC_CHROMA])
    def test_ac_alphabet(self, spec):
        want = {0x00, 0xF0} | {(r << 4) | s for r in range(16) for s in range(1, 11)}
        assert set(spec[1]) == want

    @pytest.mark.parametrize("spec", [DC_LUMA, DC_CHROMA])
    def test_dc_alphabet(self, spec):
        assert set(spec[1]) == set(range(12))


class TestDct:
    def test_flat_128_is_zero(self):
        np.testing.assert_allclose(fdct_block(np.zeros((8, 8))), 0, atol=1e-12)

    def test_flat_255(self):
        c = fdct_block(np.full((8, 8), 255 - 128.0))
        assert c[0, 0] == pytest.approx(1016)
        c[0, 0] = 0
        np.testing.assert_allclose(c, 0, atol=1e-10)

    def test_inverse_cases(self):
        np.testing.assert_allclose(idct_block(np.zeros((8, 8))) + 128, 128, atol=1e-12)
        dc = np.zeros((8, 8))
        dc[0, 0] = 1016
        np.testing.assert_allclose(idct_block(dc) + 128, 255, atol=1e-10)

    def test_against_definition(self, rng):
        for _ in range(25):
            s = rng.uniform(-128, 127, (8, 8))
            S = fdct_block(s)
            np.testing.assert_allclose(S, dct_oracle(s), atol=1e-10)
            np.testing.assert_allclose(idct_block(S), idct_oracle(S), atol=1e-10)

    def test_batched_round_trip(self, rng):
        blocks = rng.uniform(-128, 127, (5, 7, 8, 8))
        np.testing.assert_allclose(idct_block(fdct_block(blocks)), blocks, atol=1e-10)


class TestQuantize:
    def test_rounding(self):
        t = np.full((8, 8), 16)
        c = np.zeros((8, 8))
        c[0, 0], c[0, 1], c[0, 2], c[0, 3] = 16, -24, 24, -7.99
        q = quantize_block(c, t)
        assert (q[0, 0], q[0, 1], q[0, 2], q[0, 3]) == (1, -2, 2, 0)

    def test_unit_table_rounds_only(self, rng):
        c = rng.uniform(-500, 500, (8, 8))
        q = quantize_block(c, np.ones((8, 8), np.int32))
        np.testing.assert_array_equal(q, np.sign(c) * np.floor(np.abs(c) + 0.5))
