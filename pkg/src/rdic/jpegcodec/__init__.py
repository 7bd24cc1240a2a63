"""Self-contained baseline JPEG codec with region-adaptive requantization."""

from .codec import (HuffmanDecodeError, JpegError, MarkerError, TruncatedStreamError,
                    UnsupportedJpegError, decode, decode_coefficients, decode_planes, encode,
                    encode_region_adaptive, quantized_coefficients)
from .dct import dequantize_block, fdct_block, idct_block, quantize_block
from .tables import CHROMA_QUANT, LUMA_QUANT, ZIGZAG, quality_to_tables

__all__ = [
    "JpegError", "MarkerError", "HuffmanDecodeError", "TruncatedStreamError",
    "UnsupportedJpegError", "encode", "encode_region_adaptive", "decode",
    "decode_coefficients", "decode_planes", "quantized_coefficients", "fdct_block", "idct_block",
    "quantize_block", "dequantize_block", "quality_to_tables", "LUMA_QUANT",
    "CHROMA_QUANT", "ZIGZAG",
]
