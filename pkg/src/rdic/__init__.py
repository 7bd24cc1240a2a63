"""Relevance-guided dynamic image compression.

Explain a classifier with epsilon-LRP, threshold and dilate the relevance
into a region-of-interest mask, and emit one baseline JPEG whose RoI blocks
keep high-quality quantization while background blocks are requantized at a
lower quality.
"""

from .imagecore import Image, read_pnm, region_metrics, write_pnm
from .jpegcodec import decode, encode, encode_region_adaptive, quality_to_tables
from .lrp import relevance_of_image
from .nn import Network, forward, load_network
from .pipeline import RdicConfig, benchmark_corpus, run_rdic, run_rdic_external
from .roimask import block_project, dilate, threshold_mask

__version__ = "0.1.0"

__all__ = [
    "Image", "read_pnm", "write_pnm", "region_metrics",
    "decode", "encode", "encode_region_adaptive", "quality_to_tables",
    "relevance_of_image", "Network", "forward", "load_network",
    "RdicConfig", "run_rdic", "run_rdic_external", "benchmark_corpus",
    "block_project", "dilate", "threshold_mask",
]
