"""End-to-end RDIC: relevance -> mask -> dilation -> block map -> adaptive JPEG.

Every run decodes its own output and reports sizes and RoI / background
PSNR. :func:`benchmark_corpus` aggregates those reports over a directory
the same way a dataset-level size comparison would (original vs uniform
high quality vs RDIC).
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .imagecore import Image, PnmError, pnm_bytes, read_pfm, read_pnm, region_metrics
from .jpegcodec import decode, encode, encode_region_adaptive
from .jpegcodec.tables import quality_scale
from .lrp import DEFAULT_EPSILON, relevance_of_image
from .nn import Network
from .roimask import block_project, dilate, expand_blocks, spatial_relevance, threshold_mask

__all__ = [
    "RdicConfig",
    "CompressionReport",
    "PipelineError",
    "run_rdic",
    "run_rdic_external",
    "compress_with_mask",
    "benchmark_corpus",
]

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``cause`` is the original error."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RdicConfig:
    q_roi: int = 100
    q_bg: int = 50
    epsilon: float = DEFAULT_EPSILON
    dilate_radius: int = 1
    dilate_iterations: int = 2
    seed_mode: object = "argmax"

    def __post_init__(self):
        quality_scale(self.q_roi)
        quality_scale(self.q_bg)
        if self.q_roi < self.q_bg:
            raise ValueError(f"q_roi ({self.q_roi}) must be >= q_bg ({self.q_bg})")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if self.dilate_radius < 0 or self.dilate_iterations < 0:
            raise ValueError("dilation radius and iterations must be >= 0")


def _json_float(x):
    if math.isinf(x):
        return "inf"
    return x


@dataclass
class CompressionReport:
    input_bytes: int
    output_bytes: int
    compression_ratio: float
    mask_coverage_fraction: float
    roi_block_fraction: float
    psnr_total_db: float
    psnr_roi_db: float
    psnr_bg_db: float
    q_roi: int
    q_bg: int
    timings: dict = field(default_factory=dict)

    def to_dict(self, timings=True) -> dict:
        d = asdict(self)
        for k in ("psnr_total_db", "psnr_roi_db", "psnr_bg_db"):
            d[k] = _json_float(d[k])
        if not timings:
            d.pop("timings")
        return d

    def to_json(self, timings=True) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=False)


class _Timer:
    def __init__(self, timings, stage):
        self.timings, self.stage = timings, stage

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.stage] = (time.perf_counter() - self.t0) * 1e3
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self.stage, exc) from exc


def _finish(img, mask, blocks, cfg, timings):
    with _Timer(timings, "encode"):
        stream = encode_region_adaptive(img, blocks, cfg.q_roi, cfg.q_bg)
    with _Timer(timings, "evaluate"):
        decoded = decode(stream)
        metrics = region_metrics(img, decoded, expand_blocks(blocks, img.height, img.width))
    input_bytes = len(pnm_bytes(img))
    report = CompressionReport(
        input_bytes=input_bytes,
        output_bytes=len(stream),
        compression_ratio=len(stream) / input_bytes,
        mask_coverage_fraction=float(np.mean(mask)),
        roi_block_fraction=float(np.mean(blocks)),
        psnr_total_db=metrics.psnr_total_db,
        psnr_roi_db=metrics.psnr_roi_db,
        psnr_bg_db=metrics.psnr_bg_db,
        q_roi=cfg.q_roi,
        q_bg=cfg.q_bg,
        timings=timings,
    )
    return stream, mask, report


def _mask_from_relevance(img, rel, cfg, timings):
    with _Timer(timings, "mask"):
        rel = spatial_relevance(rel)
        if rel.shape != (img.height, img.width):
            raise ValueError(f"relevance {rel.shape} does not match image {(img.height, img.width)}")
        mask = threshold_mask(rel)
        mask = dilate(mask, cfg.dilate_radius, cfg.dilate_iterations)
        blocks = block_project(mask)
    return mask, blocks


def run_rdic_external(img: Image, rel, cfg: RdicConfig = RdicConfig(), timings=None):
    """RDIC from a precomputed relevance map ``(h, w)`` or ``(c, h, w)``.

    Returns ``(jpeg_bytes, mask, report)``.
    """
    timings = {} if timings is None else timings
    mask, blocks = _mask_from_relevance(img, rel, cfg, timings)
    return _finish(img, mask, blocks, cfg, timings)


def run_rdic(img: Image, net: Network, cfg: RdicConfig = RdicConfig()):
    """Full chain: forward pass + epsilon-LRP on ``net``, then as :func:`run_rdic_external`."""
    timings = {}
    with _Timer(timings, "relevance"):
        expected = (img.channels, img.height, img.width)
        if net.input_shape != expected:
            raise ValueError(f"image shape {expected} does not match network input {net.input_shape}")
        rel = relevance_of_image(net, img, cfg.epsilon, cfg.seed_mode)
    return run_rdic_external(img, rel, cfg, timings)


def compress_with_mask(img: Image, mask, q_roi=100, q_bg=50):
    """Adaptive encode with a caller-supplied pixel mask (no dilation)."""
    cfg = RdicConfig(q_roi=q_roi, q_bg=q_bg)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (img.height, img.width):
        raise PipelineError("mask", ValueError(f"mask {mask.shape} does not match image"))
    timings = {}
    with _Timer(timings, "mask"):
        blocks = block_project(mask)
    return _finish(img, mask, blocks, cfg, timings)


def _corpus_files(directory):
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in (".pgm", ".ppm", ".pnm"))


def benchmark_corpus(directory, net=None, cfg: RdicConfig = RdicConfig(), report_path=None,
                     relevance_suffix=".pfm", csv_path=None) -> dict:
    """RDIC vs uniform-quality sizes over every PNM image in ``directory``.

    Relevance comes from a sibling ``<stem><relevance_suffix>`` PFM when one
    exists, otherwise from ``net``. Unreadable or unusable images are skipped
    with a warning.
    """
    files = _corpus_files(directory)
    if not files:
        raise PipelineError("corpus", FileNotFoundError(f"no PNM images in {directory}"))
    rows = []
    for path in files:
        try:
            img = read_pnm(path)
            rel_path = path.with_name(path.stem + relevance_suffix)
            if rel_path.exists():
                stream, _, report = run_rdic_external(img, read_pfm(rel_path), cfg)
            elif net is not None:
                stream, _, report = run_rdic(img, net, cfg)
            else:
                log.warning("skipping %s: no relevance file and no model", path.name)
                continue
        except (OSError, PnmError, PipelineError) as e:
            log.warning("skipping %s: %s", path.name, e)
            continue
        rows.append({
            "image": path.name,
            "uniform_roi_bytes": len(encode(img, cfg.q_roi)),
            "uniform_bg_bytes": len(encode(img, cfg.q_bg)),
            **report.to_dict(timings=False),
        })
    if not rows:
        raise PipelineError("corpus", ValueError(f"no usable images in {directory}"))

    def total(key):
        return int(sum(r[key] for r in rows))

    orig, uroi, ubg, rdic = (total(k) for k in
                             ("input_bytes", "uniform_roi_bytes", "uniform_bg_bytes", "output_bytes"))
    summary = {
        "images": len(rows),
        "q_roi": cfg.q_roi,
        "q_bg": cfg.q_bg,
        "total_original_bytes": orig,
        "total_uniform_roi_bytes": uroi,
        "total_uniform_bg_bytes": ubg,
        "total_rdic_bytes": rdic,
        "uniform_roi_over_original": uroi / orig,
        "rdic_over_uniform_roi": rdic / uroi,
        "rdic_over_original": rdic / orig,
        "per_image": rows,
    }
    if report_path is not None:
        Path(report_path).write_text(json.dumps(summary, indent=2))
    if csv_path is not None:
        with open(csv_path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return summary
