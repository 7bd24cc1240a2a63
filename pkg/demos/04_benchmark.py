"""
Corpus benchmark
================

Write the synthetic corpus to disk, give each image a relevance file, and
compare total sizes: raw PNM, uniform q=100 and the region-adaptive files.
"""

import tempfile
from pathlib import Path

import numpy as np

from rdic.corpus import write_corpus
from rdic.imagecore import write_pfm
from rdic.pipeline import benchmark_corpus

rng = np.random.default_rng(2)
with tempfile.TemporaryDirectory() as tmp:
    for path in write_corpus(tmp):
        # one bright rectangle of relevance per image
        rel = np.zeros((512, 512))
        y, x = rng.integers(0, 320, 2)
        rel[y:y + 200, x:x + 200] = 1.0
        write_pfm(rel, Path(tmp) / (path.stem + ".pfm"))
    summary = benchmark_corpus(tmp)

for key in ("total_original_bytes", "total_uniform_roi_bytes", "total_rdic_bytes"):
    print("%-26s %9d" % (key, summary[key]))
for key in ("uniform_roi_over_original", "rdic_over_uniform_roi", "rdic_over_original"):
    print("%-26s %9.3f" % (key, summary[key]))
