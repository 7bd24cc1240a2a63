"""
From relevance to an 8x8 block map
==================================

Pixels at or above the mean relevance magnitude form the mask. Dilation
adds a margin, and any block touched by the mask becomes a region of
interest.
"""

import numpy as np

from rdic.roimask import block_project, dilate, threshold_mask

rng = np.random.default_rng(1)
rel = np.zeros((64, 64))
rel[20:28, 30:44] = rng.random((8, 14))
rel += 1e-3 * rng.random((64, 64))

mask = threshold_mask(rel)
print("thresholded coverage %.3f" % mask.mean())

grown = dilate(mask, radius=1, iterations=2)
print("after dilation       %.3f" % grown.mean())

blocks = block_project(grown)
print("RoI blocks: %d of %d" % (blocks.sum(), blocks.size))
for row in blocks:
    print("".join("#" if b else "." for b in row))
