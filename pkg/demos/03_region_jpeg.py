"""
One JPEG, two qualities
=======================

Background blocks are quantized coarsely, then re-expressed on the fine
tables, so any baseline decoder reads the file. RoI pixels come back
exactly as a uniform high-quality encode would give them.
"""

import numpy as np

from rdic.corpus import natural_photo
from rdic.imagecore import region_metrics
from rdic.jpegcodec import decode, encode, encode_region_adaptive
from rdic.roimask import expand_blocks

img = natural_photo()
blocks = np.zeros((64, 64), bool)
blocks[8:32, 16:40] = True  # roughly the face

for q in (50, 100):
    print("uniform q=%d: %d bytes" % (q, len(encode(img, q))))

stream = encode_region_adaptive(img, blocks, q_roi=100, q_bg=50)
print("adaptive 100/50: %d bytes" % len(stream))

roi = expand_blocks(blocks, img.height, img.width)
out = decode(stream)
ref = decode(encode(img, 100))
print("RoI pixels identical to q=100:", np.array_equal(out.pixels[roi], ref.pixels[roi]))

m = region_metrics(img, out, roi)
print("PSNR roi %.2f dB, background %.2f dB" % (m.psnr_roi_db, m.psnr_bg_db))
