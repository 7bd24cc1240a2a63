"""
Relevance of a tiny classifier
==============================

Epsilon-LRP hands the winning logit back through the network, one layer at
a time, until every input pixel holds a share of it.
"""

import numpy as np

from rdic.lrp import relevance_of_image
from rdic.nn import Layer, Network, random_network

# The smallest case: one dense unit, two inputs. Contributions are 2*1 and
# 1*2, so the seed of 4 splits evenly.
net = Network([Layer("dense", [[2.0, 1.0]], [0.0])], (2,))
x = np.array([1.0, 2.0])
print(relevance_of_image(net, x, eps=0.0))
print(relevance_of_image(net, x, eps=0.5))  # eps absorbs some relevance

# A random conv net on a 32x32 RGB tensor
net = random_network((3, 32, 32), seed=0)
x = np.random.default_rng(0).random((3, 32, 32))
rel = relevance_of_image(net, x)
print(rel.shape, "total relevance %.4f" % rel.sum())

# Summed over colour channels, the map is what the mask stage consumes
spatial = rel.sum(axis=0)
print("share of pixels with nonzero relevance: %.2f" % np.mean(spatial != 0))
