"""
Inside one hybrid sequence layer
================================

The masking network's layer splits its channels between a multi-head
attention path and a depthwise-separable convolution path that run side
by side. This script walks a toy sequence through one layer and shows
where the parameters live.
"""

import numpy as np

from casep.analyzer import count_table, layer_param_counts
from casep.blocks import HybridLayer
from casep.config import PathConfig
from casep.tensor import Tensor, no_grad

cfg = PathConfig(width=16, attn_channels=8, conv_channels=8,
                 heads=2, kernel=5, ffn_dim=32)
layer = HybridLayer(cfg, np.random.default_rng(0))

# one batch of 10 frames, 16 channels
x = Tensor(np.random.default_rng(1).standard_normal((1, 10, 16)).astype(np.float32))
with no_grad():
    y = layer(x)
print("input ", x.shape, "-> output", y.shape)

counts = layer_param_counts(cfg)
print("\nparameters by component")
for name, n in counts.items():
    print(f"  {name:18s} {n:6d}")

# Running both paths on half the channels is much cheaper than stacking
# them serially at full width. At width 256 with a 51-tap kernel:
table = count_table(256, 51)
print("\nper-layer weight counts at width 256, kernel 51")
print(f"  attention only       {table['mha']:9,d}")
print(f"  separable conv only  {table['sepconv']:9,d}")
print(f"  serial stack         {table['serial']:9,d}")
print(f"  parallel split       {table['parallel']:9,d}")
print(f"  split/serial ratio   {table['parallel'] / table['serial']:9.2f}")
