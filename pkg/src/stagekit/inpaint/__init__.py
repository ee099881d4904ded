"""Hole-filling generator with boundary-weighted edge supervision.

Submodules:

- ``masks``: free-form brush-stroke training masks, boundary bands, and
  the two-level pixel weight maps built from them.
- ``edges``: Canny edge maps used as the intermediate training target.
- ``loss``: the boundary-weighted L1 edge loss and GAN loss helpers.
- ``model``: the two-stage (edge + completion) inpainter, checkpointing,
  and the oracle test double.
- ``train``: the training loop.
"""

from .masks import (FreeFormMaskParams, LossWeights, WeightedMap,
                    boundary_band, generate_freeform_mask, weight_map)
from .edges import EdgeMap, extract_edges
from .loss import wbl
from .model import InpainterModel, OracleInpainter, inpaint
from .train import train_inpainter

__all__ = [
    "FreeFormMaskParams", "LossWeights", "WeightedMap", "boundary_band",
    "generate_freeform_mask", "weight_map", "EdgeMap", "extract_edges",
    "wbl", "InpainterModel", "OracleInpainter", "inpaint", "train_inpainter",
]
