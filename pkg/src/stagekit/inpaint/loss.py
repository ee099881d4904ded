"""Boundary-weighted edge loss and GAN loss helpers.

The boundary-weighted loss multiplies the pixel-wise L1 distance between
ground-truth and predicted edge maps by a two-level weight map, then takes
the mean over all pixels, so its magnitude is resolution-independent.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError
from .edges import EdgeMap
from .masks import WeightedMap


def wbl(e_gt: EdgeMap, e_pred: EdgeMap, w: WeightedMap) -> float:
    """mean over pixels of w * |e_gt - e_pred|."""
    if e_gt.values.shape != e_pred.values.shape or e_gt.values.shape != w.values.shape:
        raise InvalidInputError(
            f"shape mismatch: gt {e_gt.values.shape}, pred {e_pred.values.shape}, "
            f"weights {w.values.shape}")
    return float(np.mean(w.values * np.abs(e_gt.values - e_pred.values)))


def wbl_tensor(e_gt, e_pred, weights):
    """Torch analogue of ``wbl`` used inside the training loop.

    Accepts (N, 1, H, W) tensors; weights broadcast over the batch.
    """
    return (weights * (e_gt - e_pred).abs()).mean()


def adversarial_g_loss(fake_logits):
    """Non-saturating generator loss: push D(fake) toward real."""
    import torch.nn.functional as F
    import torch

    return F.binary_cross_entropy_with_logits(
        fake_logits, torch.ones_like(fake_logits))


def adversarial_d_loss(real_logits, fake_logits):
    """Discriminator cross-entropy on real vs fake logits."""
    import torch.nn.functional as F
    import torch

    real = F.binary_cross_entropy_with_logits(real_logits, torch.ones_like(real_logits))
    fake = F.binary_cross_entropy_with_logits(fake_logits, torch.zeros_like(fake_logits))
    return 0.5 * (real + fake)


def feature_matching_loss(real_feats, fake_feats):
    """Mean L1 distance over paired discriminator activations."""
    total = None
    for rf, ff in zip(real_feats, fake_feats):
        term = (rf.detach() - ff).abs().mean()
        total = term if total is None else total + term
    return total / len(real_feats)
