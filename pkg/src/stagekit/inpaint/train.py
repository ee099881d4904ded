"""Two-stage inpainter training.

Stage A learns to hallucinate the edge map inside free-form holes from a
conventional adversarial loss, discriminator feature matching, and the
boundary-weighted L1 edge term (or plain L1 when that term is disabled).
Stage B completes RGB content from the masked image plus composed edges
under an L1 + adversarial objective (L1 weighted 10:1 for stability).

One free-form mask is drawn per step from a per-step derived seed and
shared across the batch. Training is deterministic given the seed: torch
runs single-threaded with deterministic algorithms, and every random draw
comes from explicitly seeded streams.
"""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from ..errors import InvalidInputError, TrainingDivergedError
from ..imaging import Image
from .edges import canny, to_grayscale
from .masks import FreeFormMaskParams, LossWeights, generate_freeform_mask, weight_map
from .model import InpainterModel

COMPLETION_L1_WEIGHT = 10.0
GEN_LR = 2e-4
DISC_LR = 1e-4


def mask_params_for(size: int, seed: int) -> FreeFormMaskParams:
    """Default stroke parameters scaled to the working resolution."""
    scale = size / 256.0
    return FreeFormMaskParams(
        brush_width=(max(2.0, 5.0 * scale), max(3.0, 25.0 * scale)),
        seed=seed,
    )


def step_seed(seed: int, step: int) -> int:
    return int(np.random.SeedSequence([seed, step]).generate_state(1)[0])


def train_inpainter(images: list[Image], w: LossWeights, steps: int, seed: int,
                    use_wbl: bool = True, *, batch_size: int = 8,
                    base_channels: int = 24, gen_lr: float = GEN_LR,
                    disc_lr: float = DISC_LR) -> InpainterModel:
    """Train on square same-size images; returns the model with a per-step
    ``history`` of logged loss terms."""
    import torch
    from ..networks import deterministic_mode
    from .loss import (adversarial_d_loss, adversarial_g_loss,
                       feature_matching_loss, wbl_tensor)

    if len(images) < 8:
        raise InvalidInputError(f"need at least 8 training images, got {len(images)}")
    if steps < 1:
        raise InvalidInputError(f"steps must be >= 1, got {steps}")
    size = images[0].width
    for img in images:
        if img.width != size or img.height != size:
            raise InvalidInputError("training images must be square and same-size")

    deterministic_mode(seed)
    model = InpainterModel.initialize(resolution=size, seed=seed,
                                      base_channels=base_channels,
                                      loss_config={**asdict(w), "use_wbl": use_wbl})

    x = np.stack([img.array for img in images]).astype(np.float32) / 255.0
    gray = np.stack([to_grayscale(img) for img in images]).astype(np.float32)
    gt_edges = np.stack([canny(to_grayscale(img)) for img in images]).astype(np.float32)

    x_t = torch.from_numpy(x).permute(0, 3, 1, 2)
    gray_t = torch.from_numpy(gray).unsqueeze(1)
    edges_t = torch.from_numpy(gt_edges).unsqueeze(1)

    opt_g1 = torch.optim.Adam(model.edge_gen.parameters(), lr=gen_lr, betas=(0.5, 0.999))
    opt_g2 = torch.optim.Adam(model.comp_gen.parameters(), lr=gen_lr, betas=(0.5, 0.999))
    opt_d1 = torch.optim.Adam(model.edge_disc.parameters(), lr=disc_lr, betas=(0.5, 0.999))
    opt_d2 = torch.optim.Adam(model.comp_disc.parameters(), lr=disc_lr, betas=(0.5, 0.999))

    batch_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBA7C4]))
    batch = min(batch_size, len(images))
    history: list[dict] = []

    for step in range(steps):
        idx = np.sort(batch_rng.choice(len(images), size=batch, replace=False))
        xb, gb, eb = x_t[idx], gray_t[idx], edges_t[idx]

        mask = generate_freeform_mask(mask_params_for(size, step_seed(seed, step)), size)
        m_np = mask.values.astype(np.float32)
        m = torch.from_numpy(m_np).expand(batch, 1, size, size)
        w_map = torch.from_numpy(
            weight_map(mask, w).values.astype(np.float32)).unsqueeze(0).unsqueeze(0)

        # --- stage A: edge generator -------------------------------------
        e_in = eb * (1.0 - m)
        g_in = gb * (1.0 - m)
        e_pred = model.edge_gen(torch.cat([g_in, e_in, m], dim=1))

        real_pair = torch.cat([eb, gb], dim=1)
        fake_pair = torch.cat([e_pred, gb], dim=1)

        real_logits, _ = model.edge_disc(real_pair)
        fake_logits_d, _ = model.edge_disc(fake_pair.detach())
        d1_loss = adversarial_d_loss(real_logits, fake_logits_d)
        opt_d1.zero_grad()
        d1_loss.backward()
        opt_d1.step()

        with torch.no_grad():
            _, real_feats = model.edge_disc(real_pair)
        fake_logits_g, fake_feats = model.edge_disc(fake_pair)
        adv1 = adversarial_g_loss(fake_logits_g)
        fm = feature_matching_loss(real_feats, fake_feats)
        wbl_val = wbl_tensor(eb, e_pred, w_map)
        edge_l1 = (eb - e_pred).abs().mean()
        edge_term = wbl_val if use_wbl else edge_l1
        g1_loss = w.w_adv * adv1 + w.w_fm * fm + w.w_wbl * edge_term
        opt_g1.zero_grad()
        g1_loss.backward()
        opt_g1.step()

        # --- stage B: completion ------------------------------------------
        e_comp = e_in + e_pred.detach() * m
        x_masked = xb * (1.0 - m)
        out = model.comp_gen(torch.cat([x_masked, e_comp], dim=1))
        merged = x_masked + out * m

        real_logits2, _ = model.comp_disc(xb)
        fake_logits2_d, _ = model.comp_disc(merged.detach())
        d2_loss = adversarial_d_loss(real_logits2, fake_logits2_d)
        opt_d2.zero_grad()
        d2_loss.backward()
        opt_d2.step()

        fake_logits2_g, _ = model.comp_disc(merged)
        adv2 = adversarial_g_loss(fake_logits2_g)
        comp_l1 = (out - xb).abs().mean()
        g2_loss = COMPLETION_L1_WEIGHT * comp_l1 + adv2
        opt_g2.zero_grad()
        g2_loss.backward()
        opt_g2.step()

        record = {
            "step": step,
            "d_edge": d1_loss.item(), "adv_edge": adv1.item(), "fm": fm.item(),
            "wbl": wbl_val.item(), "edge_l1": edge_l1.item(),
            "d_comp": d2_loss.item(), "adv_comp": adv2.item(),
            "comp_l1": comp_l1.item(),
        }
        if not all(np.isfinite(v) for k, v in record.items() if k != "step"):
            raise TrainingDivergedError(step)
        history.append(record)

    model.history = history
    return model
