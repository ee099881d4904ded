"""Two-stage inpainting model (edge prediction + completion) and the
oracle test double.

The merge contract is enforced here, not in the networks: whatever the
generators produce, output pixels outside the hole equal the input
bit-exactly, for trained and untrained models alike.
"""

from __future__ import annotations

from pathlib import Path
from typing import Protocol

import numpy as np

from ..checkpoint import load_checkpoint, save_checkpoint
from ..errors import InvalidInputError
from ..imaging import BinaryMask, Image
from .edges import canny, to_grayscale

MODEL_VERSION = "inpainter-v1"


class Inpainter(Protocol):
    """Anything that fills mask-true holes while leaving the rest intact."""

    def inpaint(self, img: Image, hole: BinaryMask) -> Image: ...


def merge_into_hole(img: Image, hole: BinaryMask, generated: np.ndarray) -> Image:
    """img outside the hole (bit-exact), generated content inside.

    ``generated`` is float in [0, 1], shape (h, w, 3); it is quantized with
    round-half-up.
    """
    if hole.values.shape != img.array.shape[:2]:
        raise InvalidInputError(
            f"hole {hole.values.shape} does not match image {img.array.shape[:2]}")
    gen_u8 = np.clip(np.floor(generated * 255.0 + 0.5), 0, 255).astype(np.uint8)
    return Image(np.where(hole.values[:, :, None], gen_u8, img.array), img.id)


class OracleInpainter:
    """Test double that fills holes from a stored clean plate."""

    def __init__(self, plate: Image):
        self.plate = plate

    def inpaint(self, img: Image, hole: BinaryMask) -> Image:
        if img.array.shape != self.plate.array.shape:
            raise InvalidInputError("oracle plate dimensions do not match input")
        if hole.values.shape != img.array.shape[:2]:
            raise InvalidInputError("hole dimensions do not match input")
        out = np.where(hole.values[:, :, None], self.plate.array, img.array)
        return Image(out, img.id)


class InpainterModel:
    """Edge generator + completion generator with their discriminators.

    Construct via ``initialize`` (fresh, seeded) or ``load`` (checkpoint).
    ``config`` records resolution, base channel width, loss weights, and a
    version tag; checkpoints round-trip to bit-identical outputs.
    """

    def __init__(self, edge_gen, comp_gen, edge_disc, comp_disc, config: dict):
        self.edge_gen = edge_gen
        self.comp_gen = comp_gen
        self.edge_disc = edge_disc
        self.comp_disc = comp_disc
        self.config = config
        self.history: list[dict] = []

    # -- construction --------------------------------------------------------

    @classmethod
    def initialize(cls, resolution: int, seed: int, base_channels: int = 24,
                   loss_config: dict | None = None) -> "InpainterModel":
        import torch
        from ..networks import Generator, PatchDiscriminator

        if resolution % 4 != 0:
            raise InvalidInputError("resolution must be divisible by 4")
        torch.manual_seed(seed)
        edge_gen = Generator(in_channels=3, out_channels=1, base=base_channels)
        comp_gen = Generator(in_channels=4, out_channels=3, base=base_channels)
        edge_disc = PatchDiscriminator(in_channels=2, base=base_channels)
        comp_disc = PatchDiscriminator(in_channels=3, base=base_channels)
        config = {
            "version": MODEL_VERSION,
            "resolution": resolution,
            "base_channels": base_channels,
            "seed": seed,
            "loss": loss_config or {},
        }
        return cls(edge_gen, comp_gen, edge_disc, comp_disc, config)

    def save(self, path: str | Path) -> None:
        from ..networks import state_to_numpy

        tensors: dict[str, np.ndarray] = {}
        for prefix, module in (("edge_gen", self.edge_gen),
                               ("comp_gen", self.comp_gen),
                               ("edge_disc", self.edge_disc),
                               ("comp_disc", self.comp_disc)):
            for name, arr in state_to_numpy(module).items():
                tensors[f"{prefix}.{name}"] = arr
        save_checkpoint(path, self.config, tensors)

    @classmethod
    def load(cls, path: str | Path) -> "InpainterModel":
        from ..networks import load_numpy_state

        config, tensors = load_checkpoint(path)
        if config.get("version") != MODEL_VERSION:
            raise InvalidInputError(
                f"checkpoint version {config.get('version')!r} is not {MODEL_VERSION!r}")
        model = cls.initialize(resolution=config["resolution"], seed=config.get("seed", 0),
                               base_channels=config["base_channels"],
                               loss_config=config.get("loss") or {})
        model.config = config
        for prefix, module in (("edge_gen", model.edge_gen),
                               ("comp_gen", model.comp_gen),
                               ("edge_disc", model.edge_disc),
                               ("comp_disc", model.comp_disc)):
            load_numpy_state(module, tensors, prefix)
        return model

    # -- inference -----------------------------------------------------------

    def generate(self, img: Image, hole: BinaryMask) -> np.ndarray:
        """Raw completion output in [0, 1] before the hole merge."""
        import torch

        x = img.array.astype(np.float32) / 255.0
        m = hole.values.astype(np.float32)
        gray = to_grayscale(img).astype(np.float32)
        gray_masked = gray * (1.0 - m)
        edges_in = (canny(gray_masked.astype(np.float64)) * (1.0 - m)).astype(np.float32)

        t = lambda a: torch.from_numpy(a).unsqueeze(0).unsqueeze(0)  # noqa: E731
        with torch.no_grad():
            e_pred = self.edge_gen(torch.cat(
                [t(gray_masked), t(edges_in), t(m)], dim=1))
            e_comp = t(edges_in) * (1.0 - t(m)) + e_pred * t(m)
            img_masked = torch.from_numpy(x * (1.0 - m[:, :, None]))
            img_masked = img_masked.permute(2, 0, 1).unsqueeze(0)
            out = self.comp_gen(torch.cat([img_masked, e_comp], dim=1))
        return out.squeeze(0).permute(1, 2, 0).numpy().astype(np.float64)

    def inpaint(self, img: Image, hole: BinaryMask) -> Image:
        res = self.config["resolution"]
        if img.width != res or img.height != res:
            raise InvalidInputError(
                f"model resolution is {res}, image is {img.width}x{img.height}")
        if hole.values.shape != img.array.shape[:2]:
            raise InvalidInputError("hole dimensions do not match image")
        if not hole.values.any():
            return Image(img.array.copy(), img.id)
        return merge_into_hole(img, hole, self.generate(img, hole))


def inpaint(model: Inpainter, img: Image, hole: BinaryMask) -> Image:
    """Fill mask-true pixels with generated content; everything else is the
    input, bit-exact."""
    return model.inpaint(img, hole)
