"""Salient product detection and segmentation.

Two backends produce per-pixel foreground probability maps:

- ``border-contrast``: deterministic, dependency-free scorer. Per pixel,
  the Euclidean RGB distance to the median color of the 1-pixel image
  border, over 255*sqrt(3), followed by one global max-normalization when
  the maximum exceeds zero. Exact on solid-background images, so the test
  suite runs without any model download.
- ``u2net``: loads a pretrained TorchScript saliency network from a local
  weights file (configuration key ``saliency.model_path``).

Probability maps binarize at a strict 0.5 threshold by default: a pixel is
foreground iff its score is strictly greater than the threshold, so a
degenerate all-0.5 map stays background.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BackendUnavailableError, InvalidInputError
from .imaging import BinaryMask, Color, Image, SaliencyMap, WHITE, composite, uniform_image

_MAX_RGB_DIST = 255.0 * np.sqrt(3.0)


@dataclass(frozen=True)
class SaliencyConfig:
    threshold: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.threshold < 1.0):
            raise InvalidInputError(
                f"threshold must lie strictly inside (0, 1), got {self.threshold}")


class SaliencyBackend:
    """Deterministic image -> saliency-map scorer."""

    name: str

    def detect(self, img: Image) -> SaliencyMap:
        raise NotImplementedError


class BorderContrastSaliency(SaliencyBackend):
    name = "border-contrast"

    def detect(self, img: Image) -> SaliencyMap:
        arr = img.array.astype(np.float64)
        border = np.concatenate([
            arr[0, :, :], arr[-1, :, :],
            arr[1:-1, 0, :], arr[1:-1, -1, :],
        ]) if img.height > 1 else arr[0, :, :]
        median = np.median(border, axis=0)
        dist = np.sqrt(((arr - median) ** 2).sum(axis=2)) / _MAX_RGB_DIST
        peak = float(dist.max())
        if peak > 0.0:
            dist = dist / peak
        return SaliencyMap(dist)


class U2NetSaliency(SaliencyBackend):
    """Pretrained saliency network behind a TorchScript file.

    The model must map a (1, 3, H, W) float tensor in [0, 1] to a
    (1, 1, H, W) probability tensor (or a tuple whose first element is
    one). Kept optional: nothing in the test suite needs it.
    """

    name = "u2net"

    def __init__(self, model_path: str | Path, input_size: int = 320):
        path = Path(model_path)
        if not path.is_file():
            raise BackendUnavailableError(f"saliency model file not found: {path}")
        try:
            import torch
            self._torch = torch
            self._model = torch.jit.load(str(path), map_location="cpu")
            self._model.eval()
        except Exception as exc:  # noqa: BLE001 - any load failure means unavailable
            raise BackendUnavailableError(f"cannot load saliency model {path}: {exc}") from exc
        self.input_size = input_size

    def detect(self, img: Image) -> SaliencyMap:
        torch = self._torch
        from PIL import Image as PILImage

        pil = PILImage.fromarray(img.array).resize(
            (self.input_size, self.input_size), PILImage.Resampling.BILINEAR)
        x = torch.from_numpy(np.asarray(pil).astype(np.float32) / 255.0)
        x = x.permute(2, 0, 1).unsqueeze(0)
        with torch.no_grad():
            out = self._model(x)
        if isinstance(out, (tuple, list)):
            out = out[0]
        prob = out.squeeze().clamp(0, 1).numpy().astype(np.float64)
        back = PILImage.fromarray((prob * 255).astype(np.uint8), mode="L").resize(
            (img.width, img.height), PILImage.Resampling.BILINEAR)
        return SaliencyMap(np.asarray(back).astype(np.float64) / 255.0)


def make_saliency_backend(name: str, model_path: str | Path | None = None) -> SaliencyBackend:
    if name == "border-contrast":
        return BorderContrastSaliency()
    if name == "u2net":
        if model_path is None:
            raise BackendUnavailableError("u2net backend needs saliency.model_path")
        return U2NetSaliency(model_path)
    raise InvalidInputError(f"unknown saliency backend {name!r}")


def detect_saliency(img: Image, backend: SaliencyBackend) -> SaliencyMap:
    smap = backend.detect(img)
    if smap.values.shape != img.array.shape[:2]:
        raise InvalidInputError(
            f"backend {backend.name} returned {smap.values.shape} for image "
            f"{img.array.shape[:2]}")
    return smap


def binarize(smap: SaliencyMap, cfg: SaliencyConfig = SaliencyConfig()) -> BinaryMask:
    """Foreground where the probability strictly exceeds the threshold."""
    return BinaryMask(smap.values > cfg.threshold)


def segment_product(img: Image, mask: BinaryMask, fill: Color = WHITE) -> Image:
    """Keep mask-true pixels, replace everything else with the fill color."""
    if mask.values.shape != img.array.shape[:2]:
        raise InvalidInputError(
            f"mask {mask.values.shape} does not match image {img.array.shape[:2]}")
    return composite(uniform_image(img.width, img.height, fill, img.id), img, mask)
