"""Parallax animation: the product sweeps over a staged background that
moves with it at a reduced ratio, creating an illusion of depth.

The clean plate is inpainted once over the whole (dilated) product hole
rather than per frame: every gap any frame can expose is a subset of that
hole, and a single plate is temporally stable. All shifts are integer
pixels to avoid resampling shimmer. The background is pre-enlarged by an
overscan margin (edge replication) so its own motion never exposes void.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, EmptyMaskError, InvalidInputError
from .imaging import BinaryMask, Image, composite, round_half_up, save_image_png
from .inpaint.model import Inpainter

DEFAULT_BG_RATIO = 0.3
PLATE_DILATION_PX = 3
PATH_SINUSOIDAL_H = "sinusoidal-horizontal"


@dataclass(frozen=True)
class ParallaxConfig:
    frames: int
    amplitude: float
    bg_ratio: float = DEFAULT_BG_RATIO
    path: str = PATH_SINUSOIDAL_H
    overscan: int | None = None  # defaults to ceil(amplitude)

    def __post_init__(self):
        if self.frames < 1:
            raise ConfigurationError(f"frames must be >= 1, got {self.frames}")
        if self.amplitude < 0:
            raise ConfigurationError(f"amplitude must be >= 0, got {self.amplitude}")
        if not (0.0 <= self.bg_ratio < 1.0):
            raise ConfigurationError(
                f"bg_ratio must lie in [0, 1), got {self.bg_ratio}")
        if self.path != PATH_SINUSOIDAL_H:
            raise ConfigurationError(f"unknown path {self.path!r}")
        if self.overscan is None:
            object.__setattr__(self, "overscan", int(math.ceil(self.amplitude)))
        if self.overscan < self.amplitude:
            raise ConfigurationError(
                f"overscan {self.overscan} is below amplitude {self.amplitude}")

    def foreground_dx(self, t: int) -> int:
        return round_half_up(self.amplitude * math.sin(2.0 * math.pi * t / self.frames))

    def background_dx(self, t: int) -> int:
        return round_half_up(self.bg_ratio * self.foreground_dx(t))


@dataclass(frozen=True)
class FrameSequence:
    frames: tuple[Image, ...]
    displacements: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.frames) != len(self.displacements):
            raise InvalidInputError("frames and displacements must align")

    def __len__(self) -> int:
        return len(self.frames)


def make_clean_plate(img: Image, mask: BinaryMask, inpainter: Inpainter,
                     dilation: int = PLATE_DILATION_PX) -> Image:
    """Inpaint the product away over a slightly dilated hole; pixels
    outside the dilated hole equal the input bit-exactly."""
    if mask.is_empty():
        raise EmptyMaskError("clean plate needs a non-empty product mask")
    dilated = ndimage.maximum_filter(
        mask.values.astype(np.uint8), size=2 * dilation + 1, mode="constant", cval=0)
    return inpainter.inpaint(img, BinaryMask(dilated == 1))


def _shift_horizontal(arr: np.ndarray, dx: int) -> np.ndarray:
    """Shift columns by dx (positive = rightward); vacated area is zero."""
    out = np.zeros_like(arr)
    w = arr.shape[1]
    if dx >= 0:
        out[:, dx:] = arr[:, :w - dx] if dx else arr
    else:
        out[:, :w + dx] = arr[:, -dx:]
    return out


def render_frames(img: Image, mask: BinaryMask, plate: Image,
                  cfg: ParallaxConfig) -> FrameSequence:
    """One frame per t: background shifted by bg_ratio * dx(t) (from the
    overscan-padded plate), product cutout and mask shifted by dx(t)."""
    if plate.array.shape != img.array.shape:
        raise InvalidInputError("plate dimensions do not match image")
    if mask.values.shape != img.array.shape[:2]:
        raise InvalidInputError("mask dimensions do not match image")
    pad = int(cfg.overscan)
    padded = np.pad(plate.array, ((0, 0), (pad, pad), (0, 0)), mode="edge")
    w = img.width

    frames: list[Image] = []
    displacements: list[tuple[int, int]] = []
    for t in range(cfg.frames):
        dx = cfg.foreground_dx(t)
        if abs(dx) > pad:
            raise ConfigurationError(
                f"frame {t}: |dx|={abs(dx)} exceeds overscan {pad}")
        bg_dx = cfg.background_dx(t)
        bg = Image(padded[:, pad - bg_dx:pad - bg_dx + w].copy(), img.id)
        fg = Image(_shift_horizontal(img.array, dx), img.id)
        fg_mask = BinaryMask(_shift_horizontal(mask.values, dx))
        frames.append(composite(bg, fg, fg_mask))
        displacements.append((dx, 0))
    return FrameSequence(tuple(frames), tuple(displacements))


def export_frames(seq: FrameSequence, cfg: ParallaxConfig, out_dir: str | Path,
                  gif: bool = False, frame_ms: int = 80) -> Path:
    """Write frame_0000.png ... plus an animation manifest; optionally an
    animated GIF. Returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        save_image_png(frame, out / f"frame_{i:04d}.png")
    manifest = {
        "frames": cfg.frames,
        "amplitude": cfg.amplitude,
        "bg_ratio": cfg.bg_ratio,
        "path": cfg.path,
        "overscan": cfg.overscan,
        "displacements": [list(d) for d in seq.displacements],
    }
    manifest_path = out / "animation.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    if gif:
        from PIL import Image as PILImage

        pil_frames = [PILImage.fromarray(f.array) for f in seq.frames]
        pil_frames[0].save(out / "animation.gif", save_all=True,
                           append_images=pil_frames[1:], duration=frame_ms, loop=0)
    return manifest_path
