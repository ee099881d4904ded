"""Canonical image and mask representations plus compositing primitives.

Everything downstream (segmentation, retrieval, inpainting, staging,
parallax) operates on these types. Conventions:

- RGB images are ``(height, width, 3)`` uint8 arrays, row-major.
- Pixel ``(i, j)`` (column i, row j) has center coordinate ``(i, j)``;
  centroids are real-valued.
- The canonical working frame is a 256x256 square, white letterbox, since
  un-staged catalog products sit on solid light backgrounds.
- Fractional pixel quantities round half toward +infinity everywhere.
- Masks serialize as single-channel PNG: 0 = background, 255 = foreground;
  any value >= 128 decodes to true.

All operations are pure: inputs are never mutated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import EmptyMaskError, InvalidInputError

CANONICAL_SIZE = 256
WHITE = (255, 255, 255)

Color = tuple[int, int, int]


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class Image:
    """8-bit RGB image with an optional opaque id.

    ``array`` must be ``(h, w, 3)`` uint8. Treated as immutable; operations
    return new instances.
    """

    array: np.ndarray
    id: str | None = None

    def __post_init__(self):
        a = self.array
        if not isinstance(a, np.ndarray) or a.ndim != 3 or a.dtype != np.uint8:
            raise InvalidInputError("image array must be a (h, w, 3) uint8 ndarray")
        if a.shape[2] != 3:
            raise InvalidInputError(f"image must have 3 channels, got {a.shape[2]}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise InvalidInputError("image must be at least 1x1")

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def size(self) -> tuple[int, int]:
        """(width, height)"""
        return (self.width, self.height)

    def with_id(self, new_id: str | None) -> "Image":
        return Image(self.array, new_id)


@dataclass(frozen=True)
class SaliencyMap:
    """Per-pixel foreground probability in [0, 1], shape (h, w) float64."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 2:
            raise InvalidInputError("saliency values must be a 2-D ndarray")
        if v.dtype != np.float64:
            object.__setattr__(self, "values", v.astype(np.float64))
            v = self.values
        if v.size == 0:
            raise InvalidInputError("saliency map must be non-empty")
        if float(v.min()) < 0.0 or float(v.max()) > 1.0:
            raise InvalidInputError("saliency values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel boolean mask, shape (h, w). True = foreground / hole."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 2:
            raise InvalidInputError("mask values must be a 2-D ndarray")
        if v.dtype != np.bool_:
            object.__setattr__(self, "values", v.astype(np.bool_))
            v = self.values
        if v.size == 0:
            raise InvalidInputError("mask must be non-empty")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def area(self) -> int:
        return int(self.values.sum())

    def is_empty(self) -> bool:
        return not bool(self.values.any())

    def __invert__(self) -> "BinaryMask":
        return BinaryMask(~self.values)


@dataclass(frozen=True)
class CanonicalFrame:
    """Mapping between an original image and its letterboxed canonical square.

    ``scale`` is the uniform factor applied to the original, ``offset`` the
    (dx, dy) pad of the scaled content inside the square. ``source_size``
    keeps the original (width, height) so the mapping inverts exactly.
    """

    size: int
    scale: float
    offset: tuple[int, int]
    fill: Color = WHITE
    source_size: tuple[int, int] = (0, 0)

    def content_size(self) -> tuple[int, int]:
        """(width, height) of the scaled content inside the square."""
        w, h = self.source_size
        return (round_half_up(w * self.scale), round_half_up(h * self.scale))

    def to_canonical(self, x: float, y: float) -> tuple[float, float]:
        return (x * self.scale + self.offset[0], y * self.scale + self.offset[1])

    def to_original(self, x: float, y: float) -> tuple[float, float]:
        return ((x - self.offset[0]) / self.scale, (y - self.offset[1]) / self.scale)

    def original_size(self) -> tuple[int, int]:
        """Source (width, height); stored because rounded content dims
        alone cannot invert the scale exactly."""
        return self.source_size


def canonicalize(img: Image, frame_size: int = CANONICAL_SIZE,
                 fill: Color = WHITE) -> tuple[Image, CanonicalFrame]:
    """Aspect-preserving resize into a centered, letterboxed square.

    Returns the square image and the CanonicalFrame that inverts the
    mapping. Bilinear resampling; identity when the input already matches
    the frame.
    """
    if frame_size < 16:
        raise InvalidInputError(f"frame_size must be >= 16, got {frame_size}")
    w, h = img.width, img.height
    scale = min(frame_size / w, frame_size / h)
    cw = round_half_up(w * scale)
    ch = round_half_up(h * scale)
    if (cw, ch) == (w, h):
        content = img.array
    else:
        pil = PILImage.fromarray(img.array, mode="RGB")
        content = np.asarray(pil.resize((cw, ch), PILImage.Resampling.BILINEAR))
    dx = (frame_size - cw) // 2
    dy = (frame_size - ch) // 2
    canvas = np.empty((frame_size, frame_size, 3), dtype=np.uint8)
    canvas[:, :] = np.asarray(fill, dtype=np.uint8)
    canvas[dy:dy + ch, dx:dx + cw] = content
    frame = CanonicalFrame(size=frame_size, scale=scale, offset=(dx, dy),
                           fill=fill, source_size=(w, h))
    return Image(canvas, img.id), frame


def composite(base: Image, overlay: Image, mask: BinaryMask) -> Image:
    """Select overlay pixels where the mask is true, base pixels elsewhere."""
    if base.array.shape != overlay.array.shape:
        raise InvalidInputError(
            f"base {base.array.shape} and overlay {overlay.array.shape} differ")
    if mask.values.shape != base.array.shape[:2]:
        raise InvalidInputError(
            f"mask {mask.values.shape} does not match image {base.array.shape[:2]}")
    out = np.where(mask.values[:, :, None], overlay.array, base.array)
    return Image(out, base.id)


def uniform_image(width: int, height: int, color: Color,
                  id: str | None = None) -> Image:
    arr = np.empty((height, width, 3), dtype=np.uint8)
    arr[:, :] = np.asarray(color, dtype=np.uint8)
    return Image(arr, id)


def mask_centroid(mask: BinaryMask) -> tuple[float, float]:
    """Arithmetic mean (x, y) of true-pixel centers."""
    ys, xs = np.nonzero(mask.values)
    if xs.size == 0:
        raise EmptyMaskError("cannot take the centroid of an empty mask")
    return (float(xs.mean()), float(ys.mean()))


# --- PNG serialization ------------------------------------------------------

def save_image_png(img: Image, path: str | Path) -> None:
    PILImage.fromarray(img.array, mode="RGB").save(str(path), format="PNG")


def load_image_png(path: str | Path, id: str | None = None) -> Image:
    with PILImage.open(str(path)) as pil:
        arr = np.asarray(pil.convert("RGB"))
    return Image(arr.astype(np.uint8, copy=True), id)


def save_mask_png(mask: BinaryMask, path: str | Path) -> None:
    arr = np.where(mask.values, np.uint8(255), np.uint8(0))
    PILImage.fromarray(arr, mode="L").save(str(path), format="PNG")


def load_mask_png(path: str | Path) -> BinaryMask:
    with PILImage.open(str(path)) as pil:
        arr = np.asarray(pil.convert("L"))
    return BinaryMask(arr >= 128)
