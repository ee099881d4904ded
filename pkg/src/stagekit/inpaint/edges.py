"""Edge-map extraction for the two-stage inpainter.

The intermediate training target is a binary Canny edge map of the
grayscale image: Gaussian smoothing (sigma=2), Sobel gradients,
quantized-direction non-maximum suppression, then hysteresis with low/high
thresholds at 0.1 / 0.2 of the gradient-magnitude range. Fixed parameters
keep the maps reproducible across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import InvalidInputError
from ..imaging import Image

CANNY_SIGMA = 2.0
CANNY_LOW = 0.1
CANNY_HIGH = 0.2

# Rec. 601 luma coefficients.
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class EdgeMap:
    """Per-pixel edge strength in [0, 1]; ground-truth maps are binary."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 2:
            raise InvalidInputError("edge map must be 2-D")
        if v.size and (float(v.min()) < 0.0 or float(v.max()) > 1.0):
            raise InvalidInputError("edge values must lie in [0, 1]")


def to_grayscale(img: Image) -> np.ndarray:
    """Luma in [0, 1], float64."""
    return (img.array.astype(np.float64) @ _LUMA) / 255.0


def canny(gray: np.ndarray, sigma: float = CANNY_SIGMA,
          low: float = CANNY_LOW, high: float = CANNY_HIGH) -> np.ndarray:
    """Binary Canny edges of a [0, 1] grayscale array.

    ``low``/``high`` are fractions of the gradient-magnitude range.
    """
    smoothed = ndimage.gaussian_filter(gray, sigma=sigma, mode="nearest")
    gx = ndimage.sobel(smoothed, axis=1, mode="nearest")
    gy = ndimage.sobel(smoothed, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    span = float(mag.max() - mag.min())
    if span == 0.0:
        return np.zeros_like(gray, dtype=np.float64)

    # Non-maximum suppression over 4 quantized gradient directions.
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    keep = np.zeros_like(mag, dtype=bool)
    padded = np.pad(mag, 1, mode="constant")
    center = padded[1:-1, 1:-1]
    neighbors = {
        0: (padded[1:-1, 2:], padded[1:-1, :-2]),    # horizontal gradient
        1: (padded[2:, 2:], padded[:-2, :-2]),       # 45 degrees
        2: (padded[2:, 1:-1], padded[:-2, 1:-1]),    # vertical gradient
        3: (padded[2:, :-2], padded[:-2, 2:]),       # 135 degrees
    }
    quadrant = np.floor_divide(np.mod(angle + np.pi / 8, np.pi), np.pi / 4).astype(int)
    quadrant = np.clip(quadrant, 0, 3)
    for q, (n1, n2) in neighbors.items():
        sel = quadrant == q
        keep |= sel & (center >= n1) & (center >= n2)
    nms = np.where(keep, mag, 0.0)

    lo = float(mag.min()) + low * span
    hi = float(mag.min()) + high * span
    strong = nms >= hi
    weak = nms >= lo
    # Hysteresis: keep weak components that touch a strong pixel.
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return np.zeros_like(gray, dtype=np.float64)
    strong_labels = np.unique(labels[strong])
    strong_labels = strong_labels[strong_labels != 0]
    edges = np.isin(labels, strong_labels)
    return edges.astype(np.float64)


def extract_edges(img: Image) -> EdgeMap:
    """Binary Canny edge map of the image's grayscale, values in {0, 1}."""
    return EdgeMap(canny(to_grayscale(img)))
