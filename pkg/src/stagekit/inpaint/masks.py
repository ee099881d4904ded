"""Training masks and boundary weight maps for the inpainter.

Free-form masks are unions of random polyline brush strokes with round
caps, regenerated until their area fraction lands inside configured
bounds. The boundary band of a mask is the set of pixels whose
(2d+1)-square neighborhood, clipped to the image, contains both mask
values; the image border itself never counts as a boundary. Weight maps
assign the boundary weight on that band and the non-boundary weight
everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import InvalidInputError, MaskGenerationError
from ..imaging import BinaryMask


@dataclass(frozen=True)
class LossWeights:
    """Loss configuration for inpainter training.

    ``lambda_boundary`` / ``lambda_non_boundary`` are the two weight-map
    levels; ``band_width_d`` the boundary band half-width in pixels.
    ``w_adv`` / ``w_fm`` / ``w_wbl`` combine the adversarial,
    feature-matching, and boundary-weighted terms of the edge-stage loss.
    """

    lambda_boundary: float = 0.9
    lambda_non_boundary: float = 0.1
    band_width_d: int = 3
    w_adv: float = 1.0
    w_fm: float = 10.0
    w_wbl: float = 1.0

    def __post_init__(self):
        if not (self.lambda_boundary > self.lambda_non_boundary >= 0.0):
            raise InvalidInputError(
                "need lambda_boundary > lambda_non_boundary >= 0, got "
                f"{self.lambda_boundary} / {self.lambda_non_boundary}")
        if self.band_width_d < 1:
            raise InvalidInputError(f"band_width_d must be >= 1, got {self.band_width_d}")


@dataclass(frozen=True)
class WeightedMap:
    """Per-pixel loss weights; values are exactly the two configured levels."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 2:
            raise InvalidInputError("weighted map must be 2-D")


@dataclass(frozen=True)
class FreeFormMaskParams:
    """Sampling ranges for free-form stroke masks. Ranges are inclusive.

    ``area_bounds`` constrains the fraction of true pixels; generation
    redraws (continuing the same seeded stream) until the mask lands
    inside the bounds or the retry budget runs out.
    """

    strokes: tuple[int, int] = (1, 4)
    vertices_per_stroke: tuple[int, int] = (4, 12)
    brush_width: tuple[float, float] = (5.0, 25.0)
    seed: int = 0
    area_bounds: tuple[float, float] = (0.05, 0.45)
    max_retries: int = 100

    def __post_init__(self):
        for name, (lo, hi) in (("strokes", self.strokes),
                               ("vertices_per_stroke", self.vertices_per_stroke),
                               ("brush_width", self.brush_width)):
            if lo > hi or lo <= 0:
                raise InvalidInputError(f"bad {name} range ({lo}, {hi})")
        lo, hi = self.area_bounds
        if not (0.0 <= lo < hi <= 1.0):
            raise InvalidInputError(f"bad area_bounds ({lo}, {hi})")


def _stamp_capsule(mask: np.ndarray, p0: np.ndarray, p1: np.ndarray, radius: float,
                   xs: np.ndarray, ys: np.ndarray) -> None:
    """Set pixels within ``radius`` of segment p0-p1 (round caps included)."""
    seg = p1 - p0
    seg_len2 = float(seg @ seg)
    dx = xs - p0[0]
    dy = ys - p0[1]
    if seg_len2 == 0.0:
        dist2 = dx * dx + dy * dy
    else:
        t = np.clip((dx * seg[0] + dy * seg[1]) / seg_len2, 0.0, 1.0)
        ex = dx - t * seg[0]
        ey = dy - t * seg[1]
        dist2 = ex * ex + ey * ey
    mask |= dist2 <= radius * radius


def generate_freeform_mask(params: FreeFormMaskParams, size: int) -> BinaryMask:
    """Random brush-stroke hole pattern, deterministic given params.seed."""
    if size < 32:
        raise InvalidInputError(f"size must be >= 32, got {size}")
    rng = np.random.default_rng(params.seed)
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    lo, hi = params.area_bounds
    for _ in range(params.max_retries):
        mask = np.zeros((size, size), dtype=bool)
        n_strokes = int(rng.integers(params.strokes[0], params.strokes[1] + 1))
        for _stroke in range(n_strokes):
            width = float(rng.uniform(params.brush_width[0], params.brush_width[1]))
            n_vertices = int(rng.integers(params.vertices_per_stroke[0],
                                          params.vertices_per_stroke[1] + 1))
            point = rng.uniform(0, size, size=2)
            for _v in range(n_vertices - 1):
                angle = rng.uniform(0, 2 * np.pi)
                length = rng.uniform(size / 16, size / 4)
                nxt = point + length * np.array([np.cos(angle), np.sin(angle)])
                nxt = np.clip(nxt, 0, size - 1)
                _stamp_capsule(mask, point, nxt, width / 2.0, xs, ys)
                point = nxt
        frac = mask.mean()
        if lo <= frac <= hi:
            return BinaryMask(mask)
    raise MaskGenerationError(
        f"no mask within area bounds [{lo}, {hi}] after {params.max_retries} tries "
        f"(size={size}, params={params})")


def boundary_band(mask: BinaryMask, d: int) -> BinaryMask:
    """Pixels within Chebyshev distance d of the mask's value transitions.

    Computed as dilation XOR erosion with a (2d+1)^2 square element; the
    erosion treats out-of-image as foreground and the dilation as
    background, so the image border alone never produces a band.
    """
    if d < 1:
        raise InvalidInputError(f"band width must be >= 1, got {d}")
    m = mask.values.astype(np.uint8)
    size = 2 * d + 1
    dilated = ndimage.maximum_filter(m, size=size, mode="constant", cval=0)
    eroded = ndimage.minimum_filter(m, size=size, mode="constant", cval=1)
    return BinaryMask((dilated == 1) & (eroded == 0))


def weight_map(mask: BinaryMask, w: LossWeights = LossWeights()) -> WeightedMap:
    """lambda_boundary on the boundary band, lambda_non_boundary elsewhere."""
    band = boundary_band(mask, w.band_width_d)
    values = np.where(band.values, w.lambda_boundary, w.lambda_non_boundary)
    return WeightedMap(values)
