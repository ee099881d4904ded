"""Synthetic fixture generators shared across the test suite.

Products are solid colored rectangles or ellipses; staged scenes put them
on a non-white background with a floor band, which keeps the
border-contrast saliency backend exact and gives the toy histogram
extractor real color structure to separate.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from stagekit.catalog import Catalog, CatalogEntry
from stagekit.imaging import BinaryMask, Image, save_image_png

WHITE = (255, 255, 255)

PALETTE = {
    "red": (200, 40, 40),
    "green": (40, 170, 60),
    "blue": (40, 80, 210),
    "yellow": (230, 210, 50),
    "purple": (150, 60, 180),
    "teal": (40, 180, 180),
}

BACKGROUNDS = [
    (235, 225, 205), (215, 230, 240), (240, 215, 225),
    (225, 240, 215), (230, 230, 240), (245, 235, 215),
]


def rect_mask(size: int, x0: int, y0: int, w: int, h: int) -> BinaryMask:
    m = np.zeros((size, size), dtype=bool)
    m[y0:y0 + h, x0:x0 + w] = True
    return BinaryMask(m)


def ellipse_mask(size: int, cx: float, cy: float, rx: float, ry: float) -> BinaryMask:
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    return BinaryMask(((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0)


def product_image(size: int, mask: BinaryMask, color: tuple[int, int, int],
                  background: tuple[int, int, int] = WHITE,
                  id: str | None = None) -> Image:
    arr = np.empty((size, size, 3), dtype=np.uint8)
    arr[:, :] = np.asarray(background, dtype=np.uint8)
    arr[mask.values] = np.asarray(color, dtype=np.uint8)
    return Image(arr, id)


def staged_image(size: int, mask: BinaryMask, color: tuple[int, int, int],
                 background: tuple[int, int, int], floor_row: int | None = None,
                 id: str | None = None) -> Image:
    """Product on a colored wall with a darker floor band."""
    arr = np.empty((size, size, 3), dtype=np.uint8)
    arr[:, :] = np.asarray(background, dtype=np.uint8)
    if floor_row is None:
        floor_row = int(size * 0.7)
    floor = tuple(max(0, c - 60) for c in background)
    arr[floor_row:, :] = np.asarray(floor, dtype=np.uint8)
    arr[mask.values] = np.asarray(color, dtype=np.uint8)
    return Image(arr, id)


def random_blob_mask(rng: np.random.Generator, size: int,
                     min_extent: int = 3) -> BinaryMask:
    """Random solid rectangle or ellipse, never empty."""
    if rng.integers(2) == 0:
        w = int(rng.integers(min_extent, max(min_extent + 1, size // 2)))
        h = int(rng.integers(min_extent, max(min_extent + 1, size // 2)))
        x0 = int(rng.integers(0, size - w + 1))
        y0 = int(rng.integers(0, size - h + 1))
        return rect_mask(size, x0, y0, w, h)
    rx = float(rng.uniform(min_extent, size / 4))
    ry = float(rng.uniform(min_extent, size / 4))
    cx = float(rng.uniform(rx, size - rx))
    cy = float(rng.uniform(ry, size - ry))
    return ellipse_mask(size, cx, cy, rx, ry)


def random_image(rng: np.random.Generator, size: int) -> Image:
    return Image(rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8))


def make_training_images(n: int, size: int, seed: int = 0) -> list[Image]:
    """Colored shapes on varied pastel backgrounds with floor bands."""
    rng = np.random.default_rng(seed)
    colors = list(PALETTE.values())
    images = []
    for i in range(n):
        mask = random_blob_mask(rng, size, min_extent=max(3, size // 8))
        color = colors[int(rng.integers(len(colors)))]
        bg = BACKGROUNDS[int(rng.integers(len(BACKGROUNDS)))]
        floor = int(size * rng.uniform(0.55, 0.85))
        images.append(staged_image(size, mask, color, bg, floor, id=f"train-{i:03d}"))
    return images


def write_catalog(root: Path, size: int = 64, per_color: int = 3,
                  staged: bool = True, colors: list[str] | None = None,
                  seed: int = 7) -> tuple[Path, Catalog]:
    """Write PNGs plus a catalog.jsonl; one subcategory per color.

    Shades within a color family differ slightly so embeddings cluster by
    family without being identical.
    """
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    (root / "imgs").mkdir(exist_ok=True)
    colors = colors or ["red", "green", "blue"]
    entries = []
    for color_name in colors:
        base = np.array(PALETTE[color_name])
        for j in range(per_color):
            shade = np.clip(base + rng.integers(-25, 26, size=3), 0, 255)
            eid = f"{color_name}-{j}"
            side = int(rng.integers(size // 4, size // 2))
            x0 = int(rng.integers(2, size - side - 2))
            y0 = int(rng.integers(2, size - side - 2))
            mask = rect_mask(size, x0, y0, side, side)
            if staged:
                bg = BACKGROUNDS[j % len(BACKGROUNDS)]
                img = staged_image(size, mask, tuple(int(c) for c in shade), bg, id=eid)
            else:
                img = product_image(size, mask, tuple(int(c) for c in shade), id=eid)
            save_image_png(img, root / "imgs" / f"{eid}.png")
            entries.append(CatalogEntry(
                id=eid, image_path=f"imgs/{eid}.png",
                category_path=("Furniture", "Shapes", color_name.capitalize()),
                staged=staged, impressions=10000 + j))
    cat = Catalog(tuple(entries))
    path = root / "catalog.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(json.dumps({"id": e.id, "image": e.image_path,
                                 "category": e.category, "staged": e.staged,
                                 "impressions": e.impressions}) + "\n")
    return path, cat
