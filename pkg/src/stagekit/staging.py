"""Staging pipelines: generate a background outright (vanilla) or borrow
one from a retrieved staged product (copy-paste).

Copy-paste staging, per donor: inpaint the donor's product away to get a
clean plate, compute the uniform scale + translation that matches the
input product's mask area and centroid to the donor's, warp the input
product (bilinear; its mask re-thresholded at 0.5), and paste onto the
plate. The whole donor hole is filled before pasting, so gaps left by a
smaller product are always covered.

Vanilla staging trains a conditional GAN on (product cutout -> original
staged image) pairs and generates the entire background; the product
region is preserved by a final merge.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import Catalog
from .errors import EmptyMaskError, InvalidInputError, PoolEmptyError
from .imaging import (BinaryMask, Image, canonicalize, composite, load_image_png,
                      mask_centroid, save_image_png, WHITE)
from .inpaint.model import Inpainter
from .retrieval import (FeatureExtractor, RetrievalIndex, embed, top_k)
from .saliency import (SaliencyBackend, SaliencyConfig, binarize, detect_saliency,
                       segment_product)
from .checkpoint import load_checkpoint, save_checkpoint

log = logging.getLogger(__name__)

VANILLA_VERSION = "vanilla-v1"
FIT_MARGIN_PX = 2


@dataclass(frozen=True)
class AlignTransform:
    """Uniform scale followed by translation: p -> scale * p + translate."""

    scale: float
    translate: tuple[float, float]

    def __post_init__(self):
        if not (self.scale > 0):
            raise InvalidInputError(f"scale must be positive, got {self.scale}")

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return (self.scale * x + self.translate[0], self.scale * y + self.translate[1])


def align_transform(src: BinaryMask, dst: BinaryMask) -> AlignTransform:
    """Scale by the square root of the mask area ratio (clamped so the
    scaled source bounding box fits the destination canvas with a small
    margin) and translate the scaled source centroid onto the destination
    centroid."""
    if src.is_empty() or dst.is_empty():
        raise EmptyMaskError("align_transform needs non-empty masks")
    scale = float(np.sqrt(dst.area() / src.area()))

    ys, xs = np.nonzero(src.values)
    bbox_w = int(xs.max() - xs.min() + 1)
    bbox_h = int(ys.max() - ys.min() + 1)
    canvas_h, canvas_w = dst.values.shape
    margin = FIT_MARGIN_PX if min(canvas_w, canvas_h) > 4 * FIT_MARGIN_PX else 0
    scale = min(scale,
                (canvas_w - 2 * margin) / bbox_w,
                (canvas_h - 2 * margin) / bbox_h)

    cx_src, cy_src = mask_centroid(src)
    cx_dst, cy_dst = mask_centroid(dst)
    return AlignTransform(scale=scale,
                          translate=(cx_dst - scale * cx_src, cy_dst - scale * cy_src))


def _bilinear_at(arr: np.ndarray, yi: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Gather arr[yi, xi] with zero outside bounds; arr is (h, w) or (h, w, c)."""
    h, w = arr.shape[:2]
    valid = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
    yc = np.clip(yi, 0, h - 1)
    xc = np.clip(xi, 0, w - 1)
    vals = arr[yc, xc].astype(np.float64)
    if arr.ndim == 3:
        vals[~valid] = 0.0
    else:
        vals = np.where(valid, vals, 0.0)
    return vals


def warp_scale_translate(arr: np.ndarray, transform: AlignTransform,
                         out_shape: tuple[int, int]) -> np.ndarray:
    """Bilinear warp of (h, w[, c]) data under ``transform`` via inverse
    mapping; out-of-source samples read as zero. Returns float64."""
    oh, ow = out_shape
    oy, ox = np.mgrid[0:oh, 0:ow].astype(np.float64)
    tx, ty = transform.translate
    sx = (ox - tx) / transform.scale
    sy = (oy - ty) / transform.scale
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    if arr.ndim == 3:
        fx = fx[:, :, None]
        fy = fy[:, :, None]
    v00 = _bilinear_at(arr, y0, x0)
    v01 = _bilinear_at(arr, y0, x0 + 1)
    v10 = _bilinear_at(arr, y0 + 1, x0)
    v11 = _bilinear_at(arr, y0 + 1, x0 + 1)
    top = v00 * (1.0 - fx) + v01 * fx
    bottom = v10 * (1.0 - fx) + v11 * fx
    return top * (1.0 - fy) + bottom * fy


def warp_product(img: Image, mask: BinaryMask, transform: AlignTransform,
                 out_shape: tuple[int, int]) -> tuple[Image, BinaryMask]:
    """Warp product pixels (bilinear, round-half-up quantization) and the
    mask (bilinear then re-thresholded at 0.5)."""
    pix = warp_scale_translate(img.array.astype(np.float64), transform, out_shape)
    pix_u8 = np.clip(np.floor(pix + 0.5), 0, 255).astype(np.uint8)
    m = warp_scale_translate(mask.values.astype(np.float64), transform, out_shape)
    return Image(pix_u8, img.id), BinaryMask(m >= 0.5)


@dataclass(frozen=True)
class CompositeResult:
    """One staged output: the composite image, where it came from, and the
    geometry used to paste the product."""

    image: Image
    source_id: str | None
    donor_id: str
    transform: AlignTransform
    pasted_mask: BinaryMask
    distance: float | None = None


def copy_paste_stage(input_img: Image, input_mask: BinaryMask,
                     donors: list[tuple[Image, BinaryMask, str]],
                     inpainter: Inpainter, jobs: int = 1) -> list[CompositeResult]:
    """Paste the input product into each donor's inpainted scene.

    Donors with empty masks are skipped with a warning; donor order is
    preserved in the results. Per-donor work is independent, so ``jobs``
    > 1 renders donors in a thread pool without changing the output.
    """
    if not donors:
        raise InvalidInputError("copy_paste_stage needs at least one donor")
    if input_mask.is_empty():
        raise EmptyMaskError("input product mask is empty")
    if input_mask.values.shape != input_img.array.shape[:2]:
        raise InvalidInputError("input mask does not match input image")

    eligible: list[tuple[Image, BinaryMask, str]] = []
    for donor_img, donor_mask, donor_id in donors:
        if donor_mask.is_empty():
            log.warning("donor %s skipped: empty product mask", donor_id)
            continue
        if donor_img.array.shape != input_img.array.shape:
            raise InvalidInputError(
                f"donor {donor_id} dimensions {donor_img.array.shape} do not match "
                f"input {input_img.array.shape}")
        eligible.append((donor_img, donor_mask, donor_id))

    def render(donor: tuple[Image, BinaryMask, str]) -> CompositeResult:
        donor_img, donor_mask, donor_id = donor
        plate = inpainter.inpaint(donor_img, donor_mask)
        transform = align_transform(input_mask, donor_mask)
        warped_img, warped_mask = warp_product(
            input_img, input_mask, transform, donor_img.array.shape[:2])
        staged = composite(plate, warped_img, warped_mask)
        return CompositeResult(
            image=Image(staged.array, input_img.id),
            source_id=input_img.id,
            donor_id=donor_id,
            transform=transform,
            pasted_mask=warped_mask,
        )

    if jobs > 1 and len(eligible) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(render, eligible))
    return [render(donor) for donor in eligible]


def stage_from_catalog(input_img: Image, index: RetrievalIndex, cat: Catalog,
                       k: int, inpainter: Inpainter, saliency: SaliencyBackend,
                       fx: FeatureExtractor,
                       cfg: SaliencyConfig = SaliencyConfig(),
                       image_root: str | Path | None = None,
                       jobs: int = 1) -> list[CompositeResult]:
    """End-to-end copy-paste staging: segment the input, retrieve the k
    nearest staged donors, and paste into each inpainted donor scene."""
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    input_mask = binarize(detect_saliency(input_img, saliency), cfg)
    if input_mask.is_empty():
        raise EmptyMaskError("no salient product found in the input image")
    query = embed(input_img, fx, input_mask)
    hits = top_k(index, query, k)
    if not hits:
        raise PoolEmptyError("retrieval pool has no eligible donors")

    root = Path(image_root) if image_root is not None else None
    donors: list[tuple[Image, BinaryMask, str]] = []
    distances: dict[str, float] = {}
    frame_size = input_img.width
    for hit in hits:
        entry = cat.get(hit.id)
        path = Path(entry.image_path)
        if root is not None and not path.is_absolute():
            path = root / path
        donor_img, _ = canonicalize(load_image_png(path, id=entry.id), frame_size)
        donor_mask = binarize(detect_saliency(donor_img, saliency), cfg)
        donors.append((donor_img, donor_mask, entry.id))
        distances[entry.id] = hit.distance

    results = copy_paste_stage(input_img, input_mask, donors, inpainter, jobs=jobs)
    return [CompositeResult(r.image, r.source_id, r.donor_id, r.transform,
                            r.pasted_mask, distance=distances[r.donor_id])
            for r in results]


def export_results(results: list[CompositeResult], out_dir: str | Path,
                   prefix: str = "staged") -> list[Path]:
    """Write one PNG per result plus a sidecar JSONL describing each paste."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    with open(out / f"{prefix}_results.jsonl", "w", encoding="utf-8") as fh:
        for i, r in enumerate(results):
            png = out / f"{prefix}_{i:03d}_{r.donor_id}.png"
            save_image_png(r.image, png)
            paths.append(png)
            fh.write(json.dumps({
                "source_id": r.source_id,
                "donor_id": r.donor_id,
                "scale": r.transform.scale,
                "tx": r.transform.translate[0],
                "ty": r.transform.translate[1],
                "distance": r.distance,
            }) + "\n")
    return paths


# --- vanilla staging ---------------------------------------------------------

class VanillaModel:
    """Conditional GAN that generates a full staged background for a
    product cutout."""

    def __init__(self, generator, discriminator, config: dict):
        self.generator = generator
        self.discriminator = discriminator
        self.config = config
        self.history: list[dict] = []

    @classmethod
    def initialize(cls, resolution: int, seed: int, base_channels: int = 24,
                   l1_weight: float = 100.0) -> "VanillaModel":
        import torch
        from .networks import Generator, PatchDiscriminator

        if resolution % 4 != 0:
            raise InvalidInputError("resolution must be divisible by 4")
        torch.manual_seed(seed)
        gen = Generator(in_channels=3, out_channels=3, base=base_channels)
        disc = PatchDiscriminator(in_channels=6, base=base_channels)
        config = {"version": VANILLA_VERSION, "resolution": resolution,
                  "base_channels": base_channels, "seed": seed,
                  "l1_weight": l1_weight}
        return cls(gen, disc, config)

    def save(self, path: str | Path) -> None:
        from .networks import state_to_numpy

        tensors: dict[str, np.ndarray] = {}
        for prefix, module in (("generator", self.generator),
                               ("discriminator", self.discriminator)):
            for name, arr in state_to_numpy(module).items():
                tensors[f"{prefix}.{name}"] = arr
        save_checkpoint(path, self.config, tensors)

    @classmethod
    def load(cls, path: str | Path) -> "VanillaModel":
        from .networks import load_numpy_state

        config, tensors = load_checkpoint(path)
        if config.get("version") != VANILLA_VERSION:
            raise InvalidInputError(
                f"checkpoint version {config.get('version')!r} is not {VANILLA_VERSION!r}")
        model = cls.initialize(resolution=config["resolution"],
                               seed=config.get("seed", 0),
                               base_channels=config["base_channels"],
                               l1_weight=config.get("l1_weight", 100.0))
        model.config = config
        load_numpy_state(model.generator, tensors, "generator")
        load_numpy_state(model.discriminator, tensors, "discriminator")
        return model

    def generate(self, cutout: Image) -> np.ndarray:
        import torch

        x = torch.from_numpy(cutout.array.astype(np.float32) / 255.0)
        x = x.permute(2, 0, 1).unsqueeze(0)
        with torch.no_grad():
            out = self.generator(x)
        return out.squeeze(0).permute(1, 2, 0).numpy().astype(np.float64)


def product_mask_of_cutout(cutout: Image) -> BinaryMask:
    """Product pixels of a white-filled cutout: anything not pure white."""
    return BinaryMask((cutout.array != 255).any(axis=2))


def make_vanilla_pairs(cat: Catalog, saliency: SaliencyBackend,
                       cfg: SaliencyConfig = SaliencyConfig(),
                       frame_size: int = 256,
                       image_root: str | Path | None = None
                       ) -> list[tuple[Image, Image]]:
    """(product cutout, original staged image) training pairs.

    Entries whose saliency mask comes out empty are skipped with a warning.
    """
    root = Path(image_root) if image_root is not None else None
    pairs: list[tuple[Image, Image]] = []
    for entry in cat:
        path = Path(entry.image_path)
        if root is not None and not path.is_absolute():
            path = root / path
        img, _ = canonicalize(load_image_png(path, id=entry.id), frame_size)
        mask = binarize(detect_saliency(img, saliency), cfg)
        if mask.is_empty():
            log.warning("entry %s skipped: empty saliency mask", entry.id)
            continue
        pairs.append((segment_product(img, mask, WHITE), img))
    return pairs


def train_vanilla(pairs: list[tuple[Image, Image]], steps: int, seed: int, *,
                  l1_weight: float = 100.0, batch_size: int = 8,
                  base_channels: int = 24) -> VanillaModel:
    """Conditional-GAN training: adversarial + l1_weight * L1 to the target.

    Deterministic given the seed; history logs per-step loss terms.
    """
    import torch
    from .errors import TrainingDivergedError
    from .inpaint.loss import adversarial_d_loss, adversarial_g_loss
    from .networks import deterministic_mode

    if len(pairs) < 8:
        raise InvalidInputError(f"need at least 8 training pairs, got {len(pairs)}")
    if steps < 1:
        raise InvalidInputError(f"steps must be >= 1, got {steps}")
    size = pairs[0][0].width
    for a, b in pairs:
        if (a.width, a.height, b.width, b.height) != (size, size, size, size):
            raise InvalidInputError("training pairs must be square and same-size")

    deterministic_mode(seed)
    model = VanillaModel.initialize(resolution=size, seed=seed,
                                    base_channels=base_channels, l1_weight=l1_weight)
    x = np.stack([a.array for a, _ in pairs]).astype(np.float32) / 255.0
    y = np.stack([b.array for _, b in pairs]).astype(np.float32) / 255.0
    x_t = torch.from_numpy(x).permute(0, 3, 1, 2)
    y_t = torch.from_numpy(y).permute(0, 3, 1, 2)

    opt_g = torch.optim.Adam(model.generator.parameters(), lr=2e-4, betas=(0.5, 0.999))
    opt_d = torch.optim.Adam(model.discriminator.parameters(), lr=1e-4, betas=(0.5, 0.999))
    batch_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x9A1A]))
    batch = min(batch_size, len(pairs))
    history: list[dict] = []

    for step in range(steps):
        idx = np.sort(batch_rng.choice(len(pairs), size=batch, replace=False))
        xb, yb = x_t[idx], y_t[idx]

        fake = model.generator(xb)
        real_logits, _ = model.discriminator(torch.cat([xb, yb], dim=1))
        fake_logits_d, _ = model.discriminator(torch.cat([xb, fake.detach()], dim=1))
        d_loss = adversarial_d_loss(real_logits, fake_logits_d)
        opt_d.zero_grad()
        d_loss.backward()
        opt_d.step()

        fake_logits_g, _ = model.discriminator(torch.cat([xb, fake], dim=1))
        adv = adversarial_g_loss(fake_logits_g)
        l1 = (fake - yb).abs().mean()
        g_loss = adv + l1_weight * l1
        opt_g.zero_grad()
        g_loss.backward()
        opt_g.step()

        record = {"step": step, "d": d_loss.item(), "adv": adv.item(), "l1": l1.item()}
        if not all(np.isfinite(v) for k, v in record.items() if k != "step"):
            raise TrainingDivergedError(step)
        history.append(record)

    model.history = history
    return model


def stage_vanilla(model: VanillaModel, cutout: Image,
                  mask: BinaryMask | None = None) -> Image:
    """Generate a staged image for a product cutout; the product region
    (mask, or the cutout's non-white pixels when omitted) is preserved
    bit-exactly from the cutout."""
    res = model.config["resolution"]
    if cutout.width != res or cutout.height != res:
        raise InvalidInputError(
            f"model resolution is {res}, cutout is {cutout.width}x{cutout.height}")
    if mask is None:
        mask = product_mask_of_cutout(cutout)
    elif mask.values.shape != cutout.array.shape[:2]:
        raise InvalidInputError("mask dimensions do not match cutout")
    gen = model.generate(cutout)
    gen_u8 = np.clip(np.floor(gen * 255.0 + 0.5), 0, 255).astype(np.uint8)
    out = np.where(mask.values[:, :, None], cutout.array, gen_u8)
    return Image(out, cutout.id)
