"""Embedding, nearest-neighbor retrieval, and retrieval metrics.

Products are embedded as L2-normalized feature vectors; similarity is the
cosine distance ``1 - dot(query, item)``. Retrieval is an exhaustive linear
scan (pools are a few thousand items), with deterministic tie-breaking by
id and self-exclusion of the query's own id.

Index embeddings are computed on segmented products so retrieval keys on
the product itself rather than on its background.

Extractors:

- ``toy-histogram``: concatenated per-channel 4-bin intensity histograms
  (12-D), restricted to mask-true pixels when a mask is supplied. Exact
  and dependency-free; the whole test suite runs on it.
- ``inception-v3``: pooled features of a pretrained torchvision
  Inception-V3 loaded from a local weights file.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import Catalog
from .errors import (BackendUnavailableError, DegenerateFeatureError,
                     IngestionError, InvalidInputError, ParseError)
from .imaging import BinaryMask, Image, load_image_png
from .saliency import SaliencyBackend, SaliencyConfig, binarize, detect_saliency

INDEX_MAGIC = b"STKIDX1"


@dataclass(frozen=True)
class EmbeddingVector:
    """Unit-norm feature vector tagged with the id of its source entry."""

    values: np.ndarray
    source_id: str | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-6:
            raise InvalidInputError(f"embedding norm {norm} is not 1 within 1e-6")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


class FeatureExtractor:
    """Deterministic image -> raw feature vector map.

    ``features`` returns the raw (unnormalized) vector; retrieval wraps it
    in an L2-normalized EmbeddingVector, distribution metrics use it as is.
    """

    name: str
    output_dim: int

    def features(self, img: Image, mask: BinaryMask | None = None) -> np.ndarray:
        raise NotImplementedError


class ToyHistogramExtractor(FeatureExtractor):
    """Per-channel 4-bin intensity histogram, concatenated to 12-D.

    Bins split [0, 256) evenly: [0,64), [64,128), [128,192), [192,256).
    With a mask, only mask-true pixels are counted.
    """

    name = "toy-histogram"
    output_dim = 12
    bins_per_channel = 4

    def features(self, img: Image, mask: BinaryMask | None = None) -> np.ndarray:
        arr = img.array
        if mask is not None:
            if mask.values.shape != arr.shape[:2]:
                raise InvalidInputError("mask dimensions do not match image")
            pixels = arr[mask.values]
        else:
            pixels = arr.reshape(-1, 3)
        out = np.empty(self.output_dim, dtype=np.float64)
        edges = np.arange(0, 257, 256 // self.bins_per_channel)
        for c in range(3):
            hist, _ = np.histogram(pixels[:, c], bins=edges)
            out[c * self.bins_per_channel:(c + 1) * self.bins_per_channel] = hist
        return out


class InceptionV3Extractor(FeatureExtractor):
    """Pooled features from a pretrained Inception-V3 (2048-D).

    Weights come from a local state-dict file; nothing is downloaded. With
    a mask, background pixels are whited out before embedding so the
    features key on the product.
    """

    name = "inception-v3"
    output_dim = 2048

    def __init__(self, weights_path: str | Path):
        path = Path(weights_path)
        if not path.is_file():
            raise BackendUnavailableError(f"inception weights not found: {path}")
        try:
            import torch
            from torchvision.models import inception_v3

            self._torch = torch
            model = inception_v3(weights=None, aux_logits=True, init_weights=False)
            state = torch.load(str(path), map_location="cpu", weights_only=True)
            model.load_state_dict(state)
            model.fc = torch.nn.Identity()
            model.eval()
            self._model = model
        except BackendUnavailableError:
            raise
        except Exception as exc:  # noqa: BLE001
            raise BackendUnavailableError(f"cannot load inception weights {path}: {exc}") from exc

    def features(self, img: Image, mask: BinaryMask | None = None) -> np.ndarray:
        torch = self._torch
        from PIL import Image as PILImage

        arr = img.array
        if mask is not None:
            arr = np.where(mask.values[:, :, None], arr, np.uint8(255))
        pil = PILImage.fromarray(arr).resize((299, 299), PILImage.Resampling.BILINEAR)
        x = torch.from_numpy(np.asarray(pil).astype(np.float32) / 255.0)
        x = (x - 0.5) / 0.5
        x = x.permute(2, 0, 1).unsqueeze(0)
        with torch.no_grad():
            feat = self._model(x)
        return feat.squeeze(0).numpy().astype(np.float64)


def make_feature_extractor(name: str, weights_path: str | Path | None = None) -> FeatureExtractor:
    if name == "toy-histogram":
        return ToyHistogramExtractor()
    if name == "inception-v3":
        if weights_path is None:
            raise BackendUnavailableError("inception-v3 extractor needs a weights path")
        return InceptionV3Extractor(weights_path)
    raise InvalidInputError(f"unknown feature extractor {name!r}")


def embed(img: Image, fx: FeatureExtractor,
          mask: BinaryMask | None = None) -> EmbeddingVector:
    """L2-normalized embedding of an image (optionally mask-restricted)."""
    raw = fx.features(img, mask)
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        raise DegenerateFeatureError(
            f"{fx.name} produced an all-zero feature vector for image {img.id!r}")
    return EmbeddingVector(raw / norm, source_id=img.id)


@dataclass(frozen=True)
class RetrievalResult:
    id: str
    distance: float


@dataclass(frozen=True)
class RetrievalIndex:
    """Exhaustive-search index: unit embeddings plus id -> category metadata."""

    extractor_name: str
    dim: int
    ids: tuple[str, ...]
    categories: tuple[str, ...]
    matrix: np.ndarray  # (n, dim) float32, rows unit-norm

    def __post_init__(self):
        if len(self.ids) != len(set(self.ids)):
            raise InvalidInputError("index ids must be unique")
        if self.matrix.shape != (len(self.ids), self.dim):
            raise InvalidInputError("index matrix shape does not match ids/dim")
        if len(self.ids):
            norms = np.linalg.norm(self.matrix.astype(np.float64), axis=1)
            if not np.allclose(norms, 1.0, atol=1e-5):
                raise InvalidInputError("index rows must be unit-norm")

    def __len__(self) -> int:
        return len(self.ids)

    def category_of(self, entry_id: str) -> str:
        return self.categories[self.ids.index(entry_id)]


def build_index(cat: Catalog, fx: FeatureExtractor,
                saliency: SaliencyBackend,
                threshold: SaliencyConfig = SaliencyConfig(),
                image_root: str | Path | None = None,
                frame_size: int | None = None) -> RetrievalIndex:
    """Embed every catalog entry on its segmented product.

    Image paths resolve against ``image_root`` when given; images are
    canonicalized to ``frame_size`` when set (so index embeddings match
    what the staging pipeline sees). Unreadable images raise
    IngestionError naming the entry.
    """
    from .imaging import canonicalize

    ids: list[str] = []
    cats: list[str] = []
    rows: list[np.ndarray] = []
    root = Path(image_root) if image_root is not None else None
    for entry in cat:
        path = Path(entry.image_path)
        if root is not None and not path.is_absolute():
            path = root / path
        try:
            img = load_image_png(path, id=entry.id)
        except (OSError, ValueError) as exc:
            raise IngestionError(f"cannot read image for entry {entry.id!r}: {exc}") from exc
        if frame_size is not None:
            img, _ = canonicalize(img, frame_size)
        mask = binarize(detect_saliency(img, saliency), threshold)
        vec = embed(img, fx, mask if not mask.is_empty() else None)
        ids.append(entry.id)
        cats.append(entry.category)
        rows.append(vec.values.astype(np.float32))
    matrix = (np.stack(rows) if rows
              else np.zeros((0, fx.output_dim), dtype=np.float32))
    return RetrievalIndex(extractor_name=fx.name, dim=fx.output_dim,
                          ids=tuple(ids), categories=tuple(cats), matrix=matrix)


def top_k(index: RetrievalIndex, query: EmbeddingVector, k: int) -> list[RetrievalResult]:
    """k nearest items by cosine distance, ascending, ties by id; the
    query's own source_id is excluded."""
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    if len(index) == 0:
        return []
    dists = 1.0 - index.matrix.astype(np.float64) @ query.values
    order = sorted(
        (i for i in range(len(index)) if index.ids[i] != query.source_id),
        key=lambda i: (dists[i], index.ids[i]),
    )
    return [RetrievalResult(index.ids[i], float(dists[i])) for i in order[:k]]


@dataclass(frozen=True)
class RetrievalMetrics:
    """precision@k / recall@k records; recall is the hit rate (fraction of
    queries with at least one same-subcategory item in the top k)."""

    per_k: tuple[tuple[int, float, float], ...]  # (k, precision, recall)
    n_queries: int

    def precision(self, k: int) -> float:
        return dict((kk, p) for kk, p, _ in self.per_k)[k]

    def recall(self, k: int) -> float:
        return dict((kk, r) for kk, _, r in self.per_k)[k]

    def to_dict(self) -> dict:
        return {
            "n_queries": self.n_queries,
            "per_k": [{"k": k, "precision": p, "recall": r} for k, p, r in self.per_k],
        }


def eval_retrieval(index: RetrievalIndex,
                   queries: list[tuple[EmbeddingVector, str]],
                   ks: list[int]) -> RetrievalMetrics:
    """Subcategory-match precision@k and hit-rate recall@k.

    A retrieved item counts as relevant iff its full category string equals
    the query's. precision@k averages (#relevant in top-k)/k over queries;
    recall@k is the fraction of queries whose top-k contains at least one
    relevant item.
    """
    if not queries:
        raise InvalidInputError("eval_retrieval needs at least one query")
    if any(k < 1 for k in ks):
        raise InvalidInputError("every k must be >= 1")
    kmax = max(ks)
    per_query_hits: list[list[bool]] = []
    for vec, category in queries:
        results = top_k(index, vec, kmax)
        per_query_hits.append([index.category_of(r.id) == category for r in results])
    records = []
    for k in ks:
        precisions = []
        hits = 0
        for flags in per_query_hits:
            top = flags[:k]
            precisions.append(sum(top) / k)
            hits += 1 if any(top) else 0
        records.append((k, float(np.mean(precisions)), hits / len(queries)))
    return RetrievalMetrics(per_k=tuple(records), n_queries=len(queries))


# --- index serialization ----------------------------------------------------

def _write_str(fh, s: str) -> None:
    data = s.encode("utf-8")
    fh.write(struct.pack("<H", len(data)))
    fh.write(data)


def _read_str(fh) -> str:
    (n,) = struct.unpack("<H", fh.read(2))
    return fh.read(n).decode("utf-8")


def save_index(index: RetrievalIndex, path: str | Path) -> None:
    """Binary index file: magic, extractor name, dim, count, then per-item
    (id, category, dim little-endian float32). Bit-exact round trip."""
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        _write_str(fh, index.extractor_name)
        fh.write(struct.pack("<II", index.dim, len(index)))
        for i in range(len(index)):
            _write_str(fh, index.ids[i])
            _write_str(fh, index.categories[i])
            fh.write(index.matrix[i].astype("<f4").tobytes())


def load_index(path: str | Path) -> RetrievalIndex:
    with open(path, "rb") as fh:
        magic = fh.read(len(INDEX_MAGIC))
        if magic != INDEX_MAGIC:
            raise ParseError(f"bad index magic {magic!r}")
        name = _read_str(fh)
        dim, count = struct.unpack("<II", fh.read(8))
        ids: list[str] = []
        cats: list[str] = []
        rows = np.zeros((count, dim), dtype=np.float32)
        for i in range(count):
            ids.append(_read_str(fh))
            cats.append(_read_str(fh))
            buf = fh.read(4 * dim)
            if len(buf) != 4 * dim:
                raise ParseError("truncated index file")
            rows[i] = np.frombuffer(buf, dtype="<f4")
    return RetrievalIndex(extractor_name=name, dim=dim, ids=tuple(ids),
                          categories=tuple(cats), matrix=rows)
