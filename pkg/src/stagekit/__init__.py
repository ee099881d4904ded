"""stagekit: turn un-staged product photos into staged ad images.

Pipelines: salient-product segmentation, retrieval of similar staged
products, copy-paste staging over GAN-inpainted backgrounds (with a
boundary-weighted edge loss), a vanilla full-background GAN baseline,
parallax animations, and an evaluation stack (FID, retrieval
precision/recall, pairwise perceptual studies).
"""

from .imaging import (BinaryMask, CanonicalFrame, Image, SaliencyMap,
                      canonicalize, composite, mask_centroid)
from .catalog import Catalog, CatalogEntry, category_stats, filter_catalog, ingest_catalog
from .saliency import SaliencyConfig, binarize, detect_saliency, make_saliency_backend, segment_product
from .retrieval import (EmbeddingVector, RetrievalIndex, RetrievalResult,
                        build_index, embed, eval_retrieval, make_feature_extractor, top_k)

__version__ = "0.1.0"

__all__ = [
    "BinaryMask", "CanonicalFrame", "Image", "SaliencyMap", "canonicalize",
    "composite", "mask_centroid", "Catalog", "CatalogEntry", "category_stats",
    "filter_catalog", "ingest_catalog", "SaliencyConfig", "binarize",
    "detect_saliency", "make_saliency_backend", "segment_product",
    "EmbeddingVector", "RetrievalIndex", "RetrievalResult", "build_index",
    "embed", "eval_retrieval", "make_feature_extractor", "top_k",
    "__version__",
]
