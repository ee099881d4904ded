"""Generation-quality and retrieval metrics.

FID fits a Gaussian to feature vectors of each image set (sample mean,
unbiased covariance) and evaluates the squared Wasserstein-2 distance

    ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

The matrix square root is stabilized by adding eps*I to both covariances
when its imaginary residue is non-negligible (small desk-scale sets often
have rank-deficient covariances), and a tiny negative total is clamped to
zero. Feature vectors for FID are raw extractor outputs; L2 normalization
is a retrieval-only step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericalError
from .imaging import BinaryMask, Image
from .retrieval import FeatureExtractor, RetrievalMetrics

FID_EPS = 1e-6


@dataclass(frozen=True)
class GaussianStats:
    mean: np.ndarray
    covariance: np.ndarray
    n: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.covariance, dtype=np.float64)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        if mean.ndim != 1 or cov.shape != (mean.shape[0], mean.shape[0]):
            raise InvalidInputError("mean must be (D,), covariance (D, D)")
        if self.n < 2:
            raise InvalidInputError(f"need n >= 2 samples, got {self.n}")
        if not np.allclose(cov, cov.T, atol=1e-9):
            raise InvalidInputError("covariance must be symmetric")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def gaussian_fit(features: list[np.ndarray] | np.ndarray) -> GaussianStats:
    """Sample mean and unbiased (n-1) covariance of row-vector features."""
    mat = np.asarray(features, dtype=np.float64)
    if mat.ndim != 2:
        raise InvalidInputError("features must be a list of equal-length vectors")
    n = mat.shape[0]
    if n < 2:
        raise InvalidInputError(f"need at least 2 samples, got {n}")
    mean = mat.mean(axis=0)
    centered = mat - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mean=mean, covariance=cov, n=n)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Square root of a symmetric PSD matrix via eigendecomposition;
    small negative eigenvalues (roundoff) are clamped to zero."""
    vals, vecs = np.linalg.eigh(mat)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def _trace_sqrt_product(cov_a: np.ndarray, cov_b: np.ndarray) -> float:
    """tr((cov_a cov_b)^(1/2)) through the symmetric form
    tr((A^(1/2) B A^(1/2))^(1/2)), which stays real for PSD inputs and is
    far better conditioned than a Schur square root of the plain product
    when covariances are rank-deficient. Eigenvalues below a relative
    cutoff are treated as the roundoff of a rank-deficient product (taking
    their square root would amplify noise)."""
    inner = _psd_sqrt(cov_a)
    m = inner @ cov_b @ inner
    vals = np.linalg.eigvalsh((m + m.T) / 2.0)
    cutoff = max(float(vals.max(initial=0.0)), 0.0) * 1e-12
    vals = np.where(vals > cutoff, vals, 0.0)
    return float(np.sqrt(vals).sum())


def fid(a: GaussianStats, b: GaussianStats) -> float:
    """Frechet distance between two Gaussian fits.

    If the eigendecomposition fails to converge, eps*I is added to both
    covariances and the whole formula is evaluated with the regularized
    pair; a tiny negative total (roundoff) is clamped to zero.
    """
    if a.dim != b.dim:
        raise InvalidInputError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if np.array_equal(a.mean, b.mean) and np.array_equal(a.covariance, b.covariance):
        return 0.0  # identical distributions: zero by definition
    diff = a.mean - b.mean
    cov_a, cov_b = a.covariance, b.covariance
    try:
        trace_root = _trace_sqrt_product(cov_a, cov_b)
    except np.linalg.LinAlgError:
        eye = np.eye(a.dim) * FID_EPS
        cov_a = cov_a + eye
        cov_b = cov_b + eye
        try:
            trace_root = _trace_sqrt_product(cov_a, cov_b)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                "covariance square root failed after regularization") from exc
    value = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b)
                  - 2.0 * trace_root)
    if -FID_EPS < value < 0.0:
        value = 0.0
    return value


def extract_features(images: list[Image], fx: FeatureExtractor,
                     masks: list[BinaryMask | None] | None = None) -> np.ndarray:
    """One raw (unnormalized) feature vector per image, as an (n, D) matrix."""
    if masks is None:
        masks = [None] * len(images)
    rows = [fx.features(img, mask) for img, mask in zip(images, masks)]
    return (np.stack(rows) if rows
            else np.zeros((0, fx.output_dim), dtype=np.float64))


@dataclass(frozen=True)
class FIDReport:
    fid: float
    n_real: int
    n_gen: int
    extractor: str
    variants: dict[str, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.fid < 0:
            raise InvalidInputError("fid must be >= 0")

    def to_dict(self) -> dict:
        out = {"fid": self.fid, "n_real": self.n_real, "n_gen": self.n_gen,
               "extractor": self.extractor}
        if self.variants:
            out["variants"] = self.variants
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def fid_between_sets(real: list[Image], gen: list[Image],
                     fx: FeatureExtractor) -> FIDReport:
    if len(real) < 2 or len(gen) < 2:
        raise InvalidInputError("both image sets need at least 2 images")
    stats_real = gaussian_fit(extract_features(real, fx))
    stats_gen = gaussian_fit(extract_features(gen, fx))
    return FIDReport(fid=fid(stats_real, stats_gen), n_real=len(real),
                     n_gen=len(gen), extractor=fx.name)


def render_fid_table(variants: dict[str, dict[str, float]]) -> str:
    """Aligned plain-text table: one row per staging variant, one column
    per training option."""
    columns: list[str] = []
    for row in variants.values():
        for col in row:
            if col not in columns:
                columns.append(col)
    row_names = list(variants)
    name_w = max(len(n) for n in row_names + [""]) if row_names else 0
    col_w = {c: max(len(c), *(len(f"{variants[r].get(c, float('nan')):.2f}")
                              for r in row_names)) for c in columns}
    lines = [" " * name_w + "  " + "  ".join(c.rjust(col_w[c]) for c in columns)]
    for r in row_names:
        cells = []
        for c in columns:
            cells.append((f"{variants[r][c]:.2f}" if c in variants[r] else "-")
                         .rjust(col_w[c]))
        lines.append(r.ljust(name_w) + "  " + "  ".join(cells))
    return "\n".join(lines)


__all__ = [
    "GaussianStats", "gaussian_fit", "fid", "extract_features", "FIDReport",
    "fid_between_sets", "render_fid_table", "RetrievalMetrics",
]
