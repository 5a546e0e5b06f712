"""Evaluation metrics: Gaussian Fréchet distance, segmentation scores,
and masked perceptual-diversity averages.

All functions are reference implementations over plain numeric inputs.
Neural feature extraction (2048-d image features, per-pixel perceptual
distance maps, segmentation predictions) happens upstream; this module
only consumes the resulting tensors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import LabelMap


class MetricError(ValueError):
    """Invalid metric input."""


# ---------------------------------------------------------------------------
# Fréchet distance between fitted Gaussians

@dataclass(frozen=True)
class GaussianStats:
    """Sample mean / unbiased covariance summary of a feature set."""

    mu: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise MetricError(f"need at least 2 samples, got {self.n}")
        if self.mu.ndim != 1 or self.cov.shape != (self.dim, self.dim):
            raise MetricError(f"inconsistent shapes mu {self.mu.shape} cov {self.cov.shape}")
        if not np.allclose(self.cov, self.cov.T, atol=1e-9, rtol=0.0):
            raise MetricError("covariance not symmetric")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def fit_gaussian(features: np.ndarray) -> GaussianStats:
    """Fit mean and unbiased (n-1) covariance to an (n, dim) feature matrix."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise MetricError(f"features must be (n, dim), got {features.shape}")
    n = features.shape[0]
    if n < 2:
        raise MetricError(f"need at least 2 samples, got {n}")
    mu = features.mean(axis=0)
    centered = features - mu
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mu=mu, cov=cov, n=n)


_PSD_TOL = 1e-8


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Fréchet distance between two Gaussians.

    ||mu_a - mu_b||^2 + Tr(C_a + C_b - 2 (C_a C_b)^{1/2}), with the matrix
    square root taken by eigendecomposition of the symmetrized product
    C_a^{1/2} C_b C_a^{1/2}. Eigenvalues above -1e-8 are clamped to zero;
    anything lower is rejected as indefinite.
    """
    if a.dim != b.dim:
        raise MetricError(f"dimension mismatch {a.dim} vs {b.dim}")
    sqrt_a = _psd_sqrt(a.cov)
    inner = sqrt_a @ b.cov @ sqrt_a
    inner = (inner + inner.T) / 2.0
    eig = np.linalg.eigvalsh(inner)
    if eig.min() < -_PSD_TOL * max(1.0, abs(eig.max())):
        raise MetricError(f"product matrix indefinite (min eigenvalue {eig.min()})")
    tr_sqrt = np.sqrt(np.clip(eig, 0.0, None)).sum()
    diff = a.mu - b.mu
    d = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * tr_sqrt)
    if d < -1e-6:
        raise MetricError(f"negative distance {d} beyond tolerance")
    return max(d, 0.0)


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    eigval, eigvec = np.linalg.eigh(cov)
    if eigval.min() < -_PSD_TOL * max(1.0, abs(eigval.max())):
        raise MetricError(f"covariance indefinite (min eigenvalue {eigval.min()})")
    return (eigvec * np.sqrt(np.clip(eigval, 0.0, None))) @ eigvec.T


# ---------------------------------------------------------------------------
# Confusion-matrix segmentation scores

@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts; entry (i, j) = pixels of true class i predicted as j."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 1:
            raise MetricError(f"counts must be square, got {c.shape}")
        if (c < 0).any():
            raise MetricError("negative count")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)


def confusion(pred: LabelMap, truth: LabelMap,
              ignore: int | None = None) -> ConfusionMatrix:
    """Count predictions against truth; truth pixels of `ignore` are dropped."""
    if pred.labels.shape != truth.labels.shape:
        raise MetricError(f"shape mismatch {pred.labels.shape} vs {truth.labels.shape}")
    if pred.num_classes != truth.num_classes:
        raise MetricError(f"class count mismatch {pred.num_classes} vs {truth.num_classes}")
    k = truth.num_classes
    t = truth.labels.ravel().astype(np.int64)
    p = pred.labels.ravel().astype(np.int64)
    if ignore is not None:
        keep = t != ignore
        t, p = t[keep], p[keep]
    counts = np.bincount(t * k + p, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts=counts)


def per_class_iou(cm: ConfusionMatrix) -> np.ndarray:
    """IoU per class; NaN where the union is empty."""
    c = cm.counts
    diag = np.diag(c)
    union = c.sum(axis=1) + c.sum(axis=0) - diag
    with np.errstate(invalid="ignore"):
        return np.where(union > 0, diag / union, np.nan)


def miou(cm: ConfusionMatrix) -> float:
    """Mean IoU over classes with nonzero union."""
    if cm.total == 0:
        raise MetricError("empty confusion matrix")
    iou = per_class_iou(cm)
    valid = [float(v) for v in iou if not np.isnan(v)]
    # sequential fold over the class axis keeps the result identical to a
    # scalar per-class recomputation regardless of numpy's pairwise summation
    return sum(valid) / len(valid)


def accuracy(cm: ConfusionMatrix) -> float:
    """Overall pixel accuracy."""
    if cm.total == 0:
        raise MetricError("empty confusion matrix")
    return float(np.diag(cm.counts).sum() / cm.counts.sum())


def fwiou(cm: ConfusionMatrix) -> float:
    """IoU weighted by each class's share of true pixels."""
    if cm.total == 0:
        raise MetricError("empty confusion matrix")
    c = cm.counts
    freq = c.sum(axis=1) / c.sum()
    iou = per_class_iou(cm)
    return sum(float(f) * float(v) for f, v in zip(freq, iou) if f > 0)


# ---------------------------------------------------------------------------
# Masked perceptual-diversity averages

@dataclass(frozen=True)
class DistanceMapSet:
    """Per-pair perceptual distance rasters with the pair's source label map."""

    pairs: tuple[tuple[np.ndarray, LabelMap], ...]

    def __post_init__(self):
        if not self.pairs:
            raise MetricError("no distance pairs")
        for dist, labels in self.pairs:
            if dist.shape != labels.labels.shape:
                raise MetricError(f"distance raster {dist.shape} does not match "
                                  f"label raster {labels.labels.shape}")
            if (np.asarray(dist) < 0).any():
                raise MetricError("negative perceptual distance")

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class DiversityResult:
    lpips_mean: float
    mcsd: float
    mocd: float
    class_diversity: dict[int, float]        # L_c for classes present
    other_class_diversity: dict[int, float]  # L_{!=c}, complement nonempty
    skipped_classes: tuple[int, ...]         # no pixels across all pairs
    empty_complement_classes: tuple[int, ...]

    def as_tuple(self) -> tuple[float, float, float]:
        return self.lpips_mean, self.mcsd, self.mocd


def diversity(maps: DistanceMapSet, num_classes: int) -> DiversityResult:
    """Class-masked diversity means over a set of per-pair distance maps.

    L_c pools the distances on class-c pixels across all pairs; the
    complement average L_{!=c} pools everything else. The headline values
    average L_c (and L_{!=c}) over the classes that actually occur;
    classes with no pixels anywhere are skipped and reported, as is any
    class whose complement is empty.
    """
    k = num_classes
    sums = np.zeros(k, dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    total = 0.0
    n_pixels = 0
    for dist, labels in maps.pairs:
        if labels.num_classes > k:
            raise MetricError(f"label map has {labels.num_classes} classes, "
                              f"expected <= {k}")
        d = np.asarray(dist, dtype=np.float64).ravel()
        lab = labels.labels.ravel()
        sums += np.bincount(lab, weights=d, minlength=k)
        counts += np.bincount(lab, minlength=k)
        total += d.sum()
        n_pixels += d.size

    present = [c for c in range(k) if counts[c] > 0]
    skipped = tuple(c for c in range(k) if counts[c] == 0)
    l_c = {c: float(sums[c] / counts[c]) for c in present}
    comp: dict[int, float] = {}
    empty_comp = []
    for c in present:
        cc = n_pixels - counts[c]
        if cc > 0:
            comp[c] = float((total - sums[c]) / cc)
        else:
            empty_comp.append(c)
    mcsd = float(np.mean([l_c[c] for c in present])) if present else 0.0
    mocd = float(np.mean(list(comp.values()))) if comp else 0.0
    return DiversityResult(
        lpips_mean=float(total / n_pixels),
        mcsd=mcsd,
        mocd=mocd,
        class_diversity=l_c,
        other_class_diversity=comp,
        skipped_classes=skipped,
        empty_complement_classes=tuple(empty_comp),
    )
