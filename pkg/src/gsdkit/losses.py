"""Forward-value loss kernels for cross-checking trainer implementations.

Pure scalar-out functions over supplied tensors: hinge adversarial terms,
discriminator feature matching, multi-layer perceptual L1, and the
segmentation-feedback cross-entropy family with its warm-up schedule.
Expectations are arithmetic means over all elements. No gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import LabelMap

# Perceptual loss uses this many backbone feature layers by default.
DEFAULT_PERCEPTUAL_LAYERS = 5
# Probability floor before the log in the consistency term.
PROB_CLAMP = 1e-12


class LossInputError(ValueError):
    """Invalid loss input."""


@dataclass(frozen=True)
class LossWeights:
    """Trade-off weights for the generator objective."""

    lambda_adv: float = 1.0
    lambda_fm: float = 10.0
    lambda_perc: float = 10.0
    lambda_ref: float = 1.0

    def __post_init__(self):
        for name in ("lambda_adv", "lambda_fm", "lambda_perc", "lambda_ref"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise LossInputError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class RefineSchedule:
    """Warm-up gate: synthesized-image feedback activates once epoch >= gamma."""

    epoch: int
    gamma: int = 80

    def __post_init__(self):
        if self.epoch < 0 or self.gamma < 0:
            raise LossInputError("epoch and gamma must be >= 0")

    @property
    def feedback_active(self) -> bool:
        return self.epoch >= self.gamma


def _as_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        raise LossInputError(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise LossInputError(f"{name} contains NaN or Inf")
    return arr


def adv_d(real_scores, fake_scores) -> float:
    """Hinge discriminator loss: mean relu(1 - real) + mean relu(1 + fake)."""
    real = _as_array(real_scores, "real_scores")
    fake = _as_array(fake_scores, "fake_scores")
    return float(np.maximum(0.0, 1.0 - real).mean()
                 + np.maximum(0.0, 1.0 + fake).mean())


def adv_g(fake_scores) -> float:
    """Hinge generator loss: negated mean score of synthesized samples."""
    return float(-_as_array(fake_scores, "fake_scores").mean())


def _paired_stacks(real, fake, name: str) -> list[tuple[np.ndarray, np.ndarray]]:
    if len(real) != len(fake) or len(real) == 0:
        raise LossInputError(f"{name}: stacks must pair, got {len(real)} vs {len(fake)}")
    pairs = []
    for i, (a, b) in enumerate(zip(real, fake)):
        a = _as_array(a, f"{name}[{i}] real")
        b = _as_array(b, f"{name}[{i}] fake")
        if a.shape != b.shape:
            raise LossInputError(f"{name}[{i}]: shape mismatch {a.shape} vs {b.shape}")
        pairs.append((a, b))
    return pairs


def feature_match(real_feats, fake_feats) -> float:
    """Sum over layers of the per-element mean L1 distance."""
    total = 0.0
    for a, b in _paired_stacks(real_feats, fake_feats, "feature_match"):
        total += np.abs(a - b).sum() / a.size
    return float(total)


def perceptual(real_feats, fake_feats, *, normalized: bool = False) -> float:
    """Sum over layers of the L1 distance.

    The printed objective has no per-layer element normalization, unlike
    feature matching; normalized=True switches to per-element means for
    trainers that expect them.
    """
    total = 0.0
    for a, b in _paired_stacks(real_feats, fake_feats, "perceptual"):
        l1 = np.abs(a - b).sum()
        total += l1 / a.size if normalized else l1
    return float(total)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=0, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))


def _labels_array(mask) -> np.ndarray:
    return mask.labels if isinstance(mask, LabelMap) else np.asarray(mask)


def ref_ce(logits, mask) -> float:
    """Pixel cross-entropy of (K, H, W) logits against integer labels.

    Batched (B, K, H, W) input averages the per-item pixel means.
    """
    logits = _as_array(logits, "logits")
    labels = _labels_array(mask)
    if logits.ndim == 4:
        if labels.ndim != 3 or labels.shape[0] != logits.shape[0]:
            raise LossInputError(f"batched logits {logits.shape} need (B, H, W) labels, "
                                 f"got {labels.shape}")
        return float(np.mean([ref_ce(logits[i], labels[i])
                              for i in range(logits.shape[0])]))
    if logits.ndim != 3:
        raise LossInputError(f"logits must be (K, H, W), got {logits.shape}")
    k, h, w = logits.shape
    if labels.shape != (h, w):
        raise LossInputError(f"labels {labels.shape} do not match logits {logits.shape}")
    if labels.min() < 0 or labels.max() >= k:
        raise LossInputError(f"label outside [0, {k})")
    logp = _log_softmax(logits)
    yy, xx = np.indices((h, w))
    return float(-logp[labels, yy, xx].mean())


def ref_consistency(real_logits, fake_logits) -> float:
    """Cross-entropy of the synthesized-image class field against the real one.

    Both inputs are softmaxed; synthesized probabilities are floored at
    1e-12 before the log.
    """
    real = _as_array(real_logits, "real_logits")
    fake = _as_array(fake_logits, "fake_logits")
    if real.shape != fake.shape:
        raise LossInputError(f"shape mismatch {real.shape} vs {fake.shape}")
    if real.ndim == 4:
        return float(np.mean([ref_consistency(real[i], fake[i])
                              for i in range(real.shape[0])]))
    if real.ndim != 3:
        raise LossInputError(f"logits must be (K, H, W), got {real.shape}")
    p = np.exp(_log_softmax(real))
    q = np.exp(_log_softmax(fake))
    ce = -(p * np.log(np.maximum(q, PROB_CLAMP))).sum(axis=0)
    return float(ce.mean())


def ref_total(schedule: RefineSchedule, real_term: float, fake_term: float,
              consistency_term: float) -> float:
    """Warm-up combination: real term only before epoch gamma, all three after."""
    for name, v in (("real_term", real_term), ("fake_term", fake_term),
                    ("consistency_term", consistency_term)):
        if not np.isfinite(v):
            raise LossInputError(f"{name} is not finite")
    if schedule.feedback_active:
        return float(real_term + fake_term + consistency_term)
    return float(real_term)


def total(weights: LossWeights, adv_g_term: float, fm_term: float,
          perc_term: float, ref_term: float) -> float:
    """Weighted generator objective over precomputed component values."""
    for name, v in (("adv_g_term", adv_g_term), ("fm_term", fm_term),
                    ("perc_term", perc_term), ("ref_term", ref_term)):
        if not np.isfinite(v):
            raise LossInputError(f"{name} is not finite")
    return float(weights.lambda_adv * adv_g_term + weights.lambda_fm * fm_term
                 + weights.lambda_perc * perc_term + weights.lambda_ref * ref_term)
