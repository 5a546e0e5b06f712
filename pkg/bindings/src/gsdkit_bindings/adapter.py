"""Array adapters over the gsdkit public API plus a directory dataloader."""

from __future__ import annotations

from pathlib import Path
from typing import Iterator

import numpy as np

import gsdkit
from gsdkit import GsdConfig, LabelMap, LossWeights, RefineSchedule
from gsdkit.embedding import PyramidSpec
from gsdkit.metrics import DistanceMapSet


def _as_config(config) -> GsdConfig:
    if config is None:
        return GsdConfig()
    if isinstance(config, GsdConfig):
        return config
    if isinstance(config, dict):
        return GsdConfig.from_dict(config)
    raise TypeError(f"config must be GsdConfig, dict, or None, got {type(config)}")


def _instance_array(instances) -> np.ndarray:
    arr = np.asarray(instances)
    if arr.ndim != 3:
        raise ValueError(f"instances must be (B, H, W), got shape {arr.shape}")
    if arr.dtype.kind not in "iu":
        raise TypeError(f"instance ids must be integers, got {arr.dtype}")
    # non-contiguous or exotic layouts are copied, never reinterpreted
    return np.ascontiguousarray(arr)


def compute_batch(instances, config=None, *, threads: int = 1) -> np.ndarray:
    """Descriptor tensor for an integer (B, H, W) id array.

    Returns float32 (B, n_theta*n_rho, H, W), bit-identical to what
    `gsdkit gsd compute` writes for the same ids.
    """
    cfg = _as_config(config)
    return gsdkit.compute_batch(_instance_array(instances), cfg,
                                threads=threads).values


def assemble(onehot, gsd) -> np.ndarray:
    """Stack one-hot layout over descriptor channels; layout first."""
    return gsdkit.assemble(np.asarray(onehot), np.asarray(gsd)).values


def downsample(values, num_classes: int, scales) -> list[np.ndarray]:
    """Pyramid of a (B, K+C, H, W) hybrid array at square or (h, w) scales."""
    from gsdkit.embedding import HybridEmbedding

    emb = HybridEmbedding(values=np.ascontiguousarray(values, dtype=np.float32),
                          split=num_classes)
    pairs = [(s, s) if np.isscalar(s) else tuple(s) for s in scales]
    return [lvl.values for lvl in gsdkit.downsample(emb, PyramidSpec(scales=tuple(pairs)))]


def loss_adv_d(real_scores, fake_scores) -> float:
    return gsdkit.adv_d(real_scores, fake_scores)


def loss_adv_g(fake_scores) -> float:
    return gsdkit.adv_g(fake_scores)


def loss_feature_match(real_feats, fake_feats) -> float:
    return gsdkit.feature_match(real_feats, fake_feats)


def loss_perceptual(real_feats, fake_feats, *, normalized: bool = False) -> float:
    return gsdkit.perceptual(real_feats, fake_feats, normalized=normalized)


def loss_ref_ce(logits, labels) -> float:
    return gsdkit.ref_ce(logits, labels)


def loss_ref_consistency(real_logits, fake_logits) -> float:
    return gsdkit.ref_consistency(real_logits, fake_logits)


def loss_ref_total(epoch: int, gamma: int, real_term: float, fake_term: float,
                   consistency_term: float) -> float:
    return gsdkit.ref_total(RefineSchedule(epoch=epoch, gamma=gamma),
                            real_term, fake_term, consistency_term)


def loss_total(adv_g_term: float, fm_term: float, perc_term: float,
               ref_term: float, weights: dict | None = None) -> float:
    w = LossWeights(**weights) if weights else LossWeights()
    return gsdkit.total(w, adv_g_term, fm_term, perc_term, ref_term)


def fid(real_features, fake_features) -> float:
    """Fréchet distance between two (n, dim) feature matrices."""
    return gsdkit.frechet_distance(gsdkit.fit_gaussian(np.asarray(real_features)),
                                   gsdkit.fit_gaussian(np.asarray(fake_features)))


def seg_metrics(pred, truth, num_classes: int | None = None,
                ignore: int | None = None) -> dict:
    """Confusion-matrix scores for one prediction/truth raster pair or batch."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.ndim == 2:
        pred, truth = pred[None], truth[None]
    if num_classes is None:
        num_classes = int(max(pred.max(), truth.max())) + 1
    cm = None
    for p, t in zip(pred, truth):
        c = gsdkit.confusion(LabelMap(labels=p, num_classes=num_classes),
                             LabelMap(labels=t, num_classes=num_classes),
                             ignore=ignore)
        cm = c if cm is None else cm + c
    return {
        "miou": gsdkit.miou(cm),
        "accuracy": gsdkit.accuracy(cm),
        "fwiou": gsdkit.fwiou(cm),
        "confusion": cm.counts,
    }


def diversity(distance_maps, label_maps, num_classes: int) -> dict:
    """Masked diversity means over per-pair distance rasters and label rasters."""
    pairs = tuple(
        (np.asarray(d), LabelMap(labels=np.asarray(m), num_classes=num_classes))
        for d, m in zip(distance_maps, label_maps))
    res = gsdkit.diversity(DistanceMapSet(pairs=pairs), num_classes)
    return {
        "lpips_mean": res.lpips_mean,
        "mcsd": res.mcsd,
        "mocd": res.mocd,
        "class_diversity": res.class_diversity,
        "other_class_diversity": res.other_class_diversity,
        "skipped_classes": res.skipped_classes,
    }


def dataloader_adapter(mask_dir, config=None, *, num_classes: int | None = None,
                       threads: int = 1) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Iterate (one_hot, descriptor, hybrid) triples over a directory of
    label rasters, in sorted filename order.

    Labels are split into 8-connected per-class components before the
    descriptor pass, matching `gsdkit gsd compute --from-labels`. Shapes
    per item: (K, H, W), (C, H, W), (K+C, H, W); K is fixed by
    num_classes (or each raster's own sidecar/max when unset).
    """
    cfg = _as_config(config)
    root = Path(mask_dir)
    if not root.is_dir():
        raise NotADirectoryError(f"{mask_dir} is not a directory")
    names = sorted(p for p in root.iterdir()
                   if p.is_file() and not p.name.endswith(".json"))
    for path in names:
        lm = gsdkit.load_label_map(path, num_classes=num_classes)
        onehot = gsdkit.one_hot(lm)
        inst = gsdkit.instances_from_labels(lm)
        desc = gsdkit.compute_batch(inst.ids[None], cfg, threads=threads).values[0]
        hybrid = gsdkit.assemble(onehot[None], desc[None]).values[0]
        yield onehot, desc, hybrid
