"""Optional matplotlib renderings saved next to CLI reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .descriptor import DescriptorTensor
from .metrics import ConfusionMatrix, DiversityResult, per_class_iou


def save_descriptor_montage(dt: DescriptorTensor, path: str | Path,
                            item: int = 0, max_channels: int = 24) -> Path:
    """Grid of descriptor channel images for one batch item."""
    values = dt.values[item]
    n = min(values.shape[0], max_channels)
    cols = 6
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(2.0 * cols, 2.0 * rows))
    for i, ax in enumerate(np.atleast_1d(axes).ravel()):
        ax.axis("off")
        if i < n:
            ax.imshow(values[i], cmap="viridis")
            ax.set_title(f"ch {i}", fontsize=7)
    fig.suptitle(f"descriptor channels (item {item}, first {n} of {values.shape[0]})")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def save_confusion_heatmap(cm: ConfusionMatrix, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4.4))
    c = cm.counts.astype(np.float64)
    rows = c.sum(axis=1, keepdims=True)
    shown = np.divide(c, rows, out=np.zeros_like(c), where=rows > 0)
    im = ax.imshow(shown, cmap="magma", vmin=0.0, vmax=1.0)
    ax.set_xlabel("predicted class")
    ax.set_ylabel("true class")
    ax.set_title("row-normalized confusion")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_iou_bars(cm: ConfusionMatrix, path: str | Path) -> Path:
    iou = per_class_iou(cm)
    fig, ax = plt.subplots(figsize=(6, 3.2))
    xs = np.arange(len(iou))
    ax.bar(xs, np.nan_to_num(iou), color="#3a6ea5")
    ax.set_xticks(xs)
    ax.set_xlabel("class")
    ax.set_ylabel("IoU")
    ax.set_ylim(0, 1)
    ax.set_title("per-class IoU")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_diversity_bars(result: DiversityResult, path: str | Path) -> Path:
    classes = sorted(result.class_diversity)
    csd = [result.class_diversity[c] for c in classes]
    ocd = [result.other_class_diversity.get(c, np.nan) for c in classes]
    xs = np.arange(len(classes))
    width = 0.38
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.bar(xs - width / 2, csd, width, label="class region", color="#3a6ea5")
    ax.bar(xs + width / 2, ocd, width, label="other classes", color="#c0553d")
    ax.set_xticks(xs)
    ax.set_xticklabels([str(c) for c in classes])
    ax.set_xlabel("class")
    ax.set_ylabel("mean distance")
    ax.legend()
    ax.set_title("masked perceptual diversity")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
