"""Hybrid semantic embeddings: one-hot layout stacked with descriptor channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptor import DescriptorTensor


@dataclass(frozen=True)
class HybridEmbedding:
    """(B, K + C, H, W) float32 tensor; the first `split` channels are one-hot."""

    values: np.ndarray
    split: int

    def __post_init__(self):
        if self.values.ndim != 4:
            raise ValueError(f"embedding must be 4-D, got shape {self.values.shape}")
        if not 0 < self.split <= self.values.shape[1]:
            raise ValueError(f"split {self.split} out of range for "
                             f"{self.values.shape[1]} channels")
        onehot = self.values[:, :self.split]
        if not ((onehot == 0.0) | (onehot == 1.0)).all():
            raise ValueError("layout channels must be exactly 0 or 1")
        if not (onehot.sum(axis=1) == 1.0).all():
            raise ValueError("layout channels must sum to 1 at every pixel")

    @property
    def layout(self) -> np.ndarray:
        return self.values[:, :self.split]

    @property
    def descriptor(self) -> np.ndarray:
        return self.values[:, self.split:]

    @property
    def num_classes(self) -> int:
        return self.split


@dataclass(frozen=True)
class PyramidSpec:
    """Target (height, width) scales, finest first; each must divide the previous."""

    scales: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.scales:
            raise ValueError("empty pyramid spec")
        prev = None
        for h, w in self.scales:
            if h < 1 or w < 1:
                raise ValueError(f"invalid scale ({h}, {w})")
            if prev is not None and (prev[0] % h or prev[1] % w):
                raise ValueError(f"scale ({h}, {w}) does not divide ({prev[0]}, {prev[1]})")
            prev = (h, w)

    @classmethod
    def from_square_sizes(cls, sizes) -> "PyramidSpec":
        return cls(scales=tuple((int(s), int(s)) for s in sizes))


def _batched(arr: np.ndarray, name: str) -> np.ndarray:
    if arr.ndim == 3:
        return arr[None]
    if arr.ndim != 4:
        raise ValueError(f"{name} must be (C, H, W) or (B, C, H, W), got {arr.shape}")
    return arr


def assemble(onehot: np.ndarray, gsd) -> HybridEmbedding:
    """Concatenate one-hot layout and descriptor channels, layout first.

    Purely a stacking step: splitting at the layout channel count returns
    both inputs unchanged.
    """
    gsd_values = gsd.values if isinstance(gsd, DescriptorTensor) else np.asarray(gsd)
    onehot = _batched(np.asarray(onehot, dtype=np.float32), "onehot")
    gsd_values = _batched(gsd_values, "gsd")
    if onehot.shape[0] != gsd_values.shape[0] or onehot.shape[2:] != gsd_values.shape[2:]:
        raise ValueError(f"shape mismatch: onehot {onehot.shape} vs gsd {gsd_values.shape}")
    values = np.concatenate([onehot, gsd_values.astype(np.float32)], axis=1)
    return HybridEmbedding(values=values, split=onehot.shape[1])


def split(embedding: HybridEmbedding) -> tuple[np.ndarray, np.ndarray]:
    """Recover (one-hot, descriptor) exactly as passed to assemble."""
    return embedding.layout.copy(), embedding.descriptor.copy()


def downsample(embedding: HybridEmbedding, spec: PyramidSpec) -> list[HybridEmbedding]:
    """Embeddings at each pyramid scale.

    Layout channels shrink by per-block majority vote on the class id
    (ties go to the lowest id), then re-expand to one-hot; descriptor
    channels shrink by block mean. Every scale is produced from the
    original resolution, not cascaded.
    """
    b, _, h, w = embedding.values.shape
    k = embedding.split
    out = []
    for th, tw in spec.scales:
        if h % th or w % tw:
            raise ValueError(f"scale ({th}, {tw}) does not divide input ({h}, {w})")
        bh, bw = h // th, w // tw
        layout = embedding.layout.reshape(b, k, th, bh, tw, bw)
        votes = layout.sum(axis=(3, 5))
        winner = votes.argmax(axis=1)
        onehot = np.zeros((b, k, th, tw), dtype=np.float32)
        bb, yy, xx = np.indices(winner.shape)
        onehot[bb, winner, yy, xx] = 1.0

        desc = embedding.descriptor.astype(np.float64)
        desc = desc.reshape(b, desc.shape[1], th, bh, tw, bw).mean(axis=(3, 5))
        values = np.concatenate([onehot, desc.astype(np.float32)], axis=1)
        out.append(HybridEmbedding(values=values, split=k))
    return out
