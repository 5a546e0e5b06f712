"""Contour and pixel-set extraction for instance masks.

A contour pixel is an instance pixel with at least one 4-neighbor outside
the instance, or one lying on the raster border. The result is an
unordered set listed in row-major scan order, which is what the
descriptor stage consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import InstanceMap


class InstanceNotFound(ValueError):
    """Requested instance id is absent or reserved."""


@dataclass(frozen=True)
class ContourSet:
    """Boundary pixels of one instance, as (x, y) = (column, row) pairs."""

    instance_id: int
    points: np.ndarray  # (N, 2) int32, columns (x, y), row-major order

    def __len__(self) -> int:
        return len(self.points)

    def as_lists(self) -> list[list[int]]:
        return [[int(x), int(y)] for x, y in self.points]


def _require_instance(inst: InstanceMap, instance_id: int) -> np.ndarray:
    if instance_id == 0:
        raise InstanceNotFound("instance id 0 is reserved for background")
    mask = inst.ids == instance_id
    if not mask.any():
        raise InstanceNotFound(f"instance id {instance_id} not present")
    return mask


def boundary_mask(mask: np.ndarray) -> np.ndarray:
    """Boolean mask of pixels with an exposed 4-neighbor (border counts)."""
    padded = np.pad(mask, 1, mode="constant", constant_values=False)
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1] &
                padded[1:-1, :-2] & padded[1:-1, 2:])
    return mask & ~interior


def _points_xy(mask: np.ndarray) -> np.ndarray:
    ys, xs = np.nonzero(mask)
    return np.stack([xs, ys], axis=1).astype(np.int32)


def extract_contours(inst: InstanceMap, instance_id: int) -> ContourSet:
    """All boundary pixels of the given instance, row-major order."""
    mask = _require_instance(inst, instance_id)
    return ContourSet(instance_id=instance_id, points=_points_xy(boundary_mask(mask)))


def instance_pixels(inst: InstanceMap, instance_id: int) -> np.ndarray:
    """All (x, y) pixels of the instance, row-major order; superset of the contour."""
    mask = _require_instance(inst, instance_id)
    return _points_xy(mask)


def contours_as_json(inst: InstanceMap) -> dict[str, list[list[int]]]:
    """Contour sets of every instance, keyed by id, for the CLI debug dump."""
    return {str(i): extract_contours(inst, i).as_lists() for i in inst.instance_ids()}
