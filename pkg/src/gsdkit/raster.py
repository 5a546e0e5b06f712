"""Label/instance rasters, one-hot encoding, and the GSDT tensor container.

Everything downstream works on row-major, channel-first numpy arrays. The
GSDT container is the single binary interchange format: a small header
(magic, version, dtype code, shape) followed by the raw little-endian
payload.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"GSDT"
CONTAINER_VERSION = 1

# dtype code -> numpy dtype (little-endian on disk)
DTYPE_CODES = {
    0: np.dtype("<f4"),
    1: np.dtype("<f8"),
    2: np.dtype("u1"),
    3: np.dtype("<i4"),
}
_CODE_FOR_KIND = {np.dtype(np.float32): 0, np.dtype(np.float64): 1,
                  np.dtype(np.uint8): 2, np.dtype(np.int32): 3}

_HEADER_FMT = "<4sHBB"  # magic, version, dtype code, ndim


class RasterError(ValueError):
    """Invalid raster, label, or container input."""


class ContainerError(RasterError):
    """Malformed GSDT container."""


def validate_tensor(arr: np.ndarray) -> np.ndarray:
    """Check the tensor invariants: supported dtype, finite float values."""
    arr = np.asarray(arr)
    if arr.dtype not in _CODE_FOR_KIND:
        raise RasterError(f"unsupported tensor dtype {arr.dtype}, "
                          f"expected one of float32/float64/uint8/int32")
    if arr.dtype.kind == "f" and not np.isfinite(arr).all():
        raise RasterError("tensor contains NaN or Inf values")
    return arr


@dataclass(frozen=True)
class LabelMap:
    """Per-pixel class ids in {0..num_classes-1} on an (H, W) grid."""

    labels: np.ndarray
    num_classes: int
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.shape[0] < 1 or labels.shape[1] < 1:
            raise RasterError(f"labels must be a non-empty 2-D raster, got shape {labels.shape}")
        if labels.dtype.kind not in "iu":
            raise RasterError(f"labels must be integer-typed, got {labels.dtype}")
        if labels.min() < 0:
            raise RasterError("negative label id")
        if int(labels.max()) >= self.num_classes:
            raise RasterError(
                f"label {int(labels.max())} >= num_classes {self.num_classes}")
        labels = np.ascontiguousarray(labels)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class InstanceMap:
    """Per-pixel instance ids on an (H, W) grid; id 0 means background."""

    ids: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids)
        if ids.ndim != 2 or ids.shape[0] < 1 or ids.shape[1] < 1:
            raise RasterError(f"ids must be a non-empty 2-D raster, got shape {ids.shape}")
        if ids.dtype.kind not in "iu":
            raise RasterError(f"ids must be integer-typed, got {ids.dtype}")
        if ids.min() < 0:
            raise RasterError("negative instance id")
        ids = np.ascontiguousarray(ids)
        ids.setflags(write=False)
        object.__setattr__(self, "ids", ids)

    @property
    def height(self) -> int:
        return self.ids.shape[0]

    @property
    def width(self) -> int:
        return self.ids.shape[1]

    def instance_ids(self) -> list[int]:
        """All ids present except the background 0, ascending."""
        ids = np.unique(self.ids)
        return [int(i) for i in ids if i != 0]


def one_hot(label_map: LabelMap) -> np.ndarray:
    """Expand a LabelMap to a (K, H, W) float32 one-hot tensor."""
    k = label_map.num_classes
    h, w = label_map.labels.shape
    out = np.zeros((k, h, w), dtype=np.float32)
    yy, xx = np.indices((h, w))
    out[label_map.labels, yy, xx] = 1.0
    return out


def write_tensor(path: str | Path, arr: np.ndarray) -> None:
    """Write an array as a GSDT container (row-major, little-endian)."""
    arr = validate_tensor(arr)
    code = _CODE_FOR_KIND[np.dtype(arr.dtype)]
    payload = np.ascontiguousarray(arr, dtype=DTYPE_CODES[code]).tobytes()
    with open(path, "wb") as fh:
        fh.write(struct.pack(_HEADER_FMT, MAGIC, CONTAINER_VERSION, code, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(payload)


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a GSDT container; inverse of write_tensor, bit-for-bit."""
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize(_HEADER_FMT))
        if len(head) < struct.calcsize(_HEADER_FMT):
            raise ContainerError(f"{path}: truncated header")
        magic, version, code, ndim = struct.unpack(_HEADER_FMT, head)
        if magic != MAGIC:
            raise ContainerError(f"{path}: bad magic {magic!r}")
        if version != CONTAINER_VERSION:
            raise ContainerError(f"{path}: unsupported container version {version}")
        if code not in DTYPE_CODES:
            raise ContainerError(f"{path}: unsupported dtype code {code}")
        shape_bytes = fh.read(8 * ndim)
        if len(shape_bytes) < 8 * ndim:
            raise ContainerError(f"{path}: truncated shape block")
        shape = struct.unpack(f"<{ndim}Q", shape_bytes)
        dtype = DTYPE_CODES[code]
        count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        payload = fh.read(count * dtype.itemsize + 1)
        if len(payload) < count * dtype.itemsize:
            raise ContainerError(
                f"{path}: truncated payload, expected {count * dtype.itemsize} bytes, "
                f"got {len(payload)}")
        if len(payload) > count * dtype.itemsize:
            raise ContainerError(f"{path}: trailing bytes after payload")
    arr = np.frombuffer(payload, dtype=dtype, count=count).reshape(shape)
    return validate_tensor(arr.copy())


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json")


def load_label_map(path: str | Path, num_classes: int | None = None) -> LabelMap:
    """Load a label raster from a single-channel image or a 2-D GSDT container.

    num_classes resolution order: explicit argument, then the `.json`
    sidecar, then max(label)+1. An explicit or sidecar value must cover
    every label present.
    """
    path = Path(path)
    if not path.exists():
        raise RasterError(f"{path}: no such file")
    class_names = None
    if path.suffix.lower() == ".gsdt" or _looks_like_container(path):
        arr = read_tensor(path)
        if arr.ndim != 2:
            raise RasterError(f"{path}: expected 2-D label data, got ndim={arr.ndim}")
        if arr.dtype.kind not in "iu":
            raise RasterError(f"{path}: label container must hold integer data, got {arr.dtype}")
        labels = arr
    else:
        labels = _read_label_image(path)
    sidecar = _sidecar_path(path)
    if num_classes is None and sidecar.exists():
        with open(sidecar) as fh:
            meta = json.load(fh)
        num_classes = meta.get("num_classes")
        names = meta.get("class_names")
        class_names = tuple(names) if names else None
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 1
    return LabelMap(labels=labels, num_classes=int(num_classes), class_names=class_names)


def save_label_map(path: str | Path, label_map: LabelMap) -> None:
    """Write a label raster as PNG (or a GSDT container for .gsdt paths)."""
    path = Path(path)
    if path.suffix.lower() == ".gsdt":
        write_tensor(path, label_map.labels.astype(np.int32))
    else:
        from PIL import Image

        labels = label_map.labels
        if labels.max() < 256:
            img = Image.fromarray(labels.astype(np.uint8), mode="L")
        else:
            img = Image.fromarray(labels.astype(np.int32), mode="I")
        img.save(path)
    meta: dict = {"num_classes": label_map.num_classes}
    if label_map.class_names:
        meta["class_names"] = list(label_map.class_names)
    with open(_sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_instance_map(path: str | Path) -> InstanceMap:
    """Load an instance raster; same formats as load_label_map."""
    lm = load_label_map(path)
    return InstanceMap(ids=lm.labels)


def _looks_like_container(path: Path) -> bool:
    try:
        with open(path, "rb") as fh:
            return fh.read(4) == MAGIC
    except OSError:
        return False


def _read_label_image(path: Path) -> np.ndarray:
    from PIL import Image

    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise RasterError(f"{path}: unreadable image ({exc})") from exc
    # P-mode rasters carry ids in the palette indices, which is what we want.
    if img.mode == "P":
        return np.asarray(img, dtype=np.int32)
    if img.mode in ("L", "I", "I;16", "I;16B", "I;16L"):
        return np.asarray(img, dtype=np.int32)
    raise RasterError(f"{path}: expected single-channel label raster, got mode {img.mode}")
