"""Dense log-polar spatial descriptors for instance rasters.

For every pixel of every instance, the descriptor is a histogram of the
instance's contour points expressed in log-polar coordinates around that
pixel: distances are normalized by the farthest contour point (radii land
in [0, 2]), binned on logarithmically spaced radial edges, and angles on
uniform sectors of the full circle. Image y grows downward, so the angle
uses the negated row offset to keep the usual counter-clockwise
convention. Histograms are count-normalized, written channel-first with
the radial bin as the major axis, and the stacked tensor is standardized
per batch item over all channels and pixels.

All angle and distance math runs in float64; tensor storage is float32.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .contour import ContourSet, boundary_mask
from .raster import InstanceMap, LabelMap

TWO_PI = 2.0 * math.pi

# Fixed work-unit size (query x contour pairs) so memory stays bounded;
# results never depend on the split because every query row is independent.
_CHUNK_PAIRS = 1_000_000


@dataclass(frozen=True)
class GsdConfig:
    """Descriptor geometry and stabilizer settings.

    Defaults: 6 radial bins, 12 angular sectors, radial domain
    [0.125, 2.0] so the outer edge exactly covers the normalized radius
    range, epsilon 1e-8.
    """

    n_rho: int = 6
    n_theta: int = 12
    r_inner: float = 0.125
    r_outer: float = 2.0
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.n_rho < 1 or self.n_theta < 1:
            raise ValueError("n_rho and n_theta must be >= 1")
        if not (0.0 < self.r_inner < self.r_outer):
            raise ValueError("need 0 < r_inner < r_outer")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be > 0")

    @property
    def channels(self) -> int:
        return self.n_rho * self.n_theta

    def to_dict(self) -> dict:
        return {"n_rho": self.n_rho, "n_theta": self.n_theta,
                "r_inner": self.r_inner, "r_outer": self.r_outer,
                "epsilon": self.epsilon}

    @classmethod
    def from_dict(cls, d: dict) -> "GsdConfig":
        known = {k: d[k] for k in ("n_rho", "n_theta", "r_inner", "r_outer", "epsilon")
                 if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**known)


@dataclass(frozen=True)
class PolarPoint:
    """A contour point relative to a query pole: distance and angle in [0, 2pi)."""

    r: float
    theta_adj: float


@dataclass
class DescriptorTensor:
    """Stacked per-pixel histograms, shape (batch, n_theta*n_rho, H, W).

    Channel layout: channel = (radial_bin - 1) * n_theta + (angular_bin - 1).
    Pixels outside every instance hold the standardized image of raw zero.
    """

    values: np.ndarray  # float32
    config: GsdConfig
    standardized: bool = True
    clamped_bins: int = 0

    def __post_init__(self):
        if self.values.ndim != 4:
            raise ValueError(f"descriptor values must be 4-D, got {self.values.shape}")
        if self.values.shape[1] != self.config.channels:
            raise ValueError(
                f"channel count {self.values.shape[1]} does not match config "
                f"({self.config.channels})")
        if self.values.dtype != np.float32:
            raise ValueError(f"descriptor storage must be float32, got {self.values.dtype}")

    @property
    def batch(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[2]

    @property
    def width(self) -> int:
        return self.values.shape[3]


def polar_coords(s: tuple[float, float], p: tuple[float, float]) -> PolarPoint:
    """Polar coordinates of contour point p around pole s.

    The angle is atan2(-(y_p - y_s), x_p - x_s), shifted into [0, 2pi);
    the y offset is negated because image rows grow downward.
    p == s maps to r=0, theta=0 by the atan2(0, 0) = 0 convention.
    """
    dx = float(p[0]) - float(s[0])
    dy_neg = float(s[1]) - float(p[1])
    r = math.sqrt(dx * dx + dy_neg * dy_neg)
    theta = float(np.arctan2(dy_neg, dx))
    if theta < 0.0:
        theta += TWO_PI
    return PolarPoint(r=r, theta_adj=theta)


def normalize_radii(rs) -> np.ndarray:
    """Scale distances by 2/max so results lie in [0, 2]; all-zero input stays zero."""
    rs = np.asarray(rs, dtype=np.float64)
    if rs.size == 0:
        raise ValueError("empty distance list")
    rmax = rs.max()
    if rmax == 0.0:
        return np.zeros_like(rs)
    return 2.0 * rs / rmax


def radial_edges(config: GsdConfig) -> np.ndarray:
    """Logarithmically spaced radial bin edges r_1..r_{n_rho}.

    Endpoints are pinned to r_inner / r_outer exactly so the last edge
    admits the maximal normalized radius when r_outer >= 2.
    """
    if config.n_rho == 1:
        return np.array([config.r_outer], dtype=np.float64)
    lo = math.log10(config.r_inner)
    hi = math.log10(config.r_outer)
    t = np.arange(config.n_rho, dtype=np.float64) / (config.n_rho - 1)
    edges = 10.0 ** (lo + (hi - lo) * t)
    edges[0] = config.r_inner
    edges[-1] = config.r_outer
    return edges


def radial_bin(r_norm: float, edges: np.ndarray) -> int:
    """1-based index of the smallest edge >= r_norm; clamps past the last edge."""
    idx = int(np.searchsorted(edges, r_norm, side="left"))
    if idx >= len(edges):
        warnings.warn(
            f"normalized radius {r_norm} exceeds outer edge {edges[-1]}; clamped",
            RuntimeWarning, stacklevel=2)
        return len(edges)
    return idx + 1


def angular_bin(theta_adj: float, config: GsdConfig) -> int:
    """1-based sector index of an angle in [0, 2pi); exactly-2pi clamps to n_theta."""
    delta = TWO_PI / config.n_theta
    idx = int(math.floor(theta_adj / delta))
    if idx >= config.n_theta:
        idx = config.n_theta - 1
    return idx + 1


def point_histogram(s: tuple[int, int], contour, config: GsdConfig) -> np.ndarray:
    """Normalized (n_rho, n_theta) histogram of contour points around s.

    Counts divided by (N + epsilon), N the contour point count, so the
    histogram mass is N / (N + epsilon).
    """
    pts = contour.points if isinstance(contour, ContourSet) else np.asarray(contour)
    if len(pts) == 0:
        raise ValueError("empty contour")
    qx = np.asarray([s[0]], dtype=np.int64)
    qy = np.asarray([s[1]], dtype=np.int64)
    hist, _ = _histogram_rows(qx, qy, pts[:, 0].astype(np.int64),
                              pts[:, 1].astype(np.int64), config,
                              radial_edges(config))
    return hist[0].reshape(config.n_rho, config.n_theta)


def _histogram_rows(qx, qy, px, py, config: GsdConfig, edges) -> tuple[np.ndarray, int]:
    """Normalized histograms for each query point, flattened channel-last.

    Returns (Q, n_rho*n_theta) float64 plus the clamped-radial-bin count.
    Offsets are exact integers, so the int32 fast lane below produces the
    same float64 distances and angles as scalar arithmetic would.
    """
    n = px.shape[0]
    if max(qx.max(initial=0), qy.max(initial=0), px.max(initial=0),
           py.max(initial=0)) < 16384:
        qx32, qy32 = qx.astype(np.int32), qy.astype(np.int32)
        dx = px.astype(np.int32)[None, :] - qx32[:, None]
        dy_neg = qy32[:, None] - py.astype(np.int32)[None, :]
    else:
        dx = px[None, :] - qx[:, None]
        dy_neg = qy[:, None] - py[None, :]
    r = np.sqrt(dx * dx + dy_neg * dy_neg)
    rmax = r.max(axis=1)
    zero_rows = rmax == 0.0
    if zero_rows.any():
        rmax = np.where(zero_rows, 1.0, rmax)
    np.multiply(r, 2.0, out=r)
    np.divide(r, rmax[:, None], out=r)
    if zero_rows.any():
        r[zero_rows] = 0.0

    # int32 inputs upcast exactly to float64 inside the ufunc
    theta = np.arctan2(dy_neg, dx)
    np.add(theta, TWO_PI, out=theta, where=theta < 0.0)

    # searchsorted lands past the last edge only when r_outer < 2
    rbin0 = np.searchsorted(edges, r, side="left")
    clamped = int((rbin0 >= config.n_rho).sum())
    if clamped:
        rbin0 = np.minimum(rbin0, config.n_rho - 1)
    delta = TWO_PI / config.n_theta
    np.divide(theta, delta, out=theta)
    np.floor(theta, out=theta)
    tbin0 = theta.astype(np.int64)
    np.minimum(tbin0, config.n_theta - 1, out=tbin0)

    channel = rbin0 * config.n_theta + tbin0
    q = qx.shape[0]
    c = config.channels
    flat = (np.arange(q, dtype=np.int64)[:, None] * c + channel).ravel()
    counts = np.bincount(flat, minlength=q * c).reshape(q, c)
    return counts.astype(np.float64) / (n + config.epsilon), clamped


def _as_batch(instances) -> np.ndarray:
    if isinstance(instances, InstanceMap):
        return instances.ids[None, :, :]
    if isinstance(instances, (list, tuple)):
        stacked = [(i.ids if isinstance(i, InstanceMap) else np.asarray(i))
                   for i in instances]
        return np.stack(stacked, axis=0)
    arr = np.asarray(instances)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise ValueError(f"expected (H, W) or (B, H, W) instance ids, got {arr.shape}")
    if arr.dtype.kind not in "iu":
        raise ValueError(f"instance ids must be integer-typed, got {arr.dtype}")
    return arr


def compute_batch(instances, config: GsdConfig | None = None, *,
                  threads: int = 1, standardized: bool = True,
                  moment_scope: str = "full") -> DescriptorTensor:
    """Descriptor tensor for a batch of instance maps.

    For each batch item and each nonzero instance id, every pixel of the
    instance receives the normalized histogram of that instance's contour
    points; all other pixels hold raw zero. The result is standardized
    per batch item unless standardized=False.

    threads > 1 parallelizes over (instance, pixel-chunk) work units;
    output values are identical for any thread count.
    """
    cfg = config if config is not None else GsdConfig()
    batch = _as_batch(instances)
    b_sz, height, width = batch.shape
    out = np.zeros((b_sz, cfg.channels, height, width), dtype=np.float32)
    edges = radial_edges(cfg)

    tasks = []
    fg = np.zeros((b_sz, height, width), dtype=bool)
    for b in range(b_sz):
        item = batch[b]
        for iid in np.unique(item):
            if iid == 0:
                continue
            mask = item == iid
            fg[b] |= mask
            cyx = np.nonzero(boundary_mask(mask))
            px = cyx[1].astype(np.int64)
            py = cyx[0].astype(np.int64)
            qyx = np.nonzero(mask)
            qx = qyx[1].astype(np.int64)
            qy = qyx[0].astype(np.int64)
            rows_per_chunk = max(1, _CHUNK_PAIRS // max(1, len(px)))
            for lo in range(0, len(qx), rows_per_chunk):
                sl = slice(lo, lo + rows_per_chunk)
                tasks.append((b, qx[sl], qy[sl], px, py))

    def run(task):
        b, tqx, tqy, tpx, tpy = task
        hist, clamped = _histogram_rows(tqx, tqy, tpx, tpy, cfg, edges)
        out[b][:, tqy, tqx] = hist.T.astype(np.float32)
        return clamped

    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            clamp_total = sum(pool.map(run, tasks))
    else:
        clamp_total = sum(run(t) for t in tasks)

    if standardized:
        values = standardize_values(out, cfg.epsilon, moment_scope=moment_scope,
                                    foreground=fg)
    else:
        values = out
    return DescriptorTensor(values=values, config=cfg, standardized=standardized,
                            clamped_bins=clamp_total)


def standardize_values(raw: np.ndarray, epsilon: float, *,
                       moment_scope: str = "full",
                       foreground: np.ndarray | None = None) -> np.ndarray:
    """Per-batch-item standardization of a (B, C, H, W) tensor.

    moment_scope "full" takes mean/std over all channels and pixels of
    the item (the padded tensor, background zeros included); "foreground"
    takes them over instance pixels only and needs the foreground mask.
    Standard deviation is the population form (divisor M). The affine
    transform is applied to the whole item either way, so a constant item
    maps to exact zeros.
    """
    if moment_scope not in ("full", "foreground"):
        raise ValueError(f"unknown moment_scope {moment_scope!r}")
    if moment_scope == "foreground" and foreground is None:
        raise ValueError("moment_scope='foreground' requires the foreground mask")
    out = np.empty_like(raw, dtype=np.float32)
    for b in range(raw.shape[0]):
        x = raw[b].astype(np.float64)
        if moment_scope == "full":
            sample = x
        else:
            sample = x[:, foreground[b]]
        if sample.size == 0:
            mu = 0.0
            sigma = 0.0
        else:
            mu = np.mean(sample)
            sigma = np.sqrt(np.mean((sample - mu) ** 2))
        out[b] = ((x - mu) / (sigma + epsilon)).astype(np.float32)
    return out


def standardize(raw: DescriptorTensor, *, moment_scope: str = "full",
                foreground: np.ndarray | None = None) -> DescriptorTensor:
    """Standardized copy of a raw descriptor tensor (see standardize_values)."""
    values = standardize_values(raw.values, raw.config.epsilon,
                                moment_scope=moment_scope, foreground=foreground)
    return DescriptorTensor(values=values, config=raw.config, standardized=True,
                            clamped_bins=raw.clamped_bins)


def instances_from_labels(label_map: LabelMap, *, connectivity: int = 8,
                          ignore_classes: tuple[int, ...] = ()) -> InstanceMap:
    """Synthesize an instance map from a label map by connected components.

    Every class (background class included, unless listed in
    ignore_classes) is split into 8-connected components by default; ids
    are assigned 1..N in (class, component) order.
    """
    from scipy import ndimage

    if connectivity == 8:
        structure = np.ones((3, 3), dtype=bool)
    elif connectivity == 4:
        structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    else:
        raise ValueError("connectivity must be 4 or 8")
    ids = np.zeros(label_map.labels.shape, dtype=np.int32)
    next_id = 1
    for cls in np.unique(label_map.labels):
        if int(cls) in ignore_classes:
            continue
        comp, n = ndimage.label(label_map.labels == cls, structure=structure)
        ids[comp > 0] = comp[comp > 0] + (next_id - 1)
        next_id += n
    return InstanceMap(ids=ids)
