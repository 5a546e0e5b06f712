"""In-process array front end for gsdkit.

Training pipelines call these on in-memory numpy arrays without any file
round-trips. Every function is a thin, stateless adapter over the gsdkit
public API: inputs are normalized to contiguous row-major layout (copying
when needed, never silently truncating a dtype) and outputs are plain
arrays. Descriptor values are bit-identical to what the gsdkit CLI writes
for the same input.
"""

from .adapter import (assemble, compute_batch, dataloader_adapter, diversity,
                      downsample, fid, loss_adv_d, loss_adv_g,
                      loss_feature_match, loss_perceptual, loss_ref_ce,
                      loss_ref_consistency, loss_ref_total, loss_total,
                      seg_metrics)

__version__ = "0.1.0"

__all__ = [
    "assemble", "compute_batch", "dataloader_adapter", "diversity",
    "downsample", "fid", "loss_adv_d", "loss_adv_g", "loss_feature_match",
    "loss_perceptual", "loss_ref_ce", "loss_ref_consistency", "loss_ref_total",
    "loss_total", "seg_metrics", "__version__",
]
