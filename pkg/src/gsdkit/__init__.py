"""Spatial descriptor tensors, hybrid semantic embeddings, and synthesis
evaluation oracles for label rasters."""

from .contour import ContourSet, InstanceNotFound, boundary_mask, contours_as_json, \
    extract_contours, instance_pixels
from .descriptor import DescriptorTensor, GsdConfig, PolarPoint, angular_bin, \
    compute_batch, instances_from_labels, normalize_radii, point_histogram, \
    polar_coords, radial_bin, radial_edges, standardize, standardize_values
from .embedding import HybridEmbedding, PyramidSpec, assemble, downsample, split
from .losses import DEFAULT_PERCEPTUAL_LAYERS, LossInputError, LossWeights, \
    RefineSchedule, adv_d, adv_g, feature_match, perceptual, ref_ce, \
    ref_consistency, ref_total, total
from .metrics import ConfusionMatrix, DistanceMapSet, DiversityResult, \
    GaussianStats, MetricError, accuracy, confusion, diversity, fit_gaussian, \
    frechet_distance, fwiou, miou, per_class_iou
from .raster import ContainerError, InstanceMap, LabelMap, RasterError, \
    load_instance_map, load_label_map, one_hot, read_tensor, save_label_map, \
    write_tensor

__version__ = "0.1.0"

__all__ = [
    "ContourSet", "InstanceNotFound", "boundary_mask", "contours_as_json",
    "extract_contours", "instance_pixels",
    "DescriptorTensor", "GsdConfig", "PolarPoint", "angular_bin", "compute_batch",
    "instances_from_labels", "normalize_radii", "point_histogram", "polar_coords",
    "radial_bin", "radial_edges", "standardize", "standardize_values",
    "HybridEmbedding", "PyramidSpec", "assemble", "downsample", "split",
    "DEFAULT_PERCEPTUAL_LAYERS", "LossInputError", "LossWeights", "RefineSchedule",
    "adv_d", "adv_g", "feature_match", "perceptual", "ref_ce", "ref_consistency",
    "ref_total", "total",
    "ConfusionMatrix", "DistanceMapSet", "DiversityResult", "GaussianStats",
    "MetricError", "accuracy", "confusion", "diversity", "fit_gaussian",
    "frechet_distance", "fwiou", "miou", "per_class_iou",
    "ContainerError", "InstanceMap", "LabelMap", "RasterError",
    "load_instance_map", "load_label_map", "one_hot", "read_tensor",
    "save_label_map", "write_tensor",
    "__version__",
]
