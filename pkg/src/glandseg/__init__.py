"""Gland segmentation in H&E histopathology images.

The pipeline: multi-level Otsu thresholding proposes candidate nuclei, a
random forest over color histogram and Haralick texture features keeps the
epithelial ones, and a per-image geometric construction (endpoint linking
for sparse boundaries, normal-direction line growth for dense ones) closes
them into gland regions.
"""

__version__ = "0.1.0"

from .boundary import (
    BoundaryKind,
    GlandSegmentation,
    LineGrowParams,
    ThinLinkParams,
    classify_boundary_kind,
    compute_threshold_nth,
    construct_thick,
    endpoint_neighbor_ratio,
    grow_lines_thick,
    identify_gland_holes,
    link_endpoints_thin,
    window_mean_map,
)
from .config import PipelineConfig
from .dataset import DatasetEntry, DatasetIndex, ingest_dataset, load_entry
from .errors import (
    ConfigError,
    DegenerateInputError,
    GlandSegError,
    IngestError,
    ModelChecksumError,
    ModelFormatError,
    ModelVersionError,
    TruncatedModelError,
)
from .features import (
    FEATURE_DIM,
    Glcm,
    Window,
    build_training_set,
    channel_histogram,
    component_features,
    extract_window,
    feature_vector,
    glcm,
    haralick13,
)
from .forest import RandomForest, load_forest, save_forest
from .io import (
    atomic_write_text,
    load_annotation,
    load_rgb,
    save_label_map,
    save_mask,
    save_overlay,
)
from .metrics import (
    MetricsReport,
    ObjectMatch,
    dice,
    evaluate_split,
    hausdorff,
    match_objects,
    object_dice,
    object_hausdorff,
)
from .preprocess import (
    DiffusionParams,
    OtsuResult,
    darkest_segment,
    epithelial_mask,
    multi_otsu,
    perona_malik,
)
from .raster import (
    area_filter,
    centroids,
    draw_line,
    endpoints,
    fill_holes,
    label_components,
    majority_filter,
    sobel,
    thin,
    to_grayscale,
)
from .segmenter import GlandSegmenter

__all__ = [
    "BoundaryKind", "ConfigError", "DatasetEntry", "DatasetIndex",
    "DegenerateInputError", "DiffusionParams", "FEATURE_DIM", "Glcm",
    "GlandSegError", "GlandSegmentation", "GlandSegmenter", "IngestError",
    "LineGrowParams", "MetricsReport", "ModelChecksumError",
    "ModelFormatError", "ModelVersionError", "ObjectMatch", "OtsuResult",
    "PipelineConfig", "RandomForest", "ThinLinkParams", "TruncatedModelError",
    "Window", "area_filter", "atomic_write_text", "build_training_set",
    "centroids", "channel_histogram", "classify_boundary_kind",
    "component_features", "compute_threshold_nth", "construct_thick",
    "darkest_segment", "dice", "draw_line", "endpoint_neighbor_ratio",
    "endpoints", "epithelial_mask", "evaluate_split", "extract_window",
    "feature_vector", "fill_holes", "glcm", "grow_lines_thick", "haralick13",
    "hausdorff", "identify_gland_holes", "ingest_dataset", "label_components",
    "link_endpoints_thin", "load_annotation", "load_entry", "load_forest",
    "load_rgb", "majority_filter", "match_objects", "multi_otsu",
    "object_dice", "object_hausdorff", "perona_malik", "save_forest",
    "save_label_map", "save_mask", "save_overlay", "sobel", "thin",
    "to_grayscale", "window_mean_map",
]
