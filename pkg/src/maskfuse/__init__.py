"""maskfuse: refine segmentation pseudo-labels with unlabeled instance masks.

Pipeline: vote a class onto each instance mask from a dense pseudo-label
(majority or the semantic-guided rule), paint the masks into a sparse
label map, then fuse sparse and dense maps into a refined pseudo-label.
Also ships class-level mixing, IoU/mIoU evaluation, and rendering.
"""

from .backend import active_backend, available_backends, use_backend
from .fusion import fuse1, fuse2, fuse3
from .labeling import MaskVote, majority_label, paint_majority, paint_sgml, sgml_label, vote
from .metrics import ConfusionMatrix, compare_report, confusion, iou, miou
from .mixing import MixMask, classmix_apply, classmix_select
from .raster import (
    BinaryMask,
    ConfidenceMap,
    ImageRaster,
    LabelMap,
    MaskSet,
    RasterError,
    load_confidence,
    load_image_png,
    load_label_png,
    load_masks,
    rle_decode,
    rle_encode,
    save_confidence,
    save_image_png,
    save_label_png,
    save_masks_json,
    sort_by_area,
)
from .registry import (
    VOID_ID,
    ClassRegistry,
    ConfigError,
    RoadRegion,
    SimilarityMatrix,
    cityscapes_registry,
    default_road_region,
    load_registry,
    save_registry,
)
from .render import blend_over, render_label, render_masks
from .stats import ClassAreaStats, accumulate_stats, rare_class_candidates, suggest_class_split

__version__ = "0.1.0"

__all__ = [
    "BinaryMask", "ClassAreaStats", "ClassRegistry", "ConfidenceMap", "ConfigError",
    "ConfusionMatrix", "ImageRaster", "LabelMap", "MaskSet", "MaskVote", "MixMask",
    "RasterError", "RoadRegion", "SimilarityMatrix", "VOID_ID",
    "accumulate_stats", "active_backend", "available_backends", "blend_over",
    "cityscapes_registry", "classmix_apply", "classmix_select", "compare_report",
    "confusion", "default_road_region", "fuse1", "fuse2", "fuse3", "iou",
    "load_confidence", "load_image_png", "load_label_png", "load_masks",
    "load_registry", "majority_label", "miou", "paint_majority", "paint_sgml",
    "rare_class_candidates", "render_label", "render_masks", "rle_decode",
    "rle_encode", "save_confidence", "save_image_png", "save_label_png",
    "save_masks_json", "save_registry", "sgml_label", "sort_by_area",
    "suggest_class_split", "use_backend", "vote",
]
