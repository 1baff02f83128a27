"""Combine mask-derived and dense pseudo-labels into a refined label map.

Three strategies, all pixel-local:

1. mask labels win; void pixels fall back to the dense pseudo-label
2. dense pseudo-label wins; small-class pixels from the mask labels override
3. strategy 1, then pixels where the dense label names a class that one
   instance mask may have swallowed (per the similarity matrix) are
   restored to the dense label wherever its confidence strictly exceeds
   ``beta``
"""

from __future__ import annotations

import numpy as np

from .backend import kernels
from .raster import ConfidenceMap, LabelMap
from .registry import VOID_ID, ClassRegistry


def _check_dims(a, b, what: str) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError(f"{what}: dimension mismatch "
                         f"{a.width}x{a.height} vs {b.width}x{b.height}")


def fuse1(y_sam: LabelMap, y_uda: LabelMap, void_id: int = VOID_ID) -> LabelMap:
    """Mask labels where present, dense pseudo-label in the void gaps."""
    _check_dims(y_sam, y_uda, "fuse1")
    if np.any(y_uda.data == void_id):
        raise ValueError("fuse1: dense pseudo-label contains void pixels")
    out = np.where(y_sam.data == void_id, y_uda.data, y_sam.data)
    return LabelMap(data=out)


def fuse2(y_uda: LabelMap, y_sam: LabelMap, registry: ClassRegistry) -> LabelMap:
    """Dense pseudo-label, overridden where mask labels carry a small class."""
    _check_dims(y_uda, y_sam, "fuse2")
    small = np.zeros(256, dtype=bool)
    small[list(registry.small_classes)] = True
    out = np.where(small[y_sam.data], y_sam.data, y_uda.data)
    return LabelMap(data=out)


def fuse3(y1: LabelMap, y_uda: LabelMap, conf: ConfidenceMap,
          registry: ClassRegistry) -> LabelMap:
    """Granularity correction on top of strategy 1.

    A pixel flips back to the dense label ``i`` iff the strategy-1 label
    ``j`` is a configured absorption target (similarity (i, j) = 1) and
    the dense model is confident there (conf > beta, strict). Each pixel
    has exactly one dense label, so writes never conflict and the result
    is independent of any class iteration order.
    """
    _check_dims(y1, y_uda, "fuse3")
    if conf.data.shape != y1.data.shape:
        raise ValueError(f"fuse3: confidence {conf.width}x{conf.height} "
                         f"vs labels {y1.width}x{y1.height}")
    # float64 threshold so both backends compare promoted float32 confidences
    # identically (a weak python-float scalar would demote the numpy path)
    out_flat = kernels().fuse3_pass(
        y1.data.ravel(),
        y_uda.data.ravel(),
        conf.data.ravel(),
        registry.similarity_dense(),
        np.float64(registry.beta),
    )
    return LabelMap(data=out_flat.reshape(y1.data.shape))
