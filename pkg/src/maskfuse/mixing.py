"""Class-level cross-domain mixing (ClassMix).

Half of the classes present in the source label map (round up, void never
eligible) are selected by a seeded PCG64 generator; their pixels form a
binary mask that composites source over target for both image and label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import ImageRaster, LabelMap
from .registry import VOID_ID


@dataclass(frozen=True)
class MixMask:
    """Binary source-selection mask plus the classes that produced it."""

    data: np.ndarray
    selected_classes: frozenset[int]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def classmix_select(y_s: LabelMap, seed: int, void_id: int = VOID_ID) -> MixMask:
    """Pick ceil(k/2) of the k classes present in ``y_s`` and mask their pixels.

    Selection draws from numpy's PCG64 stream for ``seed``, so the same
    (labels, seed) pair reproduces the same mask on any platform.
    """
    present = np.unique(y_s.data)
    present = present[present != void_id]
    if present.size == 0:
        raise ValueError("classmix_select: label map is entirely void")
    n_sel = (present.size + 1) // 2
    rng = np.random.Generator(np.random.PCG64(seed))
    selected = rng.permutation(present)[:n_sel]
    lut = np.zeros(256, dtype=bool)
    lut[selected] = True
    return MixMask(data=lut[y_s.data], selected_classes=frozenset(int(c) for c in selected))


def classmix_apply(m: MixMask, x_s: ImageRaster, x_t: ImageRaster,
                   y_s: LabelMap, y_t: LabelMap) -> tuple[ImageRaster, LabelMap]:
    """Composite: source pixels where the mask is set, target elsewhere."""
    shape = m.data.shape
    for name, r in (("x_s", x_s), ("x_t", x_t), ("y_s", y_s), ("y_t", y_t)):
        if r.data.shape[:2] != shape:
            raise ValueError(f"classmix_apply: {name} is {r.width}x{r.height}, "
                             f"mask is {m.width}x{m.height}")
    x_m = np.where(m.data[..., None], x_s.data, x_t.data)
    y_m = np.where(m.data, y_s.data, y_t.data)
    return ImageRaster(data=x_m), LabelMap(data=y_m)
