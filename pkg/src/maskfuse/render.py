"""Color rendering of label maps and mask sets for visual inspection."""

from __future__ import annotations

import numpy as np

from .raster import ImageRaster, LabelMap, MaskSet, sort_by_area
from .registry import ClassRegistry

_MASK_BACKGROUND = (64, 64, 64)


def render_label(lm: LabelMap, registry: ClassRegistry) -> ImageRaster:
    """Palette lookup per pixel; void renders black."""
    lut = registry.palette()
    return ImageRaster(data=lut[lm.data])


def _tint(index: int) -> tuple[int, int, int]:
    # splitmix64 finalizer: fixed, platform-independent color per index
    z = (index + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    z = z ^ (z >> 31)
    # keep channels out of the background gray band
    return (80 + (z & 0xFF) * 175 // 255,
            80 + ((z >> 8) & 0xFF) * 175 // 255,
            80 + ((z >> 16) & 0xFF) * 175 // 255)


def render_masks(ms: MaskSet) -> ImageRaster:
    """Each mask in a deterministic tint, drawn largest-first like the painter."""
    if len(ms) == 0:
        raise ValueError("render_masks: empty mask set")
    out = np.empty((ms.height, ms.width, 3), dtype=np.uint8)
    out[:] = _MASK_BACKGROUND
    flat = out.reshape(-1, 3)
    for k, m in enumerate(sort_by_area(ms)):
        flat[m.flat_indices] = _tint(k)
    return ImageRaster(data=out)


def blend_over(base: ImageRaster, overlay: ImageRaster, alpha: float = 0.5) -> ImageRaster:
    """Alpha-composite ``overlay`` onto ``base``."""
    if base.data.shape != overlay.data.shape:
        raise ValueError(f"blend_over: base {base.width}x{base.height} "
                         f"vs overlay {overlay.width}x{overlay.height}")
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"blend_over: alpha must be in [0, 1], got {alpha}")
    mixed = alpha * overlay.data.astype(np.float64) + (1.0 - alpha) * base.data.astype(np.float64)
    return ImageRaster(data=np.round(mixed).astype(np.uint8))
