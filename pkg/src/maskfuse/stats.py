"""Per-class area statistics and small/large class derivation.

The size prior behind the mask-labeling rule comes from source-domain
ground truth: classes whose instances are consistently tiny (poles,
signs) versus consistently huge (road, building). ``accumulate_stats``
measures mean region area per class, ``suggest_class_split`` turns that
into candidate small/large sets, and ``rare_class_candidates`` flags
classes nearly absent from target-domain pseudo-labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .raster import LabelMap
from .registry import ClassRegistry


@dataclass
class ClassAreaStats:
    """Accumulated pixel totals; mergeable field-wise across workers."""

    total_pixels: dict[int, int] = field(default_factory=dict)
    images_present: dict[int, int] = field(default_factory=dict)
    images_scanned: int = 0
    void_pixels: int = 0
    pixels_scanned: int = 0

    def mean_area(self, class_id: int) -> float | None:
        """Mean pixels per image containing the class; None when absent."""
        n = self.images_present.get(class_id, 0)
        if n == 0:
            return None
        return self.total_pixels[class_id] / n

    def present_classes(self) -> list[int]:
        return sorted(cid for cid, n in self.images_present.items() if n > 0)

    def merge(self, other: "ClassAreaStats") -> "ClassAreaStats":
        out = ClassAreaStats(
            total_pixels=dict(self.total_pixels),
            images_present=dict(self.images_present),
            images_scanned=self.images_scanned + other.images_scanned,
            void_pixels=self.void_pixels + other.void_pixels,
            pixels_scanned=self.pixels_scanned + other.pixels_scanned,
        )
        for cid, n in other.total_pixels.items():
            out.total_pixels[cid] = out.total_pixels.get(cid, 0) + n
        for cid, n in other.images_present.items():
            out.images_present[cid] = out.images_present.get(cid, 0) + n
        return out

    def to_dict(self) -> dict:
        rows = {}
        for cid in self.present_classes():
            rows[str(cid)] = {
                "total_pixels": self.total_pixels[cid],
                "images_present": self.images_present[cid],
                "mean_area": self.mean_area(cid),
            }
        return {
            "images_scanned": self.images_scanned,
            "void_pixels": self.void_pixels,
            "pixels_scanned": self.pixels_scanned,
            "classes": rows,
        }


def accumulate_stats(labels: Iterable[LabelMap], registry: ClassRegistry) -> ClassAreaStats:
    """Count per-class pixels over ground-truth label maps; void excluded."""
    valid = set(registry.class_ids)
    stats = ClassAreaStats()
    for k, lm in enumerate(labels):
        counts = np.bincount(lm.data.ravel(), minlength=256)
        present = np.flatnonzero(counts)
        for cid in present.tolist():
            if cid == registry.void_id:
                continue
            if cid not in valid:
                raise ValueError(f"image {k}: label value {cid} not in registry")
        for cid in present.tolist():
            if cid == registry.void_id:
                stats.void_pixels += int(counts[cid])
                continue
            stats.total_pixels[cid] = stats.total_pixels.get(cid, 0) + int(counts[cid])
            stats.images_present[cid] = stats.images_present.get(cid, 0) + 1
        stats.images_scanned += 1
        stats.pixels_scanned += lm.data.size
    return stats


def suggest_class_split(stats: ClassAreaStats, small_count: int,
                        large_count: int) -> tuple[set[int], set[int]]:
    """The ``small_count`` smallest and ``large_count`` largest mean-area classes.

    Classes are ranked once by (mean_area, class id) ascending; the split
    takes the two ends of that ranking, so the sets are always disjoint
    and ties resolve deterministically.
    """
    if small_count < 0 or large_count < 0:
        raise ValueError("class counts must be non-negative")
    present = stats.present_classes()
    if small_count + large_count > len(present):
        raise ValueError(
            f"requested {small_count}+{large_count} classes but only {len(present)} present")
    ranked = sorted(present, key=lambda cid: (stats.mean_area(cid), cid))
    small = set(ranked[:small_count])
    large = set(ranked[len(ranked) - large_count:]) if large_count else set()
    return small, large


def rare_class_candidates(uda_labels: Sequence[LabelMap], registry: ClassRegistry,
                          fraction_threshold: float = 0.005) -> set[int]:
    """Registry classes whose pixel share in the pseudo-labels is below threshold.

    Advisory only: candidates for appending to the small-class set, never
    auto-applied. Classes absent from every map have share 0 and are
    therefore included.
    """
    if not (0.0 < fraction_threshold < 1.0):
        raise ValueError(f"fraction_threshold must be in (0, 1), got {fraction_threshold}")
    uda_labels = list(uda_labels)
    if not uda_labels:
        raise ValueError("no pseudo-labels given")
    counts = np.zeros(256, dtype=np.int64)
    for lm in uda_labels:
        counts += np.bincount(lm.data.ravel(), minlength=256)
    counts[registry.void_id] = 0
    labeled = int(counts.sum())
    if labeled == 0:
        raise ValueError("pseudo-labels contain no non-void pixels")
    return {cid for cid in registry.class_ids if counts[cid] / labeled < fraction_threshold}
