"""Assign semantic classes to unlabeled instance masks.

Two labelers share one painting loop: plain majority voting, and the
semantic-guided rule (``sgml``) which additionally prefers a small-area
class hiding under a large-area winner when their pixel-count ratio
clears the configured ``alpha``, and corrects prominent lower-central
masks voted "sidewalk" to "road".

Masks are painted in descending area order so that the smaller of two
overlapping masks wins the overlap; pixels under no mask stay void.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .backend import kernels
from .raster import BinaryMask, LabelMap, MaskSet, sort_by_area
from .registry import VOID_ID, ClassRegistry


@dataclass(frozen=True)
class MaskVote:
    """Classes under a mask, by pixel count descending (ties: id ascending)."""

    ids: tuple[int, ...]
    counts: tuple[int, ...]

    @property
    def is_empty(self) -> bool:
        return not self.ids

    @property
    def top(self) -> int:
        return self.ids[0]


def vote(mask: BinaryMask, uda: LabelMap, void_id: int = VOID_ID) -> MaskVote:
    """Histogram of pseudo-label classes under the mask, void excluded."""
    if mask.data.shape != uda.data.shape:
        raise ValueError(
            f"vote: mask {mask.width}x{mask.height} vs labels {uda.width}x{uda.height}")
    hist = kernels().masked_hist(uda.data.ravel(), mask.flat_indices)
    hist[void_id] = 0
    ids = np.flatnonzero(hist)
    if ids.size == 0:
        return MaskVote(ids=(), counts=())
    counts = hist[ids]
    order = np.argsort(-counts, kind="stable")  # ids ascending, so ties stay id-ascending
    return MaskVote(ids=tuple(int(i) for i in ids[order]),
                    counts=tuple(int(c) for c in counts[order]))


def majority_label(mask: BinaryMask, uda: LabelMap, void_id: int = VOID_ID) -> int:
    """Most frequent class under the mask; void when only void is covered."""
    v = vote(mask, uda, void_id)
    return void_id if v.is_empty else v.top


def sgml_label(mask: BinaryMask, uda: LabelMap, registry: ClassRegistry) -> int:
    """Majority vote with the small-class override.

    When the winner is a large-area class, the runner-up is a small-area
    class, and runner-up/winner pixel counts exceed ``alpha``, the mask
    takes the runner-up: a small object whose mask leaks onto its big
    background should not inherit the background label. The road
    correction is rank-dependent and lives in :func:`paint_sgml`.
    """
    v = vote(mask, uda, registry.void_id)
    return registry.void_id if v.is_empty else _sgml_from_vote(v, registry)


def _sgml_from_vote(v: MaskVote, registry: ClassRegistry) -> int:
    if (len(v.ids) >= 2
            and v.ids[0] in registry.large_classes
            and v.ids[1] in registry.small_classes
            and v.counts[1] > registry.alpha * v.counts[0]):
        return v.ids[1]
    return v.ids[0]


def paint_sgml(masks: MaskSet, uda: LabelMap, registry: ClassRegistry,
               road_rule: bool = True) -> LabelMap:
    """Label every mask with the semantic-guided rule and paint the result.

    Area rank for the road correction is 1-based over the full sorted set
    (masks that end up void still occupy a rank).
    """
    def label_fn(v: MaskVote, rank: int, m: BinaryMask) -> int:
        cid = _sgml_from_vote(v, registry)
        if (road_rule
                and rank <= registry.road_region.top_k
                and cid == registry.sidewalk_id
                and registry.road_region.contains(m.centroid, uda.width, uda.height)):
            cid = registry.road_id
        return cid

    return _paint(masks, uda, registry.void_id, label_fn)


def paint_majority(masks: MaskSet, uda: LabelMap, registry: ClassRegistry) -> LabelMap:
    """Majority-voting baseline painter; no small-class or road correction."""
    return _paint(masks, uda, registry.void_id, lambda v, rank, m: v.top)


def _paint(masks: MaskSet, uda: LabelMap, void_id: int,
           label_fn: Callable[[MaskVote, int, BinaryMask], int]) -> LabelMap:
    for k, m in enumerate(masks):
        if m.data.shape != uda.data.shape:
            raise ValueError(
                f"paint: mask {k} is {m.width}x{m.height}, labels are {uda.width}x{uda.height}")
    out = np.full(uda.data.shape, void_id, dtype=np.uint8)
    out_flat = out.ravel()
    for rank0, m in enumerate(sort_by_area(masks)):
        v = vote(m, uda, void_id)
        if v.is_empty:
            continue  # mask entirely over void: not painted, but it keeps its rank
        out_flat[m.flat_indices] = label_fn(v, rank0 + 1, m)
    return LabelMap(data=out)
