"""Confusion matrix, per-class IoU, and mIoU.

Rows are ground-truth classes in registry order; the last column collects
predictions that are void (or outside the class set) over non-void ground
truth, so they count as misses without being anyone's true positive.
Void ground-truth pixels are excluded entirely. All accumulation is in
64-bit integers; division happens only at report time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .raster import LabelMap
from .registry import ClassRegistry


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (C, C+1) int64, last column = void/unknown predictions
    class_ids: tuple[int, ...]

    def __post_init__(self):
        c = len(self.class_ids)
        if self.counts.shape != (c, c + 1):
            raise ValueError(f"counts must be {c}x{c + 1}, got {self.counts.shape}")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.class_ids != other.class_ids:
            raise ValueError("cannot merge confusion matrices over different class sets")
        return ConfusionMatrix(counts=self.counts + other.counts, class_ids=self.class_ids)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ConfusionMatrix)
                and self.class_ids == other.class_ids
                and np.array_equal(self.counts, other.counts))


def _index_tables(registry: ClassRegistry) -> tuple[np.ndarray, np.ndarray]:
    n = len(registry.class_ids)
    row_of = np.full(256, -1, dtype=np.int32)
    col_of = np.full(256, n, dtype=np.int32)  # default: the void/unknown column
    for k, cid in enumerate(registry.class_ids):
        row_of[cid] = k
        col_of[cid] = k
    return row_of, col_of


def confusion(pred: LabelMap, gt: LabelMap, registry: ClassRegistry) -> ConfusionMatrix:
    if pred.data.shape != gt.data.shape:
        raise ValueError(f"confusion: prediction {pred.width}x{pred.height} "
                         f"vs ground truth {gt.width}x{gt.height}")
    row_of, col_of = _index_tables(registry)
    n = len(registry.class_ids)
    counts = kernels().confusion_pass(
        gt.data.ravel(), pred.data.ravel(), row_of, col_of, n, n + 1)
    return ConfusionMatrix(counts=counts, class_ids=registry.class_ids)


def iou(cm: ConfusionMatrix) -> dict[int, float]:
    """Per-class TP / (TP + FP + FN); classes never seen are omitted."""
    result: dict[int, float] = {}
    for k, cid in enumerate(cm.class_ids):
        tp = int(cm.counts[k, k])
        fn = int(cm.counts[k].sum()) - tp
        fp = int(cm.counts[:, k].sum()) - tp
        denom = tp + fp + fn
        if denom > 0:
            result[cid] = tp / denom
    return result


def miou(cm: ConfusionMatrix) -> float:
    """Unweighted mean IoU over evaluated classes; NaN when nothing was evaluated."""
    values = list(iou(cm).values())
    if not values:
        return float("nan")
    return float(np.mean(values))


def compare_report(a: dict[int, float], b: dict[int, float]) -> list[dict]:
    """Per-class IoU deltas between two evaluations of the same class set.

    ``winner`` marks which side is best per class ("a", "b", or "tie"),
    the tabular analogue of bolding the best entry.
    """
    if set(a) != set(b):
        only_a = sorted(set(a) - set(b))
        only_b = sorted(set(b) - set(a))
        raise ValueError(f"compare_report: class sets differ (only in a: {only_a}, "
                         f"only in b: {only_b})")
    rows = []
    for cid in sorted(a):
        delta = b[cid] - a[cid]
        winner = "tie" if delta == 0 else ("b" if delta > 0 else "a")
        rows.append({"class_id": cid, "a": a[cid], "b": b[cid],
                     "delta": delta, "winner": winner})
    return rows
