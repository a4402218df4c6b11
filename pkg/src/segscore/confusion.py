"""Per-class confusion counts under one-vs-rest binarization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mask import LabelMask, shape_compatible


@dataclass(frozen=True)
class ConfusionCounts:
    """The four cells of a binary confusion matrix, in elements (64-bit)."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def swapped(self) -> "ConfusionCounts":
        """Counts with positive/negative roles exchanged (tp<->tn, fp<->fn)."""
        return ConfusionCounts(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


@dataclass(frozen=True)
class ConfusionTable:
    """One-vs-rest counts per class for a single gt/pred pair."""

    per_class: dict[int, ConfusionCounts]
    total: int
    absent_in_gt: frozenset[int]

    def __post_init__(self):
        for c, counts in self.per_class.items():
            if counts.total != self.total:
                raise ValueError(f"class {c}: cells sum to {counts.total}, expected {self.total}")


def confuse(gt: LabelMask, pred: LabelMask, classes: Sequence[int]) -> ConfusionTable:
    """One-vs-rest TP/FP/TN/FN for every requested class in one pass."""
    if not shape_compatible(gt, pred):
        raise ValueError(f"shape mismatch: {gt.shape} vs {pred.shape}")
    classes = list(classes)
    if not classes:
        raise ValueError("class list must be non-empty")
    if len(set(classes)) != len(classes):
        raise ValueError("class list must be unique")

    g = gt.labels
    p = pred.labels
    total = g.size
    per_class: dict[int, ConfusionCounts] = {}
    absent: set[int] = set()
    for c in classes:
        gpos = g == c
        ppos = p == c
        tp = int(np.count_nonzero(gpos & ppos))
        fp = int(np.count_nonzero(~gpos & ppos))
        fn = int(np.count_nonzero(gpos & ~ppos))
        tn = total - tp - fp - fn
        per_class[int(c)] = ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)
        if not gpos.any():
            absent.add(int(c))
    return ConfusionTable(per_class=per_class, total=total, absent_in_gt=frozenset(absent))


def confuse_binary(gt: LabelMask, pred: LabelMask, positive_class: int) -> ConfusionCounts:
    """Convenience form for the binary setting."""
    return confuse(gt, pred, [positive_class]).per_class[positive_class]
