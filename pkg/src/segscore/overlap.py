"""Confusion-matrix metrics: IoU, DSC, sensitivity, specificity, accuracy,
single-value AUC, Cohen's kappa, plus threshold-sweep ROC for soft maps."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .confusion import ConfusionCounts
from .mask import LabelMask, ProbabilityMap

# Reason codes for undefined metric values.
EMPTY_BOTH = "EMPTY_BOTH"
NO_POSITIVES_IN_GT = "NO_POSITIVES_IN_GT"
NO_NEGATIVES_IN_GT = "NO_NEGATIVES_IN_GT"
DEGENERATE_MARGINALS = "DEGENERATE_MARGINALS"
DEGENERATE_RATES = "DEGENERATE_RATES"


@dataclass(frozen=True)
class Undefined:
    """Explicit marker for a metric that has no defined value, with a reason."""

    reason: str

    def __repr__(self) -> str:
        return f"Undefined({self.reason})"


MetricValue = Union[float, Undefined]


def is_defined(v: MetricValue) -> bool:
    return not isinstance(v, Undefined)


class EmptyPolicy(enum.Enum):
    """What IoU/DSC return when gt and pred are both empty (tp=fp=fn=0)."""

    SCORE_ONE = "score_one"
    UNDEFINED = "undefined"


def iou(c: ConfusionCounts, policy: EmptyPolicy = EmptyPolicy.SCORE_ONE) -> MetricValue:
    denom = c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0 if policy is EmptyPolicy.SCORE_ONE else Undefined(EMPTY_BOTH)
    return c.tp / denom


def dsc(c: ConfusionCounts, policy: EmptyPolicy = EmptyPolicy.SCORE_ONE) -> MetricValue:
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0 if policy is EmptyPolicy.SCORE_ONE else Undefined(EMPTY_BOTH)
    return 2 * c.tp / denom


def sensitivity(c: ConfusionCounts) -> MetricValue:
    denom = c.tp + c.fn
    if denom == 0:
        return Undefined(NO_POSITIVES_IN_GT)
    return c.tp / denom


def specificity(c: ConfusionCounts) -> MetricValue:
    denom = c.tn + c.fp
    if denom == 0:
        return Undefined(NO_NEGATIVES_IN_GT)
    return c.tn / denom


def accuracy(c: ConfusionCounts) -> float:
    return (c.tp + c.tn) / c.total


def auc_single(c: ConfusionCounts) -> MetricValue:
    """Trapezoid AUC of a single hard segmentation: 1 - (FPR + FNR) / 2."""
    if c.fp + c.tn == 0 or c.fn + c.tp == 0:
        return Undefined(DEGENERATE_RATES)
    fpr = c.fp / (c.fp + c.tn)
    fnr = c.fn / (c.fn + c.tp)
    return 1.0 - 0.5 * (fpr + fnr)


def kappa(c: ConfusionCounts) -> MetricValue:
    """Chance-corrected agreement from the marginal products."""
    n = c.total
    fc = ((c.tn + c.fn) * (c.tn + c.fp) + (c.fp + c.tp) * (c.fn + c.tp)) / n
    if n - fc == 0:
        return Undefined(DEGENERATE_MARGINALS)
    return ((c.tp + c.tn) - fc) / (n - fc)


METRIC_NAMES = ("iou", "dsc", "sensitivity", "specificity", "accuracy", "auc", "kappa")


@dataclass(frozen=True)
class MetricSet:
    """The full confusion-based metric panel for one class on one sample."""

    iou: MetricValue
    dsc: MetricValue
    sensitivity: MetricValue
    specificity: MetricValue
    accuracy: MetricValue
    auc: MetricValue
    kappa: MetricValue

    def as_dict(self) -> dict[str, MetricValue]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def metric_set(c: ConfusionCounts, policy: EmptyPolicy = EmptyPolicy.SCORE_ONE) -> MetricSet:
    return MetricSet(
        iou=iou(c, policy),
        dsc=dsc(c, policy),
        sensitivity=sensitivity(c),
        specificity=specificity(c),
        accuracy=accuracy(c),
        auc=auc_single(c),
        kappa=kappa(c),
    )


# ---------------------------------------------------------------------------
# ROC for soft prediction maps

@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


def default_thresholds(n: int = 101) -> list[float]:
    """n evenly spaced thresholds covering [0, 1]."""
    return [i / (n - 1) for i in range(n)] if n > 1 else [0.5]


def roc_curve(
    gt: LabelMask,
    prob,
    positive_class: int,
    thresholds: Sequence[float],
) -> list[RocPoint]:
    """TPR/FPR of `prob >= t` for each threshold, in descending threshold order."""
    values = prob.values if isinstance(prob, ProbabilityMap) else np.asarray(prob, dtype=np.float64).ravel()
    if values.size != gt.size:
        raise ValueError("probability grid shape does not match ground truth")
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise ValueError("probability values must lie in [0, 1]")
    thresholds = list(thresholds)
    if not thresholds:
        raise ValueError("threshold list must be non-empty")

    gpos = gt.labels == positive_class
    npos = int(np.count_nonzero(gpos))
    nneg = gpos.size - npos
    if npos == 0:
        raise ValueError("ground truth has no positive elements; TPR undefined")
    if nneg == 0:
        raise ValueError("ground truth has no negative elements; FPR undefined")

    points = []
    for t in sorted(thresholds, reverse=True):
        ppos = values >= t
        tp = int(np.count_nonzero(gpos & ppos))
        fp = int(np.count_nonzero(~gpos & ppos))
        points.append(RocPoint(threshold=float(t), tpr=tp / npos, fpr=fp / nneg))
    return points


def auc_trapezoid(points: Sequence[RocPoint]) -> float:
    """Trapezoidal area over fpr-sorted points, anchored at (0,0) and (1,1)."""
    if not points:
        raise ValueError("need at least one ROC point")
    xy = sorted([(p.fpr, p.tpr) for p in points] + [(0.0, 0.0), (1.0, 1.0)])
    area = 0.0
    for (x0, y0), (x1, y1) in zip(xy, xy[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return min(max(area, 0.0), 1.0)
