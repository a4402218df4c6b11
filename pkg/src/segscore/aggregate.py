"""Micro/macro aggregation of per-class results with explicit background policy."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional

from . import overlap
from .confusion import ConfusionCounts, confuse
from .distance import ahd as ahd_metric
from .mask import ClassCatalog, LabelMask, shape_compatible
from .overlap import EmptyPolicy, MetricSet, MetricValue, Undefined, is_defined

NO_ELIGIBLE_CLASSES = "NO_ELIGIBLE_CLASSES"

# Micro-pooled TN counts elements once per class, so pooled specificity and
# accuracy are one-vs-rest quantities rather than plain element fractions.
POOLED_ONE_VS_REST_NOTE = "pooled one-vs-rest"


class Mode(enum.Enum):
    MICRO = "micro"
    MACRO = "macro"


class UndefinedHandling(enum.Enum):
    SKIP = "skip"
    PROPAGATE = "propagate"


@dataclass(frozen=True)
class AveragingPolicy:
    mode: Mode
    include_background: bool = False
    undefined_handling: UndefinedHandling = UndefinedHandling.SKIP


@dataclass
class AverageResult:
    value: MetricValue
    skipped: dict[int, str] = field(default_factory=dict)  # class_id -> reason
    note: Optional[str] = None


def _eligible(class_ids, policy: AveragingPolicy, background_id: Optional[int]):
    if policy.include_background or background_id is None:
        return sorted(class_ids)
    return sorted(c for c in class_ids if c != background_id)


def macro_average(
    per_class: Mapping[int, MetricValue],
    policy: AveragingPolicy,
    background_id: Optional[int] = 0,
) -> AverageResult:
    """Mean of per-class metric values over eligible classes."""
    if policy.mode is not Mode.MACRO:
        raise ValueError("macro_average requires a MACRO policy")
    skipped: dict[int, str] = {}
    values = []
    for c in _eligible(per_class.keys(), policy, background_id):
        v = per_class[c]
        if isinstance(v, Undefined):
            if policy.undefined_handling is UndefinedHandling.PROPAGATE:
                return AverageResult(value=v, skipped=skipped)
            skipped[c] = v.reason
        else:
            values.append(v)
    if not values:
        return AverageResult(value=Undefined(NO_ELIGIBLE_CLASSES), skipped=skipped)
    return AverageResult(value=sum(values) / len(values), skipped=skipped)


_METRIC_FNS = {
    "iou": overlap.iou,
    "dsc": overlap.dsc,
    "sensitivity": overlap.sensitivity,
    "specificity": overlap.specificity,
    "accuracy": overlap.accuracy,
    "auc": overlap.auc_single,
    "kappa": overlap.kappa,
}


def micro_average(
    per_class_counts: Mapping[int, ConfusionCounts],
    metric: str,
    policy: AveragingPolicy,
    background_id: Optional[int] = 0,
    empty_policy: EmptyPolicy = EmptyPolicy.SCORE_ONE,
) -> AverageResult:
    """Pool the confusion cells over eligible classes, then apply the metric once."""
    if policy.mode is not Mode.MICRO:
        raise ValueError("micro_average requires a MICRO policy")
    if metric not in _METRIC_FNS:
        raise ValueError(f"unknown metric {metric!r}")
    eligible = _eligible(per_class_counts.keys(), policy, background_id)
    if not eligible:
        return AverageResult(value=Undefined(NO_ELIGIBLE_CLASSES))
    tp = sum(per_class_counts[c].tp for c in eligible)
    fp = sum(per_class_counts[c].fp for c in eligible)
    tn = sum(per_class_counts[c].tn for c in eligible)
    fn = sum(per_class_counts[c].fn for c in eligible)
    pooled = ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)
    fn_metric = _METRIC_FNS[metric]
    if metric in ("iou", "dsc"):
        value = fn_metric(pooled, empty_policy)
    else:
        value = fn_metric(pooled)
    note = POOLED_ONE_VS_REST_NOTE if metric in ("specificity", "accuracy") else None
    return AverageResult(value=value, note=note)


@dataclass(frozen=True)
class EvalOptions:
    """Knobs shared by per-class and dataset evaluation."""

    empty_policy: EmptyPolicy = EmptyPolicy.SCORE_ONE
    surface_only: bool = False
    include_background: bool = False
    compute_ahd: bool = True


@dataclass(frozen=True)
class ClassResult:
    metrics: MetricSet
    ahd: MetricValue
    absent_in_gt: bool = False

    def as_dict(self) -> dict[str, MetricValue]:
        d = self.metrics.as_dict()
        d["ahd"] = self.ahd
        return d


def per_class_report(
    gt: LabelMask,
    pred: LabelMask,
    catalog: Optional[ClassCatalog] = None,
    options: EvalOptions = EvalOptions(),
) -> dict[int, ClassResult]:
    """Full metric panel (plus AHD) for every foreground class, and the
    background class too when the options request it."""
    if not shape_compatible(gt, pred):
        raise ValueError(f"shape mismatch: {gt.shape} vs {pred.shape}")
    if catalog is None:
        catalog = ClassCatalog.from_masks(gt, pred)
    class_ids = list(catalog.class_ids) if options.include_background else list(catalog.foreground_ids)
    if not class_ids:
        raise ValueError("catalog has no eligible classes")
    table = confuse(gt, pred, class_ids)
    out: dict[int, ClassResult] = {}
    for c in sorted(class_ids):
        metrics = overlap.metric_set(table.per_class[c], options.empty_policy)
        ahd_value: MetricValue
        if options.compute_ahd:
            ahd_value = ahd_metric(gt, pred, c, options.surface_only)
        else:
            ahd_value = Undefined("NOT_COMPUTED")
        out[c] = ClassResult(
            metrics=metrics,
            ahd=ahd_value,
            absent_in_gt=c in table.absent_in_gt,
        )
    return out
