"""Dataset-level evaluation: per-sample results, distribution statistics,
degenerate baseline scenarios, guideline lint, and JSON/CSV serialization."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, overlap
from .aggregate import (
    AveragingPolicy,
    EvalOptions,
    Mode,
    UndefinedHandling,
    macro_average,
    micro_average,
)
from .confusion import confuse
from .distance import ahd as ahd_metric
from .mask import ClassCatalog, LabelMask, MaskError, load_mask, shape_compatible, spacing_equal
from .overlap import METRIC_NAMES, MetricValue, Undefined, is_defined

PRNG_NAME = "numpy.random.Generator(PCG64)"

# Sample-level flag codes.
FLAG_LOAD_ERROR = "LOAD_ERROR"
FLAG_SHAPE_MISMATCH = "SHAPE_MISMATCH"
FLAG_SPACING_MISMATCH = "SPACING_MISMATCH"
FLAG_EMPTY_GT = "EMPTY_GT"
FLAG_EMPTY_PRED = "EMPTY_PRED"

ALL_METRICS = METRIC_NAMES + ("ahd",)


# ---------------------------------------------------------------------------
# Histograms

@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]   # bins + 1 edges; half-open bins, last bin closed
    counts: tuple[int, ...]
    below_range: int
    above_range: int

    def to_json_obj(self):
        return {
            "edges": list(self.edges),
            "counts": list(self.counts),
            "below_range": self.below_range,
            "above_range": self.above_range,
        }


def histogram(values: Sequence[float], bins: int, range: tuple[float, float] = (0.0, 1.0)) -> Histogram:
    """Fixed-range histogram; values outside the range are counted separately."""
    lo, hi = float(range[0]), float(range[1])
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not lo < hi:
        raise ValueError(f"invalid range [{lo}, {hi}]")
    vals = np.asarray(list(values), dtype=np.float64)
    below = int(np.count_nonzero(vals < lo))
    above = int(np.count_nonzero(vals > hi))
    in_range = vals[(vals >= lo) & (vals <= hi)]
    edges = np.linspace(lo, hi, bins + 1)
    # Right-closed bins: a value on an interior edge belongs to the bin below it;
    # the first bin additionally includes lo.
    idx = np.searchsorted(edges, in_range, side="left") - 1
    idx = np.clip(idx, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return Histogram(
        edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
        below_range=below,
        above_range=above,
    )


# ---------------------------------------------------------------------------
# Degenerate scenarios

class ScenarioKind(enum.Enum):
    NO_SEGMENTATION = "no_segmentation"
    FULL_SEGMENTATION = "full_segmentation"
    RANDOM_SEGMENTATION = "random_segmentation"


def make_scenario(
    gt: LabelMask,
    kind: ScenarioKind,
    seed: Optional[int] = None,
    p: float = 0.5,
    foreground_class: int = 1,
) -> LabelMask:
    """Degenerate prediction baselines for a given ground truth."""
    if kind is ScenarioKind.NO_SEGMENTATION:
        labels = np.zeros(gt.size, dtype=np.int64)
    elif kind is ScenarioKind.FULL_SEGMENTATION:
        labels = np.full(gt.size, foreground_class, dtype=np.int64)
    elif kind is ScenarioKind.RANDOM_SEGMENTATION:
        if seed is None:
            raise ValueError("random scenario requires an explicit seed")
        rng = np.random.default_rng(seed)
        labels = np.where(rng.random(gt.size) < p, foreground_class, 0)
    else:
        raise ValueError(f"unknown scenario {kind}")
    return LabelMask(shape=gt.shape, labels=labels, spacing=gt.spacing)


# ---------------------------------------------------------------------------
# Per-sample results

@dataclass
class SampleResult:
    sample_id: str
    per_class: dict[int, dict[str, MetricValue]]  # metric name -> value; plus absent flag
    absent_in_gt: set[int]
    averages: dict[str, dict[str, MetricValue]]   # "macro"/"micro" -> metric -> value
    flags: list[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return FLAG_LOAD_ERROR in self.flags or FLAG_SHAPE_MISMATCH in self.flags


@dataclass(frozen=True)
class ReportOptions:
    eval: EvalOptions = EvalOptions()
    undefined_handling: UndefinedHandling = UndefinedHandling.SKIP
    bins: int = 10
    worst_k: int = 5
    best_k: int = 5
    seed: int = 0
    thresholds: int = 101
    workers: int = 0  # 0 = sequential


def evaluate_sample(
    sample_id: str,
    gt: LabelMask,
    pred: LabelMask,
    catalog: ClassCatalog,
    options: ReportOptions = ReportOptions(),
) -> SampleResult:
    """Full per-class panel plus macro/micro averages for one mask pair."""
    if not shape_compatible(gt, pred):
        return SampleResult(sample_id, {}, set(), {}, [FLAG_SHAPE_MISMATCH])
    flags: list[str] = []
    if not spacing_equal(gt, pred):
        flags.append(FLAG_SPACING_MISMATCH)

    opts = options.eval
    class_ids = sorted(catalog.class_ids if opts.include_background else catalog.foreground_ids)
    table = confuse(gt, pred, class_ids)

    per_class: dict[int, dict[str, MetricValue]] = {}
    for c in class_ids:
        row: dict[str, MetricValue] = dict(
            overlap.metric_set(table.per_class[c], opts.empty_policy).as_dict()
        )
        if opts.compute_ahd:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                row["ahd"] = ahd_metric(gt, pred, c, opts.surface_only)
        per_class[c] = row

    for c, row in per_class.items():
        v = row.get("ahd")
        if isinstance(v, Undefined):
            if v.reason == "EMPTY_GT" and FLAG_EMPTY_GT not in flags:
                flags.append(FLAG_EMPTY_GT)
            if v.reason == "EMPTY_PRED" and FLAG_EMPTY_PRED not in flags:
                flags.append(FLAG_EMPTY_PRED)

    macro_policy = AveragingPolicy(Mode.MACRO, opts.include_background, options.undefined_handling)
    micro_policy = AveragingPolicy(Mode.MICRO, opts.include_background, options.undefined_handling)
    bg = catalog.background_id
    macro: dict[str, MetricValue] = {}
    micro: dict[str, MetricValue] = {}
    for name in METRIC_NAMES:
        macro[name] = macro_average(
            {c: per_class[c][name] for c in class_ids}, macro_policy, bg
        ).value
        micro[name] = micro_average(
            table.per_class, name, micro_policy, bg, opts.empty_policy
        ).value
    if opts.compute_ahd:
        macro["ahd"] = macro_average(
            {c: per_class[c]["ahd"] for c in class_ids}, macro_policy, bg
        ).value

    return SampleResult(
        sample_id=sample_id,
        per_class=per_class,
        absent_in_gt=set(table.absent_in_gt),
        averages={"macro": macro, "micro": micro},
        flags=flags,
    )


# ---------------------------------------------------------------------------
# Dataset report

def _quartile_stats(values: list[float], n_undefined: int) -> dict:
    out = {"n": len(values), "n_undefined": n_undefined}
    if not values:
        return out
    arr = np.asarray(values, dtype=np.float64)
    out.update(
        mean=float(arr.mean()),
        median=float(np.percentile(arr, 50, method="linear")),
        std=float(arr.std(ddof=0)),
        min=float(arr.min()),
        max=float(arr.max()),
        q1=float(np.percentile(arr, 25, method="linear")),
        q3=float(np.percentile(arr, 75, method="linear")),
    )
    return out


def _metric_range(name: str, values: list[float]) -> tuple[float, float]:
    if name == "kappa":
        return (-1.0, 1.0)
    if name == "ahd":
        hi = max(values) if values else 1.0
        return (0.0, hi if hi > 0 else 1.0)
    return (0.0, 1.0)


@dataclass
class DatasetReport:
    samples: list[SampleResult]
    aggregates: dict            # row key -> metric -> stats dict (with histogram)
    config_echo: dict
    worst_k: dict[str, list[str]]
    best_k: dict[str, list[str]]
    catalog: ClassCatalog
    artifacts: list[str] = field(default_factory=list)
    lint: list = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "version": __version__,
            "config_echo": self.config_echo,
            "classes": self.catalog.to_json_obj(),
            "samples": [_sample_obj(s) for s in self.samples],
            "aggregates": self.aggregates,
            "worst_k": self.worst_k,
            "best_k": self.best_k,
            "artifacts": list(self.artifacts),
            "lint": [
                {"rule": f.rule, "severity": f.severity, "message": f.message}
                for f in self.lint
            ],
        }

    def to_json_str(self) -> str:
        return dumps_json(self.to_json_obj()) + "\n"

    def to_csv_str(self) -> str:
        lines = ["sample_id,class_id,class_name,iou,dsc,sensitivity,specificity,"
                 "accuracy,auc,kappa,ahd,flags"]
        for s in self.samples:
            if not s.per_class:
                lines.append(f"{s.sample_id},,,,,,,,,,,{';'.join(s.flags)}")
                continue
            for c in sorted(s.per_class):
                cells = [s.sample_id, str(c), self.catalog.name_of(c)]
                for name in ALL_METRICS:
                    cells.append(_csv_cell(s.per_class[c].get(name)))
                cells.append(";".join(s.flags))
                lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, Undefined):
        return f"UNDEFINED({v.reason})"
    return format(float(v), ".17g")


def _value_obj(v):
    if isinstance(v, Undefined):
        return {"undefined": v.reason}
    return float(v)


def _sample_obj(s: SampleResult) -> dict:
    return {
        "sample_id": s.sample_id,
        "flags": list(s.flags),
        "per_class": {
            str(c): {
                **{name: _value_obj(v) for name, v in s.per_class[c].items()},
                "absent_in_gt": c in s.absent_in_gt,
            }
            for c in sorted(s.per_class)
        },
        "averages": {
            mode: {name: _value_obj(v) for name, v in vals.items()}
            for mode, vals in s.averages.items()
        },
    }


def compute_aggregates(samples: list[SampleResult], bins: int) -> dict:
    """Distribution statistics per class row and per averaging-policy row."""
    rows: dict[str, dict[str, tuple[list[float], int]]] = {}

    def feed(row_key: str, name: str, v):
        vals, undef = rows.setdefault(row_key, {}).setdefault(name, ([], 0))
        if isinstance(v, Undefined):
            rows[row_key][name] = (vals, undef + 1)
        else:
            vals.append(float(v))

    for s in samples:
        if s.failed:
            continue
        for c, row in s.per_class.items():
            for name, v in row.items():
                feed(f"class_{c}", name, v)
        for mode, vals in s.averages.items():
            for name, v in vals.items():
                feed(mode, name, v)

    out: dict = {}
    for row_key in sorted(rows):
        out[row_key] = {}
        for name in ALL_METRICS:
            if name not in rows[row_key]:
                continue
            vals, undef = rows[row_key][name]
            stats = _quartile_stats(vals, undef)
            lo, hi = _metric_range(name, vals)
            stats["histogram"] = histogram(vals, bins, (lo, hi)).to_json_obj()
            out[row_key][name] = stats
    return out


def _rank_samples(samples: list[SampleResult], metric: str, k: int, worst: bool) -> list[str]:
    scored = []
    for s in samples:
        v = s.averages.get("macro", {}).get(metric)
        if v is not None and is_defined(v):
            scored.append((float(v), s.sample_id))
    scored.sort(key=lambda t: (t[0], t[1]) if worst else (-t[0], t[1]))
    return [sid for _, sid in scored[:k]]


def evaluate_dataset(
    pairs: Sequence,
    catalog: Optional[ClassCatalog] = None,
    options: ReportOptions = ReportOptions(),
) -> DatasetReport:
    """Evaluate every (gt, pred) pair and aggregate; pairs may be paths or
    in-memory masks, optionally with an explicit sample id third element."""
    if not pairs:
        raise ValueError("need at least one pair")

    loaded: list[tuple[str, object, object]] = []
    for pair in pairs:
        gt_src, pred_src = pair[0], pair[1]
        sid = pair[2] if len(pair) > 2 else Path(str(gt_src)).stem
        loaded.append((str(sid), gt_src, pred_src))

    resolved_catalog = catalog
    masks: list[tuple[str, Optional[LabelMask], Optional[LabelMask]]] = []
    for sid, gt_src, pred_src in loaded:
        try:
            gt = gt_src if isinstance(gt_src, LabelMask) else load_mask(gt_src)
            pred = pred_src if isinstance(pred_src, LabelMask) else load_mask(pred_src)
        except MaskError:
            masks.append((sid, None, None))
            continue
        if resolved_catalog is None:
            resolved_catalog = ClassCatalog.from_masks(gt, pred)
        masks.append((sid, gt, pred))

    def _one(item) -> SampleResult:
        sid, gt, pred = item
        if gt is None:
            return SampleResult(sid, {}, set(), {}, [FLAG_LOAD_ERROR])
        return evaluate_sample(sid, gt, pred, resolved_catalog, options)

    if options.workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=options.workers) as pool:
            samples = list(pool.map(_one, masks))  # map preserves input order
    else:
        samples = [_one(item) for item in masks]

    if all(s.failed for s in samples):
        raise ValueError("all pairs failed to load or evaluate")
    if resolved_catalog is None:
        resolved_catalog = ClassCatalog.default_binary()

    ok = [s for s in samples if not s.failed]
    aggregates = compute_aggregates(samples, options.bins)
    worst = {"dsc": _rank_samples(ok, "dsc", options.worst_k, worst=True)}
    best = {"dsc": _rank_samples(ok, "dsc", options.best_k, worst=False)}

    config_echo = {
        "version": __version__,
        "empty_policy": options.eval.empty_policy.value,
        "surface_only": options.eval.surface_only,
        "include_background": options.eval.include_background,
        "compute_ahd": options.eval.compute_ahd,
        "undefined_handling": options.undefined_handling.value,
        "bins": options.bins,
        "worst_k": options.worst_k,
        "best_k": options.best_k,
        "seed": options.seed,
        "thresholds": options.thresholds,
        "prng": PRNG_NAME,
        "quartile_method": "linear",
        "std_ddof": 0,
        "classes_foreground": resolved_catalog.foreground_ids,
        "background_class": resolved_catalog.background_id,
        "micro_pooling_note": "specificity/accuracy are pooled one-vs-rest",
    }

    report = DatasetReport(
        samples=samples,
        aggregates=aggregates,
        config_echo=config_echo,
        worst_k=worst,
        best_k=best,
        catalog=resolved_catalog,
    )
    report.lint = lint_report(report.to_json_obj())
    return report


# ---------------------------------------------------------------------------
# Guideline lint

@dataclass(frozen=True)
class LintFinding:
    rule: str
    severity: str  # "error" | "warning" | "info"
    message: str


def _reported_metrics(obj: dict) -> set[str]:
    names: set[str] = set()
    for s in obj.get("samples", []):
        for row in s.get("per_class", {}).values():
            names.update(k for k in row if k in ALL_METRICS)
    if not names:
        for row in obj.get("aggregates", {}).values():
            names.update(k for k in row if k in ALL_METRICS)
    return names


def lint_report(obj: dict) -> list[LintFinding]:
    """Mechanical checks of a report against the evaluation guideline (G1-G8)."""
    findings: list[LintFinding] = []
    metrics = _reported_metrics(obj)
    echo = obj.get("config_echo", {})

    if "dsc" not in metrics:
        findings.append(LintFinding(
            "G1", "error", "DSC missing; use DSC as the main metric"))
    if "accuracy" in metrics and "dsc" not in metrics:
        findings.append(LintFinding(
            "G2", "error",
            "accuracy reported without DSC; avoid interpretations based on high pixel accuracy"))
    if "dsc" in metrics:
        missing = [m for m in ("iou", "sensitivity", "specificity") if m not in metrics]
        if missing:
            findings.append(LintFinding(
                "G3", "warning",
                f"provide IoU, sensitivity, and specificity next to DSC (missing: {', '.join(missing)})"))
    fg_classes = echo.get("classes_foreground", [])
    has_per_class = any(s.get("per_class") for s in obj.get("samples", []))
    if len(fg_classes) > 1 and not has_per_class:
        findings.append(LintFinding(
            "G4", "error", "multi-class input without per-class results"))
    if echo.get("include_background"):
        findings.append(LintFinding(
            "G5", "warning",
            "background class included in averages; this inflates scores"))
    has_distribution = any(
        "histogram" in stats
        for row in obj.get("aggregates", {}).values()
        for stats in row.values()
        if isinstance(stats, dict)
    )
    if not has_distribution:
        findings.append(LintFinding(
            "G6", "warning", "no score-distribution data (histogram/boxplot) present"))
    if not obj.get("worst_k", {}).get("dsc"):
        findings.append(LintFinding(
            "G7", "warning", "worst-scoring samples not listed; avoid cherry-picking"))
    if not obj.get("artifacts"):
        findings.append(LintFinding(
            "G8", "info", "no sample visualizations referenced"))
    return findings


# ---------------------------------------------------------------------------
# JSON serialization with pinned float formatting

def _format_float(v: float) -> str:
    if v != v or v in (float("inf"), float("-inf")):
        raise ValueError("non-finite value in report")
    return format(v, ".17g")


def dumps_json(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with every real rendered at 17 significant digits."""
    pad = " " * (indent * _level)
    pad_in = " " * (indent * (_level + 1))
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        import json as _json
        return _json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad_in}{dumps_json(str(k))}: {dumps_json(v, indent, _level + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad_in}{dumps_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(obj)}")
