"""Command-line entry point: evaluate, scenarios, lint, visualize."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .aggregate import EvalOptions
from .mask import ClassCatalog, LabelMask, MaskError, load_mask
from .overlap import EmptyPolicy, Undefined
from .report import (
    ALL_METRICS,
    DatasetReport,
    Histogram,
    ReportOptions,
    ScenarioKind,
    dumps_json,
    evaluate_dataset,
    evaluate_sample,
    lint_report,
    make_scenario,
)
from .visualize import (
    OverlaySpec,
    default_palette,
    render_boxplot_svg,
    render_disagreement,
    render_histogram_svg,
    render_overlay,
    save_image,
)

MASK_SUFFIXES = (".png", ".mgrid")


def _use_color() -> bool:
    return sys.stdout.isatty() and not os.environ.get("SEGSCORE_NO_COLOR")


def _bold(s: str) -> str:
    return f"\x1b[1m{s}\x1b[0m" if _use_color() else s


def _severity_colored(sev: str) -> str:
    if not _use_color():
        return sev
    code = {"error": "31", "warning": "33", "info": "36"}.get(sev, "0")
    return f"\x1b[{code}m{sev}\x1b[0m"


def _fmt_value(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, Undefined):
        return f"undef({v.reason})"
    return f"{float(v):.4f}"


# ---------------------------------------------------------------------------
# Pairing

def resolve_pairs(gt_dir: Path, pred_dir: Path) -> list[tuple[Path, Path, str]]:
    """Pair masks across directories by identical filename stem."""
    gt_by_stem = {
        p.stem: p for p in sorted(gt_dir.iterdir())
        if p.suffix.lower() in MASK_SUFFIXES
    }
    pairs = []
    for p in sorted(pred_dir.iterdir()):
        if p.suffix.lower() not in MASK_SUFFIXES:
            continue
        gt = gt_by_stem.get(p.stem)
        if gt is not None:
            pairs.append((gt, p, p.stem))
    return pairs


def read_manifest(path: Path) -> list[tuple[Path, Path, str]]:
    """Manifest CSV with header gt_path,pred_path,sample_id."""
    pairs = []
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            pairs.append((Path(row["gt_path"]), Path(row["pred_path"]),
                          row.get("sample_id") or Path(row["gt_path"]).stem))
    return pairs


def _load_catalog(path: Optional[str]) -> Optional[ClassCatalog]:
    if not path:
        return None
    with open(path) as fh:
        return ClassCatalog.from_json_obj(json.load(fh))


# ---------------------------------------------------------------------------
# evaluate

def _merged(args, config: dict, key: str, default):
    cli_val = getattr(args, key, None)
    if cli_val is not None:
        return cli_val
    return config.get(key.replace("_", "-"), config.get(key, default))


def _emit_plots(report: DatasetReport, plots_dir: Path) -> list[str]:
    plots_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for row_key in sorted(report.aggregates):
        stats = report.aggregates[row_key].get("dsc")
        if not stats or stats.get("n", 0) == 0:
            continue
        hist_obj = stats["histogram"]
        h = Histogram(
            edges=tuple(hist_obj["edges"]), counts=tuple(hist_obj["counts"]),
            below_range=hist_obj["below_range"], above_range=hist_obj["above_range"],
        )
        name = f"{row_key}_dsc_histogram.svg"
        (plots_dir / name).write_text(render_histogram_svg(h, title=f"DSC ({row_key})"))
        written.append(f"plots/{name}")
        name = f"{row_key}_dsc_boxplot.svg"
        (plots_dir / name).write_text(render_boxplot_svg(stats, title=f"DSC ({row_key})"))
        written.append(f"plots/{name}")
    return written


def _emit_overlays(pairs, report: DatasetReport, overlays_dir: Path) -> list[str]:
    overlays_dir.mkdir(parents=True, exist_ok=True)
    palette = default_palette(report.catalog.foreground_ids)
    spec = OverlaySpec(palette=palette)
    written = []
    failed = {s.sample_id for s in report.samples if s.failed}
    for gt_path, pred_path, sid in pairs:
        if sid in failed:
            continue
        gt = load_mask(gt_path)
        pred = load_mask(pred_path)
        if gt.ndim != 2:
            continue  # 3D overlays need an explicit slice; skip in batch mode
        for kind, mask in (("gt", gt), ("pred", pred)):
            name = f"{sid}_all_{kind}_overlay.png"
            save_image(render_overlay(None, mask, spec), overlays_dir / name)
            written.append(f"overlays/{name}")
        for c in report.catalog.foreground_ids:
            name = f"{sid}_{c}_disagreement.png"
            save_image(render_disagreement(gt, pred, c), overlays_dir / name)
            written.append(f"overlays/{name}")
    return written


def _print_summary(report: DatasetReport) -> None:
    order = ("dsc", "iou", "sensitivity", "specificity", "accuracy", "auc", "kappa", "ahd")
    print(_bold(f"{'class':<16}" + "".join(f"{m:>13}" for m in order)))
    for row_key in sorted(report.aggregates):
        row = report.aggregates[row_key]
        cells = []
        for m in order:
            stats = row.get(m)
            cells.append(f"{stats['mean']:>13.4f}" if stats and "mean" in stats else f"{'-':>13}")
        print(f"{row_key:<16}" + "".join(cells))


def cmd_evaluate(args) -> int:
    config = {}
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)

    gt_dir = _merged(args, config, "gt", None)
    pred_dir = _merged(args, config, "pred", None)
    out_dir = Path(_merged(args, config, "out", "segscore_out"))
    manifest = _merged(args, config, "manifest", None)
    emit = set((_merged(args, config, "emit", None) or "json,csv").split(","))
    seed = int(_merged(args, config, "seed", 0))
    workers = _merged(args, config, "workers", None)

    try:
        if manifest:
            pairs = read_manifest(Path(manifest))
        else:
            if not gt_dir or not pred_dir:
                print("error: --gt and --pred (or --manifest) are required", file=sys.stderr)
                return 1
            gt_dir, pred_dir = Path(gt_dir), Path(pred_dir)
            if not gt_dir.is_dir() or not pred_dir.is_dir():
                print("error: gt/pred directories not readable", file=sys.stderr)
                return 1
            pairs = resolve_pairs(gt_dir, pred_dir)
        if not pairs:
            print("error: no pairs resolved", file=sys.stderr)
            return 1

        options = ReportOptions(
            eval=EvalOptions(
                empty_policy=EmptyPolicy(_merged(args, config, "empty_policy", "score_one")),
                surface_only=bool(_merged(args, config, "surface_only", False)),
                include_background=bool(_merged(args, config, "include_background", False)),
            ),
            seed=seed,
            thresholds=int(_merged(args, config, "thresholds", 101)),
            workers=int(workers) if workers else 0,
        )
        catalog = _load_catalog(_merged(args, config, "classes", None))
        report = evaluate_dataset(pairs, catalog, options)
    except (MaskError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        artifacts = []
        if "overlays" in emit:
            artifacts += _emit_overlays(pairs, report, out_dir / "overlays")
        if "plots" in emit:
            artifacts += _emit_plots(report, out_dir / "plots")
        report.artifacts = artifacts
        report.lint = lint_report(report.to_json_obj())

        if "json" in emit:
            (out_dir / "report.json").write_text(report.to_json_str())
        if "csv" in emit:
            (out_dir / "report.csv").write_text(report.to_csv_str())
    except OSError as e:
        print(f"error: cannot write output: {e}", file=sys.stderr)
        return 1

    _print_summary(report)
    n_flagged = sum(1 for s in report.samples if s.flags)
    print(f"\n{len(report.samples)} samples, {n_flagged} flagged; report written to {out_dir}")
    return 2 if n_flagged else 0


# ---------------------------------------------------------------------------
# scenarios

def cmd_scenarios(args) -> int:
    try:
        gt = load_mask(args.gt)
    except MaskError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    catalog = ClassCatalog.default_binary()
    options = ReportOptions(seed=args.seed)

    rows = {}
    scenarios = [
        ("no_segmentation", make_scenario(gt, ScenarioKind.NO_SEGMENTATION)),
        ("full_segmentation", make_scenario(gt, ScenarioKind.FULL_SEGMENTATION)),
        ("random_segmentation", make_scenario(gt, ScenarioKind.RANDOM_SEGMENTATION, seed=args.seed)),
    ]
    for name, pred in scenarios:
        result = evaluate_sample(name, gt, pred, catalog, options)
        rows[name] = {m: result.per_class[1].get(m) for m in ALL_METRICS}

    order = ("dsc", "iou", "sensitivity", "specificity", "accuracy", "auc", "kappa", "ahd")
    print(_bold(f"{'scenario':<22}" + "".join(f"{m:>14}" for m in order)))
    for name, row in rows.items():
        print(f"{name:<22}" + "".join(f"{_fmt_value(row[m]):>14}" for m in order))

    obj = {
        "version": __version__,
        "seed": args.seed,
        "scenarios": {
            name: {
                m: ({"undefined": v.reason} if isinstance(v, Undefined) else float(v))
                for m, v in row.items()
            }
            for name, row in rows.items()
        },
    }
    (out_dir / "scenarios.json").write_text(dumps_json(obj) + "\n")
    return 0


# ---------------------------------------------------------------------------
# lint

def cmd_lint(args) -> int:
    try:
        with open(args.report) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read report: {e}", file=sys.stderr)
        return 1
    findings = lint_report(obj)
    if not findings:
        print("0 findings")
        return 0
    for f in findings:
        print(f"{f.rule} [{_severity_colored(f.severity)}] {f.message}")
    return 3 if any(f.severity == "error" for f in findings) else 0


# ---------------------------------------------------------------------------
# visualize

def cmd_visualize(args) -> int:
    try:
        gt = load_mask(args.gt)
        pred = load_mask(args.pred)
    except MaskError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if gt.shape != pred.shape:
        print("error: shape mismatch", file=sys.stderr)
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    catalog = ClassCatalog.from_masks(gt, pred)
    spec = OverlaySpec(palette=default_palette(catalog.foreground_ids), alpha=args.alpha)
    base = None
    if args.base:
        base = np.asarray(load_mask(args.base).grid(), dtype=np.float64)

    sid = Path(args.gt).stem
    save_image(render_overlay(base, gt, spec), out_dir / f"{sid}_all_gt_overlay.png")
    save_image(render_overlay(base, pred, spec), out_dir / f"{sid}_all_pred_overlay.png")
    for c in catalog.foreground_ids:
        save_image(render_disagreement(gt, pred, c, base),
                   out_dir / f"{sid}_{c}_disagreement.png")
    print(f"visualizations written to {out_dir}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="segscore",
                                description="Segmentation evaluation engine")
    p.add_argument("--version", action="version", version=f"segscore {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="evaluate a gt/pred dataset")
    ev.add_argument("--gt", help="ground-truth mask directory")
    ev.add_argument("--pred", help="prediction mask directory")
    ev.add_argument("--manifest", help="CSV manifest (gt_path,pred_path,sample_id)")
    ev.add_argument("--out", help="output directory")
    ev.add_argument("--classes", help="class catalog JSON file")
    ev.add_argument("--config", help="JSON config file; flags override it")
    ev.add_argument("--seed", type=int)
    ev.add_argument("--surface-only", dest="surface_only", action="store_const", const=True)
    ev.add_argument("--include-background", dest="include_background",
                    action="store_const", const=True)
    ev.add_argument("--empty-policy", dest="empty_policy",
                    choices=["score_one", "undefined"])
    ev.add_argument("--thresholds", type=int)
    ev.add_argument("--workers", type=int)
    ev.add_argument("--emit", help="comma list of: csv,json,overlays,plots")
    ev.set_defaults(func=cmd_evaluate)

    sc = sub.add_parser("scenarios", help="degenerate-baseline metric panel for one gt")
    sc.add_argument("--gt", required=True)
    sc.add_argument("--out", required=True)
    sc.add_argument("--seed", type=int, default=0)
    sc.set_defaults(func=cmd_scenarios)

    li = sub.add_parser("lint", help="check a report.json against the guideline rules")
    li.add_argument("report")
    li.set_defaults(func=cmd_lint)

    vi = sub.add_parser("visualize", help="overlays and disagreement maps for one pair")
    vi.add_argument("--gt", required=True)
    vi.add_argument("--pred", required=True)
    vi.add_argument("--out", required=True)
    vi.add_argument("--alpha", type=float, default=0.6)
    vi.add_argument("--base", help="optional grayscale base image (PNG)")
    vi.set_defaults(func=cmd_visualize)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
