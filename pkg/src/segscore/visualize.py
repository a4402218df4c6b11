"""Sample visualizations (overlays, per-class panels, disagreement maps)
and deterministic SVG plots for score distributions."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from .mask import ClassCatalog, LabelMask
from .report import Histogram

RGB = tuple[int, int, int]

# 12 fixed, maximally-distinct colors; assigned to classes by ascending id.
DEFAULT_COLORS: tuple[RGB, ...] = (
    (230, 25, 75),    # red
    (60, 180, 75),    # green
    (0, 130, 200),    # blue
    (255, 225, 25),   # yellow
    (245, 130, 48),   # orange
    (145, 30, 180),   # purple
    (70, 240, 240),   # cyan
    (240, 50, 230),   # magenta
    (210, 245, 60),   # lime
    (250, 190, 212),  # pink
    (0, 128, 128),    # teal
    (170, 110, 40),   # brown
)

FP_COLOR: RGB = (230, 25, 75)   # predicted but not annotated
FN_COLOR: RGB = (0, 130, 200)   # annotated but missed


def default_palette(class_ids: Sequence[int]) -> dict[int, RGB]:
    fg = sorted(c for c in class_ids)
    return {c: DEFAULT_COLORS[i % len(DEFAULT_COLORS)] for i, c in enumerate(fg)}


@dataclass(frozen=True)
class OverlaySpec:
    palette: dict[int, RGB]
    alpha: float = 0.6
    background_class: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5).astype(np.uint8)


def _slice2d(mask: LabelMask, slice_index: Optional[int]) -> np.ndarray:
    grid = mask.grid()
    if grid.ndim == 2:
        return grid
    if slice_index is None:
        raise ValueError("3D mask requires a slice index")
    return grid[slice_index]


def render_overlay(
    base: Optional[np.ndarray],
    mask: LabelMask,
    spec: OverlaySpec,
    slice_index: Optional[int] = None,
) -> np.ndarray:
    """Alpha-blend class colors over a grayscale base; background passes through."""
    grid = _slice2d(mask, slice_index)
    if base is None:
        base2d = np.zeros(grid.shape, dtype=np.float64)
    else:
        base2d = np.asarray(base, dtype=np.float64)
        if base2d.shape != grid.shape:
            raise ValueError(f"base shape {base2d.shape} != mask shape {grid.shape}")
    out = np.repeat(base2d[..., None], 3, axis=2)
    for c in sorted(np.unique(grid)):
        c = int(c)
        if c == spec.background_class:
            continue
        if c not in spec.palette:
            raise ValueError(f"palette has no color for class {c}")
        sel = grid == c
        color = np.asarray(spec.palette[c], dtype=np.float64)
        out[sel] = spec.alpha * color + (1.0 - spec.alpha) * base2d[sel][..., None]
    return _round_half_up(out)


def render_binary_panels(
    mask: LabelMask,
    catalog: Optional[ClassCatalog] = None,
    slice_index: Optional[int] = None,
) -> list[tuple[int, np.ndarray]]:
    """One black/white indicator image per foreground class."""
    grid = _slice2d(mask, slice_index)
    if catalog is None:
        catalog = ClassCatalog.from_masks(mask)
    return [
        (c, np.where(grid == c, 255, 0).astype(np.uint8))
        for c in sorted(catalog.foreground_ids)
    ]


def render_disagreement(
    gt: LabelMask,
    pred: LabelMask,
    class_id: int,
    base: Optional[np.ndarray] = None,
    slice_index: Optional[int] = None,
) -> np.ndarray:
    """False positives and false negatives of one class, each in its own color."""
    g = _slice2d(gt, slice_index) == class_id
    p = _slice2d(pred, slice_index) == class_id
    if base is None:
        base2d = np.zeros(g.shape, dtype=np.float64)
    else:
        base2d = np.asarray(base, dtype=np.float64)
    out = np.repeat(base2d[..., None], 3, axis=2)
    out[p & ~g] = np.asarray(FP_COLOR, dtype=np.float64)
    out[g & ~p] = np.asarray(FN_COLOR, dtype=np.float64)
    return _round_half_up(out)


def save_image(image: np.ndarray, path) -> None:
    Image.fromarray(image).save(Path(path), format="PNG")


# ---------------------------------------------------------------------------
# SVG plots (hand-rolled so output bytes are fully deterministic)

_W, _H = 640, 400
_MARGIN = 60


def _fmt(v: float) -> str:
    return format(float(v), ".4f").rstrip("0").rstrip(".")


def _svg_header(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:g}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{_escape(title)}</text>',
    ]


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _axes(xlabel: str, ylabel: str) -> list[str]:
    x0, y0 = _MARGIN, _H - _MARGIN
    x1, y1 = _W - _MARGIN, _MARGIN
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2:g}" y="{_H - 16}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{_escape(xlabel)}</text>',
        f'<text x="18" y="{(y0 + y1) / 2:g}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2:g})">{_escape(ylabel)}</text>',
    ]


def render_histogram_svg(
    hist: Histogram,
    title: str = "Score distribution",
    xlabel: str = "score",
    ylabel: str = "count",
) -> str:
    """Standalone SVG bar chart; bar heights scale linearly with counts."""
    if not hist.counts:
        raise ValueError("empty histogram")
    parts = _svg_header(title) + _axes(xlabel, ylabel)
    plot_w = _W - 2 * _MARGIN
    plot_h = _H - 2 * _MARGIN
    y0 = _H - _MARGIN
    max_count = max(max(hist.counts), 1)
    n = len(hist.counts)
    bar_w = plot_w / n
    for i, count in enumerate(hist.counts):
        h = count / max_count * plot_h
        x = _MARGIN + i * bar_w
        parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y0 - h)}" width="{_fmt(bar_w)}" '
            f'height="{_fmt(h)}" fill="#4878a8" stroke="black" stroke-width="0.5"/>'
        )
    lo, hi = hist.edges[0], hist.edges[-1]
    for frac, value in ((0.0, lo), (0.5, (lo + hi) / 2), (1.0, hi)):
        x = _MARGIN + frac * plot_w
        parts.append(
            f'<text x="{_fmt(x)}" y="{y0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(value)}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN - 8}" y="{_MARGIN + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">{max_count}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_boxplot_svg(
    stats: dict,
    title: str = "Score distribution",
    ylabel: str = "score",
    value_range: tuple[float, float] = (0.0, 1.0),
) -> str:
    """Standalone SVG box plot from min/q1/median/q3/max statistics."""
    required = ("min", "q1", "median", "q3", "max")
    if any(k not in stats for k in required):
        raise ValueError(f"boxplot stats need {required}")
    lo, hi = value_range
    span = hi - lo if hi > lo else 1.0
    plot_h = _H - 2 * _MARGIN

    def y(v: float) -> float:
        return _H - _MARGIN - (v - lo) / span * plot_h

    cx = _W / 2
    half = 60
    parts = _svg_header(title) + _axes("", ylabel)
    y_min, y_q1, y_med, y_q3, y_max = (y(stats[k]) for k in required)
    parts += [
        f'<line x1="{_fmt(cx)}" y1="{_fmt(y_min)}" x2="{_fmt(cx)}" y2="{_fmt(y_q1)}" stroke="black"/>',
        f'<line x1="{_fmt(cx)}" y1="{_fmt(y_q3)}" x2="{_fmt(cx)}" y2="{_fmt(y_max)}" stroke="black"/>',
        f'<line x1="{_fmt(cx - half / 2)}" y1="{_fmt(y_min)}" x2="{_fmt(cx + half / 2)}" y2="{_fmt(y_min)}" stroke="black"/>',
        f'<line x1="{_fmt(cx - half / 2)}" y1="{_fmt(y_max)}" x2="{_fmt(cx + half / 2)}" y2="{_fmt(y_max)}" stroke="black"/>',
        f'<rect x="{_fmt(cx - half)}" y="{_fmt(y_q3)}" width="{_fmt(2 * half)}" '
        f'height="{_fmt(max(y_q1 - y_q3, 0.0))}" fill="#a8c8e8" stroke="black"/>',
        f'<line x1="{_fmt(cx - half)}" y1="{_fmt(y_med)}" x2="{_fmt(cx + half)}" y2="{_fmt(y_med)}" '
        f'stroke="black" stroke-width="2"/>',
    ]
    for frac, value in ((0.0, lo), (0.5, (lo + hi) / 2), (1.0, hi)):
        parts.append(
            f'<text x="{_MARGIN - 8}" y="{_fmt(y(value) + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(value)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
