"""Average Hausdorff distance (directed and symmetric) over label masks,
accelerated by an exact Euclidean distance transform, with a brute-force
reference path for verification."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .mask import LabelMask, shape_compatible, spacing_equal
from .overlap import MetricValue, Undefined

EMPTY_GT = "EMPTY_GT"
EMPTY_PRED = "EMPTY_PRED"


class EmptyReferenceError(ValueError):
    """Distance field requested against an empty reference set."""


@dataclass(frozen=True)
class PointSet:
    """Foreground coordinates of one class, sorted lexicographically."""

    points: np.ndarray  # (n, ndim) int64
    spacing: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.int64)
        if pts.ndim != 2 and pts.size:
            raise ValueError("points must be an (n, ndim) array")
        pts = pts.reshape(-1, len(self.shape))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def is_empty(self) -> bool:
        return len(self) == 0


@dataclass(frozen=True)
class DistanceField:
    """Per-element spacing-weighted Euclidean distance to the nearest reference element."""

    shape: tuple[int, ...]
    values: np.ndarray  # dense, shape == self.shape
    spacing: tuple[float, ...]


def extract_points(mask: LabelMask, class_id: int, surface_only: bool = False) -> PointSet:
    """All elements of the class, or only those with a face-adjacent non-class
    neighbor (grid boundary counts as outside)."""
    grid = mask.grid()
    fg = grid == class_id
    if surface_only and fg.any():
        interior = np.ones_like(fg)
        for axis in range(fg.ndim):
            lo = [slice(None)] * fg.ndim
            hi = [slice(None)] * fg.ndim
            lo[axis] = slice(None, -1)
            hi[axis] = slice(1, None)
            shifted_fwd = np.zeros_like(fg)
            shifted_bwd = np.zeros_like(fg)
            shifted_fwd[tuple(lo)] = fg[tuple(hi)]   # neighbor at +1 along axis
            shifted_bwd[tuple(hi)] = fg[tuple(lo)]   # neighbor at -1 along axis
            interior &= shifted_fwd & shifted_bwd
        fg = fg & ~interior
    pts = np.argwhere(fg)  # row-major order == lexicographic
    return PointSet(points=pts, spacing=mask.spacing, shape=mask.shape)


def edt(mask: LabelMask, class_id: int) -> DistanceField:
    """Exact anisotropic Euclidean distance transform to the class foreground."""
    grid = mask.grid()
    fg = grid == class_id
    if not fg.any():
        raise EmptyReferenceError(f"EMPTY_REFERENCE: class {class_id} absent from mask")
    values = ndimage.distance_transform_edt(~fg, sampling=mask.spacing)
    return DistanceField(shape=mask.shape, values=values, spacing=mask.spacing)


def _field_of_points(ref: PointSet, spacing: tuple[float, ...]) -> DistanceField:
    if ref.is_empty:
        raise EmptyReferenceError("EMPTY_REFERENCE: reference point set is empty")
    indicator = np.zeros(ref.shape, dtype=bool)
    indicator[tuple(ref.points.T)] = True
    values = ndimage.distance_transform_edt(~indicator, sampling=spacing)
    return DistanceField(shape=ref.shape, values=values, spacing=spacing)


def directed_ahd(a: PointSet, b_field: DistanceField) -> float:
    """Mean over points of A of the distance to the nearest point of B."""
    if a.is_empty:
        raise ValueError("EMPTY_SET: directed distance from an empty set is undefined")
    if tuple(a.shape) != tuple(b_field.shape):
        raise ValueError("point set and distance field shapes disagree")
    return float(np.mean(b_field.values[tuple(a.points.T)]))


def _directed_max(a: PointSet, b_field: DistanceField) -> float:
    return float(np.max(b_field.values[tuple(a.points.T)]))


def _prepare_pair(gt: LabelMask, pred: LabelMask, class_id: int, surface_only: bool):
    if not shape_compatible(gt, pred):
        raise ValueError(f"shape mismatch: {gt.shape} vs {pred.shape}")
    if not spacing_equal(gt, pred):
        warnings.warn("spacing mismatch between gt and pred; gt spacing wins", stacklevel=3)
    a = extract_points(gt, class_id, surface_only)
    b = extract_points(pred, class_id, surface_only)
    if a.is_empty:
        return None, Undefined(EMPTY_GT)
    if b.is_empty:
        return None, Undefined(EMPTY_PRED)
    spacing = gt.spacing
    return (a, b, spacing), None


def ahd(gt: LabelMask, pred: LabelMask, class_id: int, surface_only: bool = False) -> MetricValue:
    """Symmetric average Hausdorff distance: max of the two directed means."""
    prepared, undef = _prepare_pair(gt, pred, class_id, surface_only)
    if undef is not None:
        return undef
    a, b, spacing = prepared
    field_b = _field_of_points(b, spacing)
    field_a = _field_of_points(a, spacing)
    return max(directed_ahd(a, field_b), directed_ahd(b, field_a))


def hausdorff_max(gt: LabelMask, pred: LabelMask, class_id: int,
                  surface_only: bool = False) -> MetricValue:
    """Classic outlier-sensitive Hausdorff distance (max of directed maxima)."""
    prepared, undef = _prepare_pair(gt, pred, class_id, surface_only)
    if undef is not None:
        return undef
    a, b, spacing = prepared
    field_b = _field_of_points(b, spacing)
    field_a = _field_of_points(a, spacing)
    return max(_directed_max(a, field_b), _directed_max(b, field_a))


# ---------------------------------------------------------------------------
# Brute-force reference path (O(|A|*|B|)), kept independent of the EDT route.

def _pairwise_min_dists(a: np.ndarray, b: np.ndarray, spacing) -> np.ndarray:
    """For each point of a, its distance to the nearest point of b."""
    w = np.asarray(spacing, dtype=np.float64)
    out = np.empty(a.shape[0])
    bw = b * w
    for i, pt in enumerate(a * w):
        out[i] = np.sqrt(((bw - pt) ** 2).sum(axis=1)).min()
    return out


def directed_ahd_bruteforce(a: PointSet, b: PointSet) -> float:
    if a.is_empty or b.is_empty:
        raise ValueError("EMPTY_SET")
    return float(_pairwise_min_dists(a.points, b.points, a.spacing).mean())


def ahd_bruteforce(gt: LabelMask, pred: LabelMask, class_id: int,
                   surface_only: bool = False) -> MetricValue:
    prepared, undef = _prepare_pair(gt, pred, class_id, surface_only)
    if undef is not None:
        return undef
    a, b, spacing = prepared
    d_ab = _pairwise_min_dists(a.points, b.points, spacing).mean()
    d_ba = _pairwise_min_dists(b.points, a.points, spacing).mean()
    return float(max(d_ab, d_ba))


def hausdorff_max_bruteforce(gt: LabelMask, pred: LabelMask, class_id: int,
                             surface_only: bool = False) -> MetricValue:
    prepared, undef = _prepare_pair(gt, pred, class_id, surface_only)
    if undef is not None:
        return undef
    a, b, spacing = prepared
    d_ab = _pairwise_min_dists(a.points, b.points, spacing).max()
    d_ba = _pairwise_min_dists(b.points, a.points, spacing).max()
    return float(max(d_ab, d_ba))
