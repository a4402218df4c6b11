"""Label mask model and on-disk formats (grayscale PNG, MGRID binary)."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

MAX_CLASS_ID = 65535

MGRID_MAGIC = b"MGRD"
MGRID_VERSION = 1
MGRID_DTYPE_LABELS = 0
MGRID_DTYPE_FLOAT = 1


class MaskError(Exception):
    """Raised for malformed masks or unreadable mask files."""


@dataclass(frozen=True)
class LabelMask:
    """Dense integer label grid (2D or 3D), row-major, with per-axis spacing."""

    shape: tuple[int, ...]
    labels: np.ndarray  # flat, row-major
    spacing: tuple[float, ...] = ()

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if len(shape) not in (2, 3) or any(s < 1 for s in shape):
            raise MaskError(f"shape must have 2 or 3 axes with positive lengths, got {shape}")
        labels = np.ascontiguousarray(self.labels, dtype=np.int64).ravel()
        if labels.size != int(np.prod(shape)):
            raise MaskError(
                f"labels length {labels.size} != product of shape {shape}"
            )
        if labels.size and (labels.min() < 0 or labels.max() > MAX_CLASS_ID):
            raise MaskError("label values must be in [0, 65535]")
        spacing = tuple(float(s) for s in (self.spacing or (1.0,) * len(shape)))
        if len(spacing) != len(shape) or any(s <= 0 for s in spacing):
            raise MaskError(f"spacing must have one positive entry per axis, got {spacing}")
        labels.setflags(write=False)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "spacing", spacing)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def grid(self) -> np.ndarray:
        """Labels reshaped to self.shape (read-only view)."""
        return self.labels.reshape(self.shape)

    def present_classes(self) -> list[int]:
        return [int(c) for c in np.unique(self.labels)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelMask):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.spacing == other.spacing
            and bool(np.array_equal(self.labels, other.labels))
        )

    @classmethod
    def from_array(cls, arr, spacing: Optional[Sequence[float]] = None) -> "LabelMask":
        a = np.asarray(arr)
        return cls(shape=a.shape, labels=a.ravel(), spacing=tuple(spacing) if spacing else ())


@dataclass(frozen=True)
class ProbabilityMap:
    """Soft prediction grid with values in [0, 1]; consumed only by ROC operations."""

    shape: tuple[int, ...]
    values: np.ndarray  # flat, row-major, float64
    spacing: tuple[float, ...] = ()

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        values = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        if values.size != int(np.prod(shape)):
            raise MaskError("probability payload length mismatch")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise MaskError("probability values must lie in [0, 1]")
        spacing = tuple(float(s) for s in (self.spacing or (1.0,) * len(shape)))
        values.setflags(write=False)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "spacing", spacing)

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.shape)


@dataclass(frozen=True)
class ClassEntry:
    class_id: int
    name: str
    is_background: bool = False


@dataclass(frozen=True)
class ClassCatalog:
    """Names the classes under evaluation; at most one background entry."""

    entries: tuple[ClassEntry, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        ids = [e.class_id for e in entries]
        if len(set(ids)) != len(ids):
            raise MaskError("duplicate class ids in catalog")
        if sum(e.is_background for e in entries) > 1:
            raise MaskError("at most one class may be background")
        object.__setattr__(self, "entries", entries)

    @property
    def background_id(self) -> Optional[int]:
        for e in self.entries:
            if e.is_background:
                return e.class_id
        return None

    @property
    def class_ids(self) -> list[int]:
        return [e.class_id for e in self.entries]

    @property
    def foreground_ids(self) -> list[int]:
        return [e.class_id for e in self.entries if not e.is_background]

    def name_of(self, class_id: int) -> str:
        for e in self.entries:
            if e.class_id == class_id:
                return e.name
        return str(class_id)

    @classmethod
    def default_binary(cls) -> "ClassCatalog":
        return cls((ClassEntry(0, "background", True), ClassEntry(1, "foreground")))

    @classmethod
    def from_masks(cls, *masks: LabelMask, background_id: int = 0) -> "ClassCatalog":
        """Catalog covering every label present in the given masks; class 0 is background."""
        ids = sorted(set().union(*[m.present_classes() for m in masks]) | {background_id})
        return cls(tuple(
            ClassEntry(c, "background" if c == background_id else f"class_{c}",
                       c == background_id)
            for c in ids
        ))

    @classmethod
    def from_json_obj(cls, obj) -> "ClassCatalog":
        return cls(tuple(
            ClassEntry(int(e["id"]), str(e.get("name", e["id"])), bool(e.get("background", False)))
            for e in obj
        ))

    def to_json_obj(self):
        return [
            {"id": e.class_id, "name": e.name, "background": e.is_background}
            for e in self.entries
        ]


def shape_compatible(a: LabelMask, b) -> bool:
    """True iff both grids have identical axis counts and lengths."""
    return tuple(a.shape) == tuple(b.shape)


def spacing_equal(a: LabelMask, b) -> bool:
    return tuple(a.spacing) == tuple(b.spacing)


# ---------------------------------------------------------------------------
# PNG

def _load_png(path: Path) -> LabelMask:
    img = Image.open(path)
    if img.mode == "P":
        raise MaskError(f"{path}: palette PNGs are rejected (ambiguous label mapping)")
    if img.mode == "L":
        arr = np.asarray(img, dtype=np.int64)
    elif img.mode in ("I", "I;16", "I;16B"):
        arr = np.asarray(img.convert("I"), dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() > MAX_CLASS_ID):
            raise MaskError(f"{path}: unsupported bit depth (labels exceed 16-bit range)")
    else:
        raise MaskError(f"{path}: unsupported PNG mode {img.mode!r} (need single-channel grayscale)")
    return LabelMask.from_array(arr)


def _save_png(mask: LabelMask, path: Path) -> None:
    if mask.ndim != 2:
        raise MaskError("PNG supports 2D only")
    grid = mask.grid()
    max_label = int(grid.max()) if grid.size else 0
    if max_label <= 255:
        img = Image.fromarray(grid.astype(np.uint8), mode="L")
    elif max_label <= MAX_CLASS_ID:
        img = Image.fromarray(grid.astype(np.uint16))
    else:
        raise MaskError("label exceeds 16-bit PNG depth")
    img.save(path, format="PNG")


# ---------------------------------------------------------------------------
# MGRID

def _read_mgrid_header(blob: bytes, path: Path):
    if len(blob) < 7 or blob[:4] != MGRID_MAGIC:
        raise MaskError(f"{path}: not an MGRID file (bad magic)")
    version, dtype, ndim = blob[4], blob[5], blob[6]
    if version != MGRID_VERSION:
        raise MaskError(f"{path}: unsupported MGRID version {version}")
    if dtype not in (MGRID_DTYPE_LABELS, MGRID_DTYPE_FLOAT):
        raise MaskError(f"{path}: unknown MGRID dtype {dtype}")
    if ndim not in (2, 3):
        raise MaskError(f"{path}: MGRID ndim must be 2 or 3, got {ndim}")
    off = 7
    dims = struct.unpack_from(f"<{ndim}I", blob, off)
    off += 4 * ndim
    spacing = struct.unpack_from(f"<{ndim}f", blob, off)
    off += 4 * ndim
    return dtype, dims, spacing, off


def _load_mgrid(path: Path):
    blob = path.read_bytes()
    dtype, dims, spacing, off = _read_mgrid_header(blob, path)
    n = int(np.prod(dims))
    itemsize = 2 if dtype == MGRID_DTYPE_LABELS else 4
    payload = blob[off:]
    if len(payload) != n * itemsize:
        raise MaskError(
            f"{path}: payload length mismatch (declared {n} values, got {len(payload) // itemsize})"
        )
    if dtype == MGRID_DTYPE_LABELS:
        labels = np.frombuffer(payload, dtype="<u2")
        return LabelMask(shape=dims, labels=labels, spacing=spacing)
    values = np.frombuffer(payload, dtype="<f4")
    return ProbabilityMap(shape=dims, values=values, spacing=spacing)


def _mgrid_bytes(shape, spacing, dtype: int, payload: bytes) -> bytes:
    ndim = len(shape)
    head = MGRID_MAGIC + bytes([MGRID_VERSION, dtype, ndim])
    head += struct.pack(f"<{ndim}I", *shape)
    head += struct.pack(f"<{ndim}f", *spacing)
    return head + payload


def _save_mgrid(mask: LabelMask, path: Path) -> None:
    payload = mask.labels.astype("<u2").tobytes()
    path.write_bytes(_mgrid_bytes(mask.shape, mask.spacing, MGRID_DTYPE_LABELS, payload))


# ---------------------------------------------------------------------------
# Public I/O

def _sniff_format(path: Path, format_hint: Optional[str]) -> str:
    if format_hint:
        return format_hint.lower()
    suffix = path.suffix.lower()
    if suffix == ".png":
        return "png"
    if suffix == ".mgrid":
        return "mgrid"
    try:
        head = path.open("rb").read(8)
    except OSError as e:
        raise MaskError(f"cannot read {path}: {e}") from e
    if head[:4] == MGRID_MAGIC:
        return "mgrid"
    if head[:8] == b"\x89PNG\r\n\x1a\n":
        return "png"
    raise MaskError(f"{path}: unrecognized mask format")


def load_mask(path, format_hint: Optional[str] = None) -> LabelMask:
    """Load a hard label mask from PNG or MGRID."""
    path = Path(path)
    if not path.is_file():
        raise MaskError(f"no such file: {path}")
    fmt = _sniff_format(path, format_hint)
    if fmt == "png":
        return _load_png(path)
    if fmt == "mgrid":
        out = _load_mgrid(path)
        if not isinstance(out, LabelMask):
            raise MaskError(f"{path}: MGRID holds float probabilities; use load_probability_map")
        return out
    raise MaskError(f"unsupported format {fmt!r}")


def save_mask(mask: LabelMask, path, format: Optional[str] = None) -> None:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "png":
        _save_png(mask, path)
    elif fmt == "mgrid":
        _save_mgrid(mask, path)
    else:
        raise MaskError(f"unsupported format {fmt!r}")


def load_probability_map(path) -> ProbabilityMap:
    path = Path(path)
    if not path.is_file():
        raise MaskError(f"no such file: {path}")
    out = _load_mgrid(path)
    if not isinstance(out, ProbabilityMap):
        raise MaskError(f"{path}: MGRID holds hard labels, not probabilities")
    return out


def save_probability_map(prob: ProbabilityMap, path) -> None:
    payload = prob.values.astype("<f4").tobytes()
    Path(path).write_bytes(_mgrid_bytes(prob.shape, prob.spacing, MGRID_DTYPE_FLOAT, payload))
