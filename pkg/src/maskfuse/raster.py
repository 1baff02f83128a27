"""Raster types and bit-exact file I/O.

Label maps are 8-bit single-channel PNGs (pixel value = class id, 255 =
void). Instance masks come either as a directory of binary PNGs or as a
single ``masks.json`` of run-length encodings. Confidence maps are 16-bit
single-channel PNGs mapping v -> v/65535.

RLE format: row-major, alternating run lengths starting with the count of
zero pixels (a mask starting with a set pixel encodes as [0, n, ...]).
Runs are non-negative and must sum to exactly width*height.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .registry import VOID_ID

CONFIDENCE_SCALE = 65535


class RasterError(ValueError):
    """Raster file violates the expected format."""


def _require_same_shape(a, b, what: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what}: dimension mismatch {a.shape[::-1]} vs {b.shape[::-1]}")


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabelMap:
    """H x W raster of class ids, one byte per pixel, 255 = void."""

    data: np.ndarray

    @classmethod
    def from_array(cls, arr) -> "LabelMap":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise RasterError(f"label map must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise RasterError("label map must be non-empty")
        return cls(data=np.ascontiguousarray(arr, dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelMap) and np.array_equal(self.data, other.data)


@dataclass(frozen=True)
class ConfidenceMap:
    """H x W raster of per-pixel confidence in [0, 1]."""

    data: np.ndarray

    @classmethod
    def from_array(cls, arr) -> "ConfidenceMap":
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        if arr.ndim != 2 or arr.size == 0:
            raise RasterError(f"confidence map must be non-empty 2-D, got shape {arr.shape}")
        if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
            raise RasterError("confidence values must lie in [0, 1]")
        return cls(data=arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class ImageRaster:
    """H x W RGB image, uint8."""

    data: np.ndarray

    @classmethod
    def from_array(cls, arr) -> "ImageRaster":
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise RasterError(f"image must be H x W x 3, got shape {arr.shape}")
        return cls(data=arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class BinaryMask:
    """One binary instance mask with cached area, centroid, and pixel indices.

    ``centroid`` is the arithmetic mean (x, y) of set-pixel coordinates;
    construction rejects empty masks because area ranking and the centroid
    are undefined for them.
    """

    data: np.ndarray
    area: int
    centroid: tuple[float, float]
    flat_indices: np.ndarray = field(repr=False)
    mask_id: str | None = None

    @classmethod
    def from_array(cls, arr, mask_id: str | None = None) -> "BinaryMask":
        arr = np.ascontiguousarray(np.asarray(arr) != 0)
        if arr.ndim != 2 or arr.size == 0:
            raise RasterError(f"mask must be non-empty 2-D, got shape {arr.shape}")
        idx = np.flatnonzero(arr.ravel())
        if idx.size == 0:
            raise RasterError("empty mask (area 0)")
        width = arr.shape[1]
        xs = idx % width
        ys = idx // width
        return cls(
            data=arr,
            area=int(idx.size),
            centroid=(float(xs.mean()), float(ys.mean())),
            flat_indices=idx.astype(np.int64),
            mask_id=mask_id,
        )

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def runs(self) -> list[int]:
        return rle_encode(self.data)

    def __eq__(self, other) -> bool:
        return (isinstance(other, BinaryMask)
                and self.mask_id == other.mask_id
                and np.array_equal(self.data, other.data))


@dataclass(frozen=True)
class MaskSet:
    """Ordered instance masks sharing one raster size; masks may overlap."""

    masks: tuple[BinaryMask, ...]

    def __post_init__(self):
        for k, m in enumerate(self.masks[1:], start=1):
            if m.data.shape != self.masks[0].data.shape:
                raise RasterError(
                    f"mask {k}: size {m.width}x{m.height} differs from mask 0 "
                    f"({self.masks[0].width}x{self.masks[0].height})")

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self):
        return iter(self.masks)

    def __getitem__(self, k) -> BinaryMask:
        return self.masks[k]

    @property
    def width(self) -> int:
        return self.masks[0].width

    @property
    def height(self) -> int:
        return self.masks[0].height


def sort_by_area(ms: MaskSet) -> MaskSet:
    """Masks in non-increasing area order; ties keep input order (stable)."""
    return MaskSet(masks=tuple(sorted(ms.masks, key=lambda m: -m.area)))


# ---------------------------------------------------------------------------
# RLE codec
# ---------------------------------------------------------------------------

def rle_encode(mask: np.ndarray) -> list[int]:
    """Row-major alternating run lengths, zero-run first."""
    flat = np.asarray(mask).ravel().astype(bool)
    if flat.size == 0:
        return []
    changes = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def rle_decode(runs, width: int, height: int) -> np.ndarray:
    """Inverse of :func:`rle_encode`; validates totals against the raster size."""
    runs = np.asarray(runs, dtype=np.int64)
    if runs.size and runs.min() < 0:
        raise RasterError("RLE runs must be non-negative")
    total = int(runs.sum())
    if total != width * height:
        raise RasterError(f"RLE runs sum to {total}, expected {width}x{height} = {width * height}")
    values = np.arange(runs.size, dtype=np.int64) % 2
    flat = np.repeat(values.astype(bool), runs)
    return flat.reshape(height, width)


# ---------------------------------------------------------------------------
# PNG I/O
# ---------------------------------------------------------------------------

_LABEL_MODES = ("L", "P")


def load_label_png(path: str | Path) -> LabelMap:
    with Image.open(path) as img:
        if img.mode not in _LABEL_MODES:
            raise RasterError(
                f"{path}: label PNG must be single-channel 8-bit (mode L or P), got mode {img.mode}")
        data = np.asarray(img, dtype=np.uint8)
    return LabelMap.from_array(data)


def save_label_png(lm: LabelMap, path: str | Path) -> None:
    Image.fromarray(lm.data).save(path, format="PNG")


def load_confidence(path: str | Path) -> ConfidenceMap:
    with Image.open(path) as img:
        if img.mode not in ("I;16", "I"):
            raise RasterError(f"{path}: confidence PNG must be 16-bit single-channel, got mode {img.mode}")
        raw = np.asarray(img).astype(np.float32)
    return ConfidenceMap.from_array(raw / CONFIDENCE_SCALE)


def save_confidence(cm: ConfidenceMap, path: str | Path) -> None:
    quantized = np.round(cm.data * CONFIDENCE_SCALE).astype(np.uint16)
    Image.fromarray(quantized).save(path, format="PNG")


def load_image_png(path: str | Path) -> ImageRaster:
    with Image.open(path) as img:
        if img.mode != "RGB":
            img = img.convert("RGB")
        data = np.asarray(img, dtype=np.uint8)
    return ImageRaster.from_array(data)


def save_image_png(im: ImageRaster, path: str | Path) -> None:
    Image.fromarray(im.data).save(path, format="PNG")


# ---------------------------------------------------------------------------
# Mask collections
# ---------------------------------------------------------------------------

def load_masks(path: str | Path) -> MaskSet:
    """Load instance masks from a JSON file or a directory of binary PNGs.

    Input order is preserved (JSON array order / sorted filenames);
    sorting by area is a separate, explicit step.
    """
    path = Path(path)
    if path.is_dir():
        return _load_masks_dir(path)
    if path.is_file():
        return _load_masks_json(path)
    raise RasterError(f"{path}: not a masks JSON file or directory")


def _load_masks_dir(path: Path) -> MaskSet:
    files = sorted(path.glob("*.png"))
    if not files:
        raise RasterError(f"{path}: no *.png masks found")
    masks = []
    for k, f in enumerate(files):
        with Image.open(f) as img:
            if img.mode not in ("1", "L", "P"):
                raise RasterError(f"mask {k} ({f.name}): must be single-channel, got mode {img.mode}")
            arr = np.asarray(img)
        try:
            masks.append(BinaryMask.from_array(arr, mask_id=f.stem))
        except RasterError as exc:
            raise RasterError(f"mask {k} ({f.name}): {exc}") from exc
    return MaskSet(masks=tuple(masks))


def _load_masks_json(path: Path) -> MaskSet:
    try:
        with path.open("r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise RasterError(f"{path}: not valid JSON ({exc})") from exc
    try:
        width = int(doc["width"])
        height = int(doc["height"])
        entries = doc["masks"]
    except (KeyError, TypeError) as exc:
        raise RasterError(f"{path}: expected keys width, height, masks") from exc
    masks = []
    for k, entry in enumerate(entries):
        try:
            data = rle_decode(entry["rle"], width, height)
            masks.append(BinaryMask.from_array(data, mask_id=entry.get("id")))
        except (RasterError, KeyError, TypeError) as exc:
            raise RasterError(f"mask {k}: {exc}") from exc
    return MaskSet(masks=tuple(masks))


def save_masks_json(ms: MaskSet, path: str | Path) -> None:
    entries = []
    for m in ms:
        entry: dict = {"rle": m.runs}
        if m.mask_id is not None:
            entry["id"] = m.mask_id
        entries.append(entry)
    doc = {"width": ms.width, "height": ms.height, "masks": entries}
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
