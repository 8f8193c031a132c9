"""Patch grid extraction and the manifest binding patches to slide geometry."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from ..errors import GeometryError, ValueSpaceError
from .segment import TissueMask, validate_mask_for_slide
from .slide import Slide

MANIFEST_SCHEMA = "frost2ffpe-manifest-v1"


def uint8_to_normalized(pixels: np.ndarray) -> np.ndarray:
    """Map uint8 [0, 255] to float32 [-1, 1]."""
    if pixels.dtype != np.uint8:
        raise ValueSpaceError(f"expected uint8 pixels, got {pixels.dtype}")
    return pixels.astype(np.float32) / 127.5 - 1.0


def normalized_to_uint8(pixels: np.ndarray) -> np.ndarray:
    """Map float [-1, 1] back to uint8 by round((x + 1) * 127.5)."""
    if not np.issubdtype(pixels.dtype, np.floating):
        raise ValueSpaceError(f"expected float pixels, got {pixels.dtype}")
    return np.clip(np.round((pixels.astype(np.float64) + 1.0) * 127.5), 0, 255).astype(np.uint8)


@dataclass
class ImagePatch:
    """One square tile, either as stored uint8 or network-facing [-1, 1] floats."""

    patch_id: str
    pixels: np.ndarray  # H x W x 3
    value_space: str = "uint8"  # "uint8" | "normalized"

    def __post_init__(self) -> None:
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueSpaceError(f"expected HxWx3 pixels, got shape {self.pixels.shape}")
        if self.pixels.shape[0] != self.pixels.shape[1]:
            raise GeometryError(f"patches must be square, got {self.pixels.shape[:2]}")
        if self.value_space == "uint8":
            if self.pixels.dtype != np.uint8:
                raise ValueSpaceError(f"uint8 value space requires uint8 dtype, got {self.pixels.dtype}")
        elif self.value_space == "normalized":
            if not np.issubdtype(self.pixels.dtype, np.floating):
                raise ValueSpaceError("normalized value space requires float dtype")
            lo, hi = float(self.pixels.min()), float(self.pixels.max())
            if lo < -1.0 - 1e-5 or hi > 1.0 + 1e-5:
                raise ValueSpaceError(f"normalized pixels out of [-1, 1]: range [{lo}, {hi}]")
        else:
            raise ValueSpaceError(f"unknown value space {self.value_space!r}")

    @property
    def size(self) -> int:
        return self.pixels.shape[0]

    def to_normalized(self) -> "ImagePatch":
        if self.value_space == "normalized":
            return self
        return ImagePatch(self.patch_id, uint8_to_normalized(self.pixels), "normalized")

    def to_uint8(self) -> "ImagePatch":
        if self.value_space == "uint8":
            return self
        return ImagePatch(self.patch_id, normalized_to_uint8(self.pixels), "uint8")


@dataclass(frozen=True)
class ManifestEntry:
    patch_id: str
    x: int  # base (level-0) coordinates of the tile's top-left corner
    y: int
    level: int


@dataclass
class PatchManifest:
    """Row-major grid of extracted tiles for one slide."""

    slide_id: str
    patch_size: int
    magnification: float
    entries: list[ManifestEntry]

    def __post_init__(self) -> None:
        order = [(e.y, e.x) for e in self.entries]
        if order != sorted(order):
            raise GeometryError("manifest entries must be sorted row-major by (y, x)")
        ids = [e.patch_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise GeometryError("manifest patch_ids must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    def check_non_overlapping(self, level_downsample: float = 1.0) -> None:
        """Verify no two tiles intersect. Tiles span patch_size at their level."""
        span = self.patch_size * level_downsample
        buckets: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for e in self.entries:
            bx, by = int(e.x // span), int(e.y // span)
            for nbx in (bx - 1, bx, bx + 1):
                for nby in (by - 1, by, by + 1):
                    for ox, oy in buckets.get((nbx, nby), ()):
                        if abs(e.x - ox) < span and abs(e.y - oy) < span:
                            raise GeometryError(
                                f"tiles at ({ox}, {oy}) and ({e.x}, {e.y}) overlap (span {span})"
                            )
            buckets.setdefault((bx, by), []).append((e.x, e.y))

    def to_json(self) -> str:
        doc = {
            "slide_id": self.slide_id,
            "patch_size": self.patch_size,
            "magnification": self.magnification,
            "entries": [
                {"patch_id": e.patch_id, "x": e.x, "y": e.y, "level": e.level}
                for e in self.entries
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "PatchManifest":
        doc = json.loads(text)
        return cls(
            slide_id=doc["slide_id"],
            patch_size=int(doc["patch_size"]),
            magnification=float(doc["magnification"]),
            entries=[
                ManifestEntry(d["patch_id"], int(d["x"]), int(d["y"]), int(d["level"]))
                for d in doc["entries"]
            ],
        )

    @classmethod
    def load(cls, path: str | Path) -> "PatchManifest":
        return cls.from_json(Path(path).read_text())


def patch_file_name(slide_id: str, x: int, y: int) -> str:
    return f"{slide_id}__{x}_{y}.png"


def save_patch(patch: ImagePatch, directory: str | Path) -> Path:
    """Write a patch as a lossless PNG named `<patch_id>.png`."""
    out = Path(directory) / f"{patch.patch_id}.png"
    Image.fromarray(patch.to_uint8().pixels).save(out, format="PNG")
    return out


def load_patch(path: str | Path) -> ImagePatch:
    path = Path(path)
    pixels = np.asarray(Image.open(path).convert("RGB"), dtype=np.uint8)
    return ImagePatch(patch_id=path.stem, pixels=pixels, value_space="uint8")


def _box_coverage(mask: np.ndarray, y0: float, y1: float, x0: float, x1: float) -> float:
    """Exact tissue area fraction of an axis-aligned box, in mask pixel units.

    Boundary pixels contribute fractionally by their overlap with the box.
    """
    iy0, iy1 = int(math.floor(y0)), int(math.ceil(y1))
    ix0, ix1 = int(math.floor(x0)), int(math.ceil(x1))
    iy0, ix0 = max(iy0, 0), max(ix0, 0)
    iy1, ix1 = min(iy1, mask.shape[0]), min(ix1, mask.shape[1])
    if iy0 >= iy1 or ix0 >= ix1:
        return 0.0
    rows = np.arange(iy0, iy1, dtype=np.float64)
    cols = np.arange(ix0, ix1, dtype=np.float64)
    wy = np.minimum(rows + 1.0, y1) - np.maximum(rows, y0)
    wx = np.minimum(cols + 1.0, x1) - np.maximum(cols, x0)
    block = mask[iy0:iy1, ix0:ix1].astype(np.float64)
    covered = float(wy @ block @ wx)
    return covered / ((y1 - y0) * (x1 - x0))


def extract_patches(
    slide: Slide,
    mask: TissueMask,
    patch_size: int = 512,
    magnification: float = 20.0,
    min_coverage: float = 0.5,
) -> tuple[PatchManifest, Iterator[ImagePatch]]:
    """Tile the tissue region into non-overlapping square patches.

    The manifest is built eagerly and deterministically (row-major grid scan,
    tiles kept when their tissue coverage fraction is >= `min_coverage`);
    the pixel stream is a lazy generator that reads regions on demand.
    """
    if patch_size <= 0:
        raise GeometryError(f"patch_size must be positive, got {patch_size}")
    if not (0.0 < min_coverage <= 1.0):
        raise GeometryError(f"min_coverage must be in (0, 1], got {min_coverage}")
    validate_mask_for_slide(slide, mask)

    level = slide.record.level_for_magnification(magnification)
    level_ds = slide.record.downsample(level)
    mask_ds = slide.record.downsample(mask.level)
    base_w, base_h = slide.record.base_dimensions
    step = patch_size * level_ds  # tile span in base coordinates

    entries: list[ManifestEntry] = []
    if not mask.empty:
        grid = mask.binary_mask
        ny = int(base_h // step)
        nx = int(base_w // step)
        for iy in range(ny):
            for ix in range(nx):
                bx, by = int(round(ix * step)), int(round(iy * step))
                cov = _box_coverage(
                    grid,
                    by / mask_ds,
                    (by + step) / mask_ds,
                    bx / mask_ds,
                    (bx + step) / mask_ds,
                )
                if cov >= min_coverage:
                    entries.append(
                        ManifestEntry(
                            patch_id=f"{slide.record.slide_id}__{bx}_{by}",
                            x=bx,
                            y=by,
                            level=level,
                        )
                    )

    manifest = PatchManifest(
        slide_id=slide.record.slide_id,
        patch_size=patch_size,
        magnification=magnification,
        entries=entries,
    )

    def _stream() -> Iterator[ImagePatch]:
        for e in manifest.entries:
            pixels = slide.read_region(e.x, e.y, e.level, (patch_size, patch_size))
            yield ImagePatch(patch_id=e.patch_id, pixels=pixels, value_space="uint8")

    return manifest, _stream()


__all__ = [
    "ImagePatch",
    "MANIFEST_SCHEMA",
    "ManifestEntry",
    "PatchManifest",
    "extract_patches",
    "load_patch",
    "normalized_to_uint8",
    "patch_file_name",
    "save_patch",
    "uint8_to_normalized",
]
