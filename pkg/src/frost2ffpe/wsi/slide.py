"""Slide records and pixel access.

Two desk-scale backends are provided: plain raster images treated as a
single-level pyramid, and multi-frame TIFFs whose frames form a pyramid.
Both expose the same region-read interface in base (level-0) coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import GeometryError, SlideReadError

Image.MAX_IMAGE_PIXELS = None


class SlideLabel(str, Enum):
    GBM = "GBM"
    LGG = "LGG"
    LUAD = "LUAD"
    LUSC = "LUSC"
    OTHER = "other"


@dataclass(frozen=True)
class SlideRecord:
    """Identity and pyramid geometry of one whole-slide image."""

    slide_id: str
    source_path: str
    base_dimensions: tuple[int, int]  # (width, height) at level 0
    magnification_levels: tuple[tuple[int, float], ...]  # (level, downsample)
    label: SlideLabel = SlideLabel.OTHER
    base_magnification: float = 20.0  # nominal objective power at level 0

    def __post_init__(self) -> None:
        w, h = self.base_dimensions
        if w <= 0 or h <= 0:
            raise GeometryError(f"base_dimensions must be positive, got {self.base_dimensions}")
        levels = tuple(self.magnification_levels)
        if not levels:
            raise GeometryError("at least one pyramid level is required")
        if levels[0] != (0, 1.0):
            raise GeometryError(f"level 0 must have downsample 1.0, got {levels[0]}")
        for (la, da), (lb, db) in zip(levels, levels[1:]):
            if lb != la + 1 or db <= da:
                raise GeometryError(
                    f"downsample factors must be strictly increasing with level index, got {levels}"
                )
        object.__setattr__(self, "magnification_levels", levels)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(level for level, _ in self.magnification_levels)

    def downsample(self, level: int) -> float:
        for lvl, ds in self.magnification_levels:
            if lvl == level:
                return ds
        raise GeometryError(f"slide {self.slide_id!r} has no level {level}; levels: {self.levels}")

    def level_dimensions(self, level: int) -> tuple[int, int]:
        ds = self.downsample(level)
        w, h = self.base_dimensions
        return int(round(w / ds)), int(round(h / ds))

    def magnification_at(self, level: int) -> float:
        return self.base_magnification / self.downsample(level)

    def level_for_magnification(self, magnification: float, tol: float = 1e-6) -> int:
        for level, ds in self.magnification_levels:
            if abs(self.base_magnification / ds - magnification) <= tol:
                return level
        available = [self.magnification_at(lvl) for lvl in self.levels]
        raise GeometryError(
            f"magnification {magnification}x not in pyramid of slide {self.slide_id!r}; "
            f"available: {available}"
        )


class Slide:
    """Pixel access for one slide. Subclasses provide `_read_level_region`."""

    record: SlideRecord

    def level_dimensions(self, level: int) -> tuple[int, int]:
        return self.record.level_dimensions(level)

    def read_region(self, x: int, y: int, level: int, size: tuple[int, int]) -> np.ndarray:
        """Read a (width, height) region at `level`; (x, y) are base coordinates."""
        ds = self.record.downsample(level)
        lx, ly = int(round(x / ds)), int(round(y / ds))
        w, h = size
        lw, lh = self.level_dimensions(level)
        if lx < 0 or ly < 0 or lx + w > lw or ly + h > lh:
            raise GeometryError(
                f"region {(x, y, w, h)} at level {level} exceeds level bounds {(lw, lh)}"
            )
        return self._read_level_region(lx, ly, level, w, h)

    def read_level(self, level: int) -> np.ndarray:
        w, h = self.level_dimensions(level)
        return self._read_level_region(0, 0, level, w, h)

    def _read_level_region(self, lx: int, ly: int, level: int, w: int, h: int) -> np.ndarray:
        raise NotImplementedError


def _to_rgb_array(img: Image.Image) -> np.ndarray:
    arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return np.ascontiguousarray(arr)


class RasterSlide(Slide):
    """A slide backed by an image file.

    Single-frame images become a one-level pyramid. Multi-frame TIFFs whose
    frames shrink monotonically are read as pyramid levels.
    """

    def __init__(
        self,
        path: str | Path,
        slide_id: str | None = None,
        label: SlideLabel = SlideLabel.OTHER,
        base_magnification: float = 20.0,
    ) -> None:
        path = Path(path)
        if not path.is_file():
            raise SlideReadError(f"slide file not found: {path}")
        try:
            img = Image.open(path)
        except Exception as exc:
            raise SlideReadError(f"cannot read slide {path}: {exc}") from exc

        self._levels: list[np.ndarray] = [_to_rgb_array(img)]
        n_frames = getattr(img, "n_frames", 1)
        for frame in range(1, n_frames):
            img.seek(frame)
            arr = _to_rgb_array(img)
            if arr.shape[0] < self._levels[-1].shape[0] and arr.shape[1] < self._levels[-1].shape[1]:
                self._levels.append(arr)
        img.close()

        base_h, base_w = self._levels[0].shape[:2]
        levels = tuple(
            (i, float(base_w) / arr.shape[1]) for i, arr in enumerate(self._levels)
        )
        self.record = SlideRecord(
            slide_id=slide_id or path.stem,
            source_path=str(path),
            base_dimensions=(base_w, base_h),
            magnification_levels=levels,
            label=label,
            base_magnification=base_magnification,
        )

    def _read_level_region(self, lx: int, ly: int, level: int, w: int, h: int) -> np.ndarray:
        return self._levels[level][ly : ly + h, lx : lx + w].copy()


class ArraySlide(Slide):
    """In-memory slide, mostly for tests and synthetic data."""

    def __init__(
        self,
        pixels: np.ndarray,
        slide_id: str = "array",
        label: SlideLabel = SlideLabel.OTHER,
        base_magnification: float = 20.0,
        extra_levels: list[np.ndarray] | None = None,
    ) -> None:
        if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
            raise SlideReadError(f"expected HxWx3 uint8 pixels, got {pixels.shape} {pixels.dtype}")
        self._levels = [pixels] + list(extra_levels or [])
        base_h, base_w = pixels.shape[:2]
        levels = tuple((i, float(base_w) / arr.shape[1]) for i, arr in enumerate(self._levels))
        self.record = SlideRecord(
            slide_id=slide_id,
            source_path="<memory>",
            base_dimensions=(base_w, base_h),
            magnification_levels=levels,
            label=label,
            base_magnification=base_magnification,
        )

    def _read_level_region(self, lx: int, ly: int, level: int, w: int, h: int) -> np.ndarray:
        return self._levels[level][ly : ly + h, lx : lx + w].copy()


def open_slide(
    path: str | Path,
    slide_id: str | None = None,
    label: SlideLabel = SlideLabel.OTHER,
    base_magnification: float = 20.0,
) -> Slide:
    """Open a slide file with the raster backend."""
    return RasterSlide(path, slide_id=slide_id, label=label, base_magnification=base_magnification)
