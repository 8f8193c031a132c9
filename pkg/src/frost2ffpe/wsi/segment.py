"""Tissue segmentation on a downsampled slide level.

Saturation thresholding in HSV space with median blurring, followed by
contour extraction and area filtering of tissue outlines and cavities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

from ..errors import ConfigurationError, GeometryError
from .slide import Slide


@dataclass(frozen=True)
class SegmentationParams:
    """Knobs for tissue masking. Areas are in px^2 at the segmentation level."""

    saturation_threshold: int = 8
    median_blur_kernel: int = 7
    min_tissue_area: float = 6400.0
    min_hole_area: float = 1024.0
    segmentation_downsample: float = 64.0

    def __post_init__(self) -> None:
        if not (0 <= self.saturation_threshold <= 255):
            raise ConfigurationError(
                f"saturation_threshold must be in [0, 255], got {self.saturation_threshold}"
            )
        if self.median_blur_kernel < 1 or self.median_blur_kernel % 2 == 0:
            raise ConfigurationError(
                f"median_blur_kernel must be odd and >= 1, got {self.median_blur_kernel}"
            )
        if self.min_tissue_area < 0 or self.min_hole_area < 0:
            raise ConfigurationError("area filters must be non-negative")
        if self.segmentation_downsample < 1:
            raise ConfigurationError("segmentation_downsample must be >= 1")

    @classmethod
    def default_for(cls, patch_size: int = 512, segmentation_downsample: float = 64.0) -> "SegmentationParams":
        """Area filters scaled to the patch footprint at the segmentation level."""
        unit = (patch_size / segmentation_downsample) ** 2
        return cls(
            min_tissue_area=100.0 * unit,
            min_hole_area=16.0 * unit,
            segmentation_downsample=segmentation_downsample,
        )


@dataclass
class TissueMask:
    """Binary tissue raster plus the filtered contour geometry behind it."""

    level: int
    binary_mask: np.ndarray  # 2-D bool, dimensions of the slide at `level`
    contours: list[np.ndarray] = field(default_factory=list)  # (N, 2) int32 (x, y)
    holes: list[np.ndarray] = field(default_factory=list)
    params: SegmentationParams = field(default_factory=SegmentationParams)
    empty: bool = False

    @property
    def tissue_fraction(self) -> float:
        return float(self.binary_mask.mean())


def _segmentation_level(slide: Slide, target_downsample: float) -> int:
    """Smallest level whose downsample reaches the target, else the coarsest."""
    for level, ds in slide.record.magnification_levels:
        if ds >= target_downsample:
            return level
    return slide.record.magnification_levels[-1][0]


def segment_tissue(slide: Slide, params: SegmentationParams | None = None) -> TissueMask:
    """Compute the binary tissue mask of a slide.

    Deterministic for fixed input and params. An all-background slide yields
    an empty mask flagged `empty=True` rather than an error.
    """
    params = params or SegmentationParams()
    level = _segmentation_level(slide, params.segmentation_downsample)
    rgb = slide.read_level(level)

    hsv = cv2.cvtColor(rgb, cv2.COLOR_RGB2HSV)
    sat = cv2.medianBlur(hsv[:, :, 1], params.median_blur_kernel)
    _, binary = cv2.threshold(sat, params.saturation_threshold, 255, cv2.THRESH_BINARY)

    contours, hierarchy = cv2.findContours(binary, cv2.RETR_CCOMP, cv2.CHAIN_APPROX_SIMPLE)

    tissue: list[np.ndarray] = []
    holes: list[np.ndarray] = []
    if contours:
        hierarchy = hierarchy[0]  # (n, 4): next, prev, child, parent
        kept_parents = set()
        order = sorted(range(len(contours)), key=lambda i: _contour_key(contours[i]))
        for i in order:
            if hierarchy[i][3] == -1 and cv2.contourArea(contours[i]) >= params.min_tissue_area:
                kept_parents.add(i)
                tissue.append(contours[i].reshape(-1, 2))
        for i in order:
            parent = hierarchy[i][3]
            if parent in kept_parents and cv2.contourArea(contours[i]) >= params.min_hole_area:
                holes.append(contours[i].reshape(-1, 2))

    h, w = binary.shape
    mask = np.zeros((h, w), dtype=np.uint8)
    if tissue:
        cv2.fillPoly(mask, [c.reshape(-1, 1, 2) for c in tissue], 1)
    if holes:
        cv2.fillPoly(mask, [c.reshape(-1, 1, 2) for c in holes], 0)

    return TissueMask(
        level=level,
        binary_mask=mask.astype(bool),
        contours=tissue,
        holes=holes,
        params=params,
        empty=not tissue,
    )


def _contour_key(contour: np.ndarray) -> tuple[int, int, float]:
    x, y, w, h = cv2.boundingRect(contour)
    return (y, x, -cv2.contourArea(contour))


def mask_downsample(slide: Slide, mask: TissueMask) -> float:
    """Downsample factor of the mask raster relative to level 0."""
    return slide.record.downsample(mask.level)


def validate_mask_for_slide(slide: Slide, mask: TissueMask) -> None:
    expected = slide.record.level_dimensions(mask.level)
    got = (mask.binary_mask.shape[1], mask.binary_mask.shape[0])
    if expected != got:
        raise GeometryError(
            f"mask dimensions {got} do not match slide level {mask.level} dimensions {expected}"
        )


__all__ = [
    "SegmentationParams",
    "TissueMask",
    "mask_downsample",
    "segment_tissue",
    "validate_mask_for_slide",
]
