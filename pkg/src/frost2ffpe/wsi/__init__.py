"""Whole-slide pipeline: tissue segmentation, patch extraction, stitching."""

from .slide import ArraySlide, RasterSlide, Slide, SlideLabel, SlideRecord, open_slide
from .segment import SegmentationParams, TissueMask, segment_tissue
from .patches import (
    ImagePatch,
    ManifestEntry,
    PatchManifest,
    extract_patches,
    load_patch,
    normalized_to_uint8,
    save_patch,
    uint8_to_normalized,
)
from .stitch import stitch

__all__ = [
    "ArraySlide",
    "ImagePatch",
    "ManifestEntry",
    "PatchManifest",
    "RasterSlide",
    "SegmentationParams",
    "Slide",
    "SlideLabel",
    "SlideRecord",
    "TissueMask",
    "extract_patches",
    "load_patch",
    "normalized_to_uint8",
    "open_slide",
    "save_patch",
    "segment_tissue",
    "stitch",
    "uint8_to_normalized",
]
