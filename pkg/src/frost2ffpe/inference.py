"""Apply a trained generator at patch and whole-slide granularity."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import torch

from .errors import ConfigurationError
from .models.checkpoint import load_checkpoint
from .models.generator import ResnetGenerator
from .wsi.patches import (
    ImagePatch,
    PatchManifest,
    extract_patches,
    normalized_to_uint8,
)
from .wsi.segment import SegmentationParams, segment_tissue
from .wsi.slide import Slide
from .wsi.stitch import WHITE, stitch


@dataclass
class TranslationJob:
    """Settings for translating a manifest of tiles."""

    checkpoint_path: str | Path
    output_dir: str | Path
    batch_size: int = 8
    background: tuple[int, int, int] = WHITE

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")

    def validate_against(self, manifest: PatchManifest) -> None:
        if manifest.patch_size % ResnetGenerator.DOWNSAMPLE_FACTOR != 0:
            raise ConfigurationError(
                f"manifest patch_size {manifest.patch_size} is incompatible with the "
                f"generator downsampling factor {ResnetGenerator.DOWNSAMPLE_FACTOR}"
            )


def load_generator(checkpoint_path: str | Path) -> ResnetGenerator:
    bundle = load_checkpoint(checkpoint_path)
    return bundle.build_generator()


def _patch_to_tensor(patch: ImagePatch) -> torch.Tensor:
    arr = patch.to_normalized().pixels
    return torch.from_numpy(arr).permute(2, 0, 1)


def translate_patch(patch: ImagePatch, generator: ResnetGenerator) -> ImagePatch:
    """Translate one patch; output is uint8 via round((x + 1) * 127.5)."""
    generator.eval()
    with torch.no_grad():
        out = generator(_patch_to_tensor(patch).unsqueeze(0))
    pixels = normalized_to_uint8(out.squeeze(0).permute(1, 2, 0).numpy())
    return ImagePatch(patch_id=patch.patch_id, pixels=pixels, value_space="uint8")


def translate_patches(
    patches: Iterable[ImagePatch],
    generator: ResnetGenerator,
    batch_size: int = 8,
) -> Iterator[ImagePatch]:
    """Batched translation stream; batching never changes per-tile outputs."""
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")
    generator.eval()
    pending: list[ImagePatch] = []

    def _flush() -> Iterator[ImagePatch]:
        if not pending:
            return
        batch = torch.stack([_patch_to_tensor(p) for p in pending])
        with torch.no_grad():
            out = generator(batch)
        for src, translated in zip(pending, out):
            pixels = normalized_to_uint8(translated.permute(1, 2, 0).numpy())
            yield ImagePatch(patch_id=src.patch_id, pixels=pixels, value_space="uint8")
        pending.clear()

    for patch in patches:
        pending.append(patch)
        if len(pending) >= batch_size:
            yield from _flush()
    yield from _flush()


def translate_slide(
    slide: Slide,
    generator: ResnetGenerator,
    seg_params: SegmentationParams | None = None,
    patch_size: int = 512,
    magnification: float = 20.0,
    min_coverage: float = 0.5,
    batch_size: int = 8,
    background: tuple[int, int, int] = WHITE,
) -> tuple[np.ndarray, PatchManifest, dict]:
    """Segment, tile, translate, and stitch one slide.

    Returns the stitched raster at the extraction level, the manifest, and a
    timing/count summary. An empty-tissue slide yields a background-only
    raster with zero translated tiles.
    """
    t_start = time.perf_counter()
    mask = segment_tissue(slide, seg_params)
    manifest, stream = extract_patches(
        slide, mask, patch_size=patch_size, magnification=magnification, min_coverage=min_coverage
    )

    level = manifest.entries[0].level if manifest.entries else slide.record.level_for_magnification(magnification)
    level_ds = slide.record.downsample(level)
    size = slide.record.level_dimensions(level)

    t_translate = time.perf_counter()
    translated = list(translate_patches(stream, generator, batch_size=batch_size))
    translate_seconds = time.perf_counter() - t_translate

    raster = stitch(
        manifest, translated, background=background, size=size, level_downsample=level_ds
    )
    total_seconds = time.perf_counter() - t_start
    timing = {
        "slide_id": slide.record.slide_id,
        "n_tiles": len(manifest),
        "seconds_total": round(total_seconds, 4),
        "seconds_translate": round(translate_seconds, 4),
        "tiles_per_second": round(len(manifest) / translate_seconds, 4) if translate_seconds > 0 and manifest.entries else 0.0,
    }
    return raster, manifest, timing


__all__ = [
    "TranslationJob",
    "load_generator",
    "translate_patch",
    "translate_patches",
    "translate_slide",
]
