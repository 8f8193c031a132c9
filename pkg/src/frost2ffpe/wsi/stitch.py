"""Reassemble processed tiles into a whole-slide raster, bit-exactly."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from ..errors import GeometryError, ValueSpaceError
from .patches import ImagePatch, PatchManifest

WHITE = (255, 255, 255)


def stitch(
    manifest: PatchManifest,
    patches: Iterable[ImagePatch],
    background: tuple[int, int, int] = WHITE,
    size: tuple[int, int] | None = None,
    level_downsample: float = 1.0,
) -> np.ndarray:
    """Place each tile at its manifest rectangle on a background canvas.

    `size` is the output (width, height) at the extraction level; when omitted
    it is the tight extent of the manifest entries. Every manifest entry must
    be matched by exactly one streamed patch.
    """
    ps = manifest.patch_size
    by_id = {e.patch_id: e for e in manifest.entries}

    collected: dict[str, np.ndarray] = {}
    for patch in patches:
        if patch.patch_id not in by_id:
            raise GeometryError(f"patch {patch.patch_id!r} not present in manifest")
        if patch.patch_id in collected:
            raise GeometryError(f"duplicate patch_id in stream: {patch.patch_id!r}")
        if patch.value_space != "uint8":
            raise ValueSpaceError(
                f"stitch requires uint8 patches, got {patch.value_space!r} for {patch.patch_id!r}"
            )
        if patch.pixels.shape != (ps, ps, 3):
            raise GeometryError(
                f"patch {patch.patch_id!r} has shape {patch.pixels.shape}, expected {(ps, ps, 3)}"
            )
        collected[patch.patch_id] = patch.pixels

    missing = [e.patch_id for e in manifest.entries if e.patch_id not in collected]
    if missing:
        raise GeometryError(f"missing patches for manifest entries: {missing}")

    manifest.check_non_overlapping(level_downsample)

    if size is None:
        if manifest.entries:
            width = max(int(round(e.x / level_downsample)) + ps for e in manifest.entries)
            height = max(int(round(e.y / level_downsample)) + ps for e in manifest.entries)
        else:
            width = height = ps
        size = (width, height)

    width, height = size
    canvas = np.empty((height, width, 3), dtype=np.uint8)
    canvas[:, :] = np.asarray(background, dtype=np.uint8)

    for e in manifest.entries:
        lx = e.x / level_downsample
        ly = e.y / level_downsample
        ix, iy = int(round(lx)), int(round(ly))
        if abs(lx - ix) > 1e-9 or abs(ly - iy) > 1e-9:
            raise GeometryError(
                f"entry {e.patch_id!r} at ({e.x}, {e.y}) is not aligned to level downsample {level_downsample}"
            )
        if ix < 0 or iy < 0 or ix + ps > width or iy + ps > height:
            raise GeometryError(
                f"entry {e.patch_id!r} rectangle exceeds output raster {size}"
            )
        canvas[iy : iy + ps, ix : ix + ps] = collected[e.patch_id]

    return canvas


__all__ = ["stitch", "WHITE"]
