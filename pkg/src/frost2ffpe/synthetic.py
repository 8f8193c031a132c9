"""Synthetic desk-scale data: clean tissue-like shapes and frozen-style corruption.

The unpaired toy task pairs a source domain of corrupted shape images
(elliptical blank holes, Gaussian blur, compressed contrast) with a target
domain of clean shape images drawn independently.
"""

from __future__ import annotations

import cv2
import numpy as np

# H&E-ish palette: pale background, pink/purple structures
BACKGROUND = (244, 230, 238)
STRUCTURE_COLORS = [
    (170, 90, 160),
    (200, 120, 180),
    (120, 60, 130),
    (220, 150, 190),
    (150, 100, 170),
]


def clean_shape_image(rng: np.random.Generator, size: int = 64) -> np.ndarray:
    """One clean image: random ellipses and rectangles on a pale background."""
    img = np.empty((size, size, 3), dtype=np.uint8)
    img[:, :] = BACKGROUND
    n_shapes = int(rng.integers(3, 7))
    for _ in range(n_shapes):
        color = STRUCTURE_COLORS[int(rng.integers(len(STRUCTURE_COLORS)))]
        jitter = rng.integers(-15, 16, size=3)
        color = tuple(int(np.clip(c + j, 0, 255)) for c, j in zip(color, jitter))
        cx, cy = int(rng.integers(0, size)), int(rng.integers(0, size))
        if rng.random() < 0.6:
            axes = (int(rng.integers(size // 12, size // 3)), int(rng.integers(size // 12, size // 3)))
            angle = float(rng.uniform(0, 180))
            cv2.ellipse(img, (cx, cy), axes, angle, 0, 360, color, thickness=-1)
        else:
            w, h = int(rng.integers(size // 10, size // 3)), int(rng.integers(size // 10, size // 3))
            cv2.rectangle(img, (cx - w // 2, cy - h // 2), (cx + w // 2, cy + h // 2), color, thickness=-1)
    return img


def freeze_artefacts(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Corrupt a clean image with synthetic freezing damage.

    Random elliptical near-white holes, then Gaussian blur, then contrast
    compression toward the image mean.
    """
    out = img.copy()
    size = img.shape[0]
    n_holes = int(rng.integers(1, 5))
    for _ in range(n_holes):
        cx, cy = int(rng.integers(0, size)), int(rng.integers(0, size))
        axes = (int(rng.integers(size // 16, size // 5)), int(rng.integers(size // 16, size // 5)))
        angle = float(rng.uniform(0, 180))
        hole_color = tuple(int(v) for v in rng.integers(235, 256, size=3))
        cv2.ellipse(out, (cx, cy), axes, angle, 0, 360, hole_color, thickness=-1)

    sigma = float(rng.uniform(0.8, 1.6))
    out = cv2.GaussianBlur(out, (0, 0), sigmaX=sigma, sigmaY=sigma)

    factor = float(rng.uniform(0.45, 0.7))
    mean = out.mean(axis=(0, 1), keepdims=True)
    out = np.clip(mean + factor * (out.astype(np.float64) - mean), 0, 255).astype(np.uint8)
    return out


def make_unpaired_sets(
    n_per_domain: int,
    size: int = 64,
    seed: int = 0,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Independent source (corrupted) and target (clean) sets, no pairing."""
    rng_source = np.random.default_rng([seed, 0])
    rng_target = np.random.default_rng([seed, 1])
    source = [
        freeze_artefacts(clean_shape_image(rng_source, size), rng_source)
        for _ in range(n_per_domain)
    ]
    target = [clean_shape_image(rng_target, size) for _ in range(n_per_domain)]
    return source, target


def make_synthetic_slide(
    rng: np.random.Generator,
    width: int = 1024,
    height: int = 768,
    corrupted: bool = False,
) -> np.ndarray:
    """A small slide-like raster: tissue blobs on a white glass background."""
    img = np.full((height, width, 3), 255, dtype=np.uint8)
    n_blobs = int(rng.integers(1, 4))
    for _ in range(n_blobs):
        cx, cy = int(rng.integers(width // 4, 3 * width // 4)), int(rng.integers(height // 4, 3 * height // 4))
        axes = (int(rng.integers(width // 8, width // 4)), int(rng.integers(height // 8, height // 4)))
        angle = float(rng.uniform(0, 180))
        cv2.ellipse(img, (cx, cy), axes, angle, 0, 360, (222, 165, 200), thickness=-1)
        for _ in range(int(rng.integers(20, 60))):
            px = int(np.clip(cx + rng.normal(0, axes[0] / 2), 0, width - 1))
            py = int(np.clip(cy + rng.normal(0, axes[1] / 2), 0, height - 1))
            radius = int(rng.integers(2, 7))
            color = STRUCTURE_COLORS[int(rng.integers(len(STRUCTURE_COLORS)))]
            cv2.circle(img, (px, py), radius, color, thickness=-1)
    if corrupted:
        img = freeze_artefacts(img, rng)
    return img


__all__ = ["clean_shape_image", "freeze_artefacts", "make_synthetic_slide", "make_unpaired_sets"]
