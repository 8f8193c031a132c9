"""Feature extraction and Gaussian statistics of patch sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import cv2
import numpy as np

from ..errors import EvaluationError
from ..wsi.patches import ImagePatch


@dataclass
class FeatureSetStats:
    """Sample mean and covariance of one patch set's embeddings."""

    mean: np.ndarray
    cov: np.ndarray
    count: int
    extractor_id: str

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.cov = np.asarray(self.cov, dtype=np.float64)
        d = self.mean.shape[0]
        if self.cov.shape != (d, d):
            raise EvaluationError(f"covariance shape {self.cov.shape} does not match mean dim {d}")
        if self.count < 2:
            raise EvaluationError(f"need at least 2 samples, got {self.count}")
        asym = float(np.abs(self.cov - self.cov.T).max()) if d else 0.0
        if asym > 1e-8:
            raise EvaluationError(f"covariance not symmetric (max asymmetry {asym:.3g})")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


class RandomProjectionExtractor:
    """Deterministic seeded linear embedding; no pretrained weights needed.

    Patches are resized to a fixed grid, scaled to [0, 1], centered, and
    projected with a fixed Gaussian matrix.
    """

    def __init__(self, dim: int = 64, seed: int = 0, input_size: int = 32) -> None:
        self.dim = dim
        self.input_size = input_size
        self.seed = seed
        rng = np.random.default_rng(seed)
        d_in = input_size * input_size * 3
        self._projection = rng.standard_normal((d_in, dim)) / np.sqrt(d_in)
        self.extractor_id = f"randproj-d{dim}-r{input_size}-s{seed}"

    def __call__(self, batch: np.ndarray) -> np.ndarray:
        if batch.ndim != 4 or batch.shape[3] != 3:
            raise EvaluationError(f"expected N x H x W x 3 batch, got {batch.shape}")
        out = np.empty((batch.shape[0], self.dim), dtype=np.float64)
        for i, img in enumerate(batch):
            small = cv2.resize(
                img, (self.input_size, self.input_size), interpolation=cv2.INTER_AREA
            )
            flat = small.astype(np.float64).reshape(-1) / 255.0 - 0.5
            out[i] = flat @ self._projection
        return out


class InceptionFeatureExtractor:
    """Conventional 2048-d pretrained image-classification embedding.

    Requires torchvision and downloadable weights; raises a clear error when
    they are unavailable so offline runs can fall back to the seeded
    random-projection extractor.
    """

    extractor_id = "inception-v3-pool-2048"

    def __init__(self) -> None:
        try:
            import torch
            import torchvision
        except ImportError as exc:
            raise EvaluationError(f"torchvision is required for the inception extractor: {exc}") from exc
        try:
            weights = torchvision.models.Inception_V3_Weights.IMAGENET1K_V1
            model = torchvision.models.inception_v3(weights=weights)
        except Exception as exc:
            raise EvaluationError(
                "pretrained inception weights unavailable (offline?); "
                f"use the random-projection extractor instead: {exc}"
            ) from exc
        model.fc = torch.nn.Identity()
        model.eval()
        self._torch = torch
        self._model = model

    def __call__(self, batch: np.ndarray) -> np.ndarray:
        torch = self._torch
        x = torch.from_numpy(batch.astype(np.float32) / 255.0).permute(0, 3, 1, 2)
        x = torch.nn.functional.interpolate(x, size=(299, 299), mode="bilinear", align_corners=False)
        mean = torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1)
        std = torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1)
        x = (x - mean) / std
        with torch.no_grad():
            feats = self._model(x)
        return feats.numpy().astype(np.float64)


def _patch_pixels(patch) -> np.ndarray:
    if isinstance(patch, ImagePatch):
        return patch.to_uint8().pixels
    arr = np.asarray(patch)
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] != 3:
        raise EvaluationError(f"expected uint8 HxWx3 patch, got {arr.dtype} {arr.shape}")
    return arr


def stats_from_embeddings(embeddings: np.ndarray, extractor_id: str) -> FeatureSetStats:
    """Gaussian stats directly from an (n, d) embedding matrix (ddof=1)."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] < 2:
        raise EvaluationError(f"need an (n >= 2, d) embedding matrix, got {embeddings.shape}")
    mean = embeddings.mean(axis=0)
    cov = np.cov(embeddings, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    return FeatureSetStats(mean=mean, cov=cov, count=embeddings.shape[0], extractor_id=extractor_id)


def extract_features(
    patches: Iterable,
    extractor,
    batch_size: int = 64,
) -> FeatureSetStats:
    """Embed every patch and summarize the set as mean + sample covariance."""
    arrays: Sequence[np.ndarray] = [_patch_pixels(p) for p in patches]
    if len(arrays) < 2:
        raise EvaluationError(f"need at least 2 patches, got {len(arrays)}")
    chunks = []
    for start in range(0, len(arrays), batch_size):
        batch = np.stack(arrays[start : start + batch_size])
        chunks.append(np.asarray(extractor(batch), dtype=np.float64))
    embeddings = np.concatenate(chunks, axis=0)
    return stats_from_embeddings(embeddings, getattr(extractor, "extractor_id", repr(extractor)))


__all__ = [
    "FeatureSetStats",
    "InceptionFeatureExtractor",
    "RandomProjectionExtractor",
    "extract_features",
    "stats_from_embeddings",
]
