"""Frechet distance between Gaussian feature statistics."""

from __future__ import annotations

import numpy as np

from ..errors import EvaluationError
from .features import FeatureSetStats


def _psd_sqrt(matrix: np.ndarray, clamp: float = 1e-8) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition, tiny negatives clamped."""
    sym = 0.5 * (matrix + matrix.T)
    vals, vecs = np.linalg.eigh(sym)
    vals = np.where(vals < clamp, np.maximum(vals, 0.0), vals)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _check_psd(name: str, cov: np.ndarray, tol: float) -> None:
    min_eig = float(np.linalg.eigvalsh(0.5 * (cov + cov.T)).min())
    if min_eig < -tol:
        raise EvaluationError(f"{name} covariance is not PSD (min eigenvalue {min_eig:.3g})")


def fid(a: FeatureSetStats, b: FeatureSetStats, eps: float = 1e-6, psd_tol: float = 1e-6) -> float:
    """||mu_a - mu_b||^2 + Tr(C_a + C_b - 2 (C_a C_b)^{1/2}).

    The cross term is evaluated through the symmetrized product
    sqrt(C_a) C_b sqrt(C_a), which shares its eigenvalues with C_a C_b, so
    only symmetric eigendecompositions are needed. Tiny negative residue is
    clamped to zero.
    """
    if a.extractor_id != b.extractor_id:
        raise EvaluationError(
            f"feature extractors differ: {a.extractor_id!r} vs {b.extractor_id!r}"
        )
    if a.dim != b.dim:
        raise EvaluationError(f"feature dimensions differ: {a.dim} vs {b.dim}")
    _check_psd("first", a.cov, psd_tol)
    _check_psd("second", b.cov, psd_tol)

    diff = a.mean - b.mean
    sqrt_a = _psd_sqrt(a.cov)
    inner = sqrt_a @ b.cov @ sqrt_a
    inner_vals = np.linalg.eigvalsh(0.5 * (inner + inner.T))
    tr_cross = float(np.sqrt(np.clip(inner_vals, 0.0, None)).sum())

    value = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * tr_cross)
    if value < -eps:
        raise EvaluationError(f"FID evaluated to {value:.3g}, beyond the numerical tolerance {-eps:.3g}")
    return max(value, 0.0)


__all__ = ["fid"]
