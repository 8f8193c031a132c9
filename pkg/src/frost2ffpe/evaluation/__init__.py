"""Translation-quality metrics and reader-study statistics."""

from .features import (
    FeatureSetStats,
    InceptionFeatureExtractor,
    RandomProjectionExtractor,
    extract_features,
    stats_from_embeddings,
)
from .fid import fid
from .turing import ReaderResponse, TuringScores, load_responses, turing_scores
from .kappa import KappaResult, RatingMatrix, fleiss_kappa

__all__ = [
    "FeatureSetStats",
    "InceptionFeatureExtractor",
    "KappaResult",
    "RandomProjectionExtractor",
    "RatingMatrix",
    "ReaderResponse",
    "TuringScores",
    "extract_features",
    "fid",
    "fleiss_kappa",
    "load_responses",
    "stats_from_embeddings",
    "turing_scores",
]
