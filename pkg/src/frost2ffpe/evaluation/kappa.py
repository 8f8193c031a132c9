"""Fleiss' kappa: chance-corrected agreement for a fixed rater count."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..errors import EvaluationError
from .turing import ReaderResponse


@dataclass
class RatingMatrix:
    """Items x categories counts with a constant number of raters per item."""

    counts: np.ndarray
    categories: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.size == 0:
            raise EvaluationError(f"counts must be a non-empty 2-D matrix, got shape {counts.shape}")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.round(counts)):
                raise EvaluationError("counts must be integers")
            counts = counts.astype(np.int64)
        if (counts < 0).any():
            raise EvaluationError("counts must be non-negative")
        row_sums = counts.sum(axis=1)
        if not (row_sums == row_sums[0]).all():
            raise EvaluationError(f"every item must have the same rater count, got row sums {row_sums}")
        if row_sums[0] < 2:
            raise EvaluationError(f"need at least 2 raters per item, got {row_sums[0]}")
        self.counts = counts
        if self.categories is not None and len(self.categories) != counts.shape[1]:
            raise EvaluationError("category labels do not match the matrix width")

    @property
    def n_items(self) -> int:
        return self.counts.shape[0]

    @property
    def n_categories(self) -> int:
        return self.counts.shape[1]

    @property
    def raters_per_item(self) -> int:
        return int(self.counts[0].sum())

    @classmethod
    def from_responses(
        cls,
        responses: Iterable[ReaderResponse],
        categories: Sequence[str] = ("real_ffpe", "ai_ffpe"),
    ) -> "RatingMatrix":
        """Aggregate judged_source counts per item; items must be fully rated."""
        categories = tuple(categories)
        index = {c: i for i, c in enumerate(categories)}
        per_item: dict[str, np.ndarray] = {}
        for r in responses:
            if r.judged_source not in index:
                raise EvaluationError(f"judged source {r.judged_source!r} not in categories {categories}")
            row = per_item.setdefault(r.item_id, np.zeros(len(categories), dtype=np.int64))
            row[index[r.judged_source]] += 1
        if not per_item:
            raise EvaluationError("no responses")
        counts = np.stack([per_item[k] for k in sorted(per_item)])
        return cls(counts=counts, categories=categories)


@dataclass
class KappaResult:
    kappa: float | None
    undefined: bool
    observed_agreement: float
    expected_agreement: float

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "undefined": self.undefined,
            "observed_agreement": self.observed_agreement,
            "expected_agreement": self.expected_agreement,
        }


def fleiss_kappa(matrix: RatingMatrix) -> KappaResult:
    """kappa = (P_bar - P_e) / (1 - P_e) from category marginals.

    When every rating falls in a single category the chance agreement is 1
    and kappa is undefined; a flagged result is returned instead of a number.
    """
    counts = matrix.counts.astype(np.float64)
    n_items, _ = counts.shape
    r = float(matrix.raters_per_item)
    total = counts.sum()

    p_cat = counts.sum(axis=0) / total
    p_items = ((counts * counts).sum(axis=1) - r) / (r * (r - 1.0))
    p_bar = float(p_items.mean())
    p_e = float((p_cat * p_cat).sum())

    if abs(1.0 - p_e) < 1e-12:
        return KappaResult(kappa=None, undefined=True, observed_agreement=p_bar, expected_agreement=p_e)
    kappa = (p_bar - p_e) / (1.0 - p_e)
    return KappaResult(kappa=float(kappa), undefined=False, observed_agreement=p_bar, expected_agreement=p_e)


__all__ = ["KappaResult", "RatingMatrix", "fleiss_kappa"]
