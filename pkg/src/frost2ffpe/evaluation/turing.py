"""Visual Turing test statistics from reader responses."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from ..errors import EvaluationError

SOURCES = ("real_ffpe", "ai_ffpe")


@dataclass(frozen=True)
class ReaderResponse:
    """One rater's judgment of one displayed patch."""

    rater_id: str
    item_id: str
    true_source: str
    judged_source: str
    timestamp: str = ""

    def __post_init__(self) -> None:
        if self.true_source not in SOURCES or self.judged_source not in SOURCES:
            raise EvaluationError(
                f"sources must be one of {SOURCES}, got true={self.true_source!r} "
                f"judged={self.judged_source!r}"
            )

    def to_dict(self) -> dict:
        return {
            "rater_id": self.rater_id,
            "item_id": self.item_id,
            "true_source": self.true_source,
            "judged_source": self.judged_source,
            "timestamp_iso8601": self.timestamp,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ReaderResponse":
        return cls(
            rater_id=doc["rater_id"],
            item_id=doc["item_id"],
            true_source=doc["true_source"],
            judged_source=doc["judged_source"],
            timestamp=doc.get("timestamp_iso8601", doc.get("timestamp", "")),
        )


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class TuringScores:
    """Per-class precision/recall/F1 plus the judged-real headline rates."""

    per_class: dict[str, ClassScores]
    confusion: dict[str, dict[str, int]]  # confusion[true][judged]
    fraction_judged_real: dict[str, float]
    n_responses: int
    n_raters: int

    def to_dict(self) -> dict:
        return {
            "n_responses": self.n_responses,
            "n_raters": self.n_raters,
            "confusion": self.confusion,
            "per_class": {
                c: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                }
                for c, s in self.per_class.items()
            },
            "fraction_judged_real": self.fraction_judged_real,
        }


def turing_scores(responses: Iterable[ReaderResponse]) -> TuringScores:
    """Score judged_source against true_source over all responses.

    Precision/recall/F1 are computed per class with the usual zero-division
    convention (0 when undefined); the judged-real fraction per true class is
    the survey's headline statistic.
    """
    responses = list(responses)
    if not responses:
        raise EvaluationError("no responses")
    seen: set[tuple[str, str]] = set()
    for r in responses:
        key = (r.rater_id, r.item_id)
        if key in seen:
            raise EvaluationError(f"duplicate response for rater={r.rater_id!r} item={r.item_id!r}")
        seen.add(key)

    confusion = {t: {j: 0 for j in SOURCES} for t in SOURCES}
    for r in responses:
        confusion[r.true_source][r.judged_source] += 1

    per_class: dict[str, ClassScores] = {}
    for cls in SOURCES:
        tp = confusion[cls][cls]
        judged_cls = sum(confusion[t][cls] for t in SOURCES)
        true_cls = sum(confusion[cls].values())
        precision = tp / judged_cls if judged_cls else 0.0
        recall = tp / true_cls if true_cls else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = ClassScores(precision=precision, recall=recall, f1=f1, support=true_cls)

    fraction_judged_real = {}
    for cls in SOURCES:
        total = sum(confusion[cls].values())
        fraction_judged_real[cls] = confusion[cls]["real_ffpe"] / total if total else 0.0

    return TuringScores(
        per_class=per_class,
        confusion=confusion,
        fraction_judged_real=fraction_judged_real,
        n_responses=len(responses),
        n_raters=len({r.rater_id for r in responses}),
    )


def load_responses(path: str | Path) -> list[ReaderResponse]:
    """Read the survey export: a JSON array of response objects."""
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, list):
        raise EvaluationError(f"expected a JSON array of responses in {path}")
    return [ReaderResponse.from_dict(d) for d in doc]


__all__ = ["ClassScores", "ReaderResponse", "SOURCES", "TuringScores", "load_responses", "turing_scores"]
