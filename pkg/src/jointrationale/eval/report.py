from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from ..datasets.grammar import GrammarConfig
from .metrics import (
    INVALID,
    accuracy,
    bleu,
    macro_f1,
    map_predictions,
    rationale_label_consistency,
    unigram_overlap_f1,
)


@dataclass
class MetricsReport:
    accuracy: float
    macro_f1: float
    per_class: dict[str, dict[str, float]]
    bleu: float | None = None
    unigram_overlap_f1: float | None = None
    consistency: float | None = None
    counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(**data)


def build_report(
    pred_labels: Sequence[str],
    gold_labels: Sequence[str],
    label_set: Sequence[str],
    rationales: Sequence[str] | None = None,
    gold_rationales: Sequence[str] | None = None,
    markers: GrammarConfig | Mapping[str, str] | None = None,
) -> MetricsReport:
    """Full metric suite; rationale metrics only when rationales are given.

    Consistency is measured against the predicted labels, i.e. the labels the
    rationales were conditioned on.
    """
    macro, table = macro_f1(pred_labels, gold_labels, label_set)
    mapped = map_predictions(pred_labels, label_set)
    report = MetricsReport(
        accuracy=accuracy(pred_labels, gold_labels, label_set),
        macro_f1=macro,
        per_class=table,
        counts={"examples": len(gold_labels), "invalid_predictions": mapped.count(INVALID)},
    )
    if rationales is not None and gold_rationales is not None:
        report.bleu = bleu(rationales, gold_rationales)
        overlaps = [
            unigram_overlap_f1(r, g) if r.strip() else 0.0 for r, g in zip(rationales, gold_rationales)
        ]
        report.unigram_overlap_f1 = sum(overlaps) / len(overlaps)
        if markers is not None:
            report.consistency = rationale_label_consistency(rationales, pred_labels, markers, strict=False)
    return report
