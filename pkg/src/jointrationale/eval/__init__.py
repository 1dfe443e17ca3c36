from .metrics import (
    INVALID,
    accuracy,
    bleu,
    is_consistent,
    macro_f1,
    map_predictions,
    normalize_label,
    rationale_label_consistency,
    unigram_overlap_f1,
)
from .report import MetricsReport, build_report

__all__ = [
    "INVALID",
    "accuracy",
    "bleu",
    "is_consistent",
    "macro_f1",
    "map_predictions",
    "normalize_label",
    "rationale_label_consistency",
    "unigram_overlap_f1",
    "MetricsReport",
    "build_report",
]
