from __future__ import annotations

import math
import warnings
from typing import Sequence

from ..tensorcore import Rng
from .example import Example


def largest_remainder(total: int, fractions: Sequence[float]) -> list[int]:
    """Integer counts summing to ``total``, each within one of ``total * fraction``.

    Leftover units go to the largest fractional parts; ties favour earlier parts.
    """
    quotas = [total * f for f in fractions]
    counts = [math.floor(q) for q in quotas]
    leftover = total - sum(counts)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def stratified_split(
    examples: Sequence[Example], fractions: Sequence[float] = (0.8, 0.1, 0.1), seed: int = 0
) -> tuple[list[Example], list[Example], list[Example]]:
    """Label-stratified (train, val, test) partition.

    Within each label the examples are shuffled with a seeded generator and cut
    by largest-remainder counts. Each part keeps the input order.
    """
    if len(fractions) != 3:
        raise ValueError(f"need three fractions (train, val, test), got {len(fractions)}")
    if any(f < 0 for f in fractions) or not any(f > 0 for f in fractions):
        raise ValueError(f"fractions must be non-negative with at least one positive: {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)!r}")

    by_label: dict[str, list[int]] = {}
    for i, ex in enumerate(examples):
        by_label.setdefault(ex.gold_label, []).append(i)

    rng = Rng(seed)
    positive_parts = sum(1 for f in fractions if f > 0)
    assignment = [0] * len(examples)
    for label in sorted(by_label):
        idx = by_label[label]
        if len(idx) < positive_parts:
            warnings.warn(
                f"label {label!r} has {len(idx)} examples for {positive_parts} split parts; "
                "some parts get none",
                stacklevel=2,
            )
        rng.shuffle(idx)
        counts = largest_remainder(len(idx), fractions)
        start = 0
        for part, count in enumerate(counts):
            for i in idx[start : start + count]:
                assignment[i] = part
            start += count

    parts: tuple[list[Example], list[Example], list[Example]] = ([], [], [])
    for i, ex in enumerate(examples):
        parts[assignment[i]].append(ex)
    return parts
