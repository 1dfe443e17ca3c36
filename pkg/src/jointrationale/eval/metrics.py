"""Label and rationale metrics. All functions are pure."""

from __future__ import annotations

import math
from collections import Counter
from typing import Mapping, Sequence

from ..datasets.grammar import GrammarConfig, contains_phrase
from ..seq2seq.vocab import split_words
from ..tensorcore import ContractError

INVALID = "<invalid>"


def normalize_label(text: str) -> str:
    return " ".join(text.lower().split())


def map_predictions(preds: Sequence[str], known: Sequence[str]) -> list[str]:
    """Normalise predictions; anything outside ``known`` becomes INVALID."""
    known_set = {normalize_label(k) for k in known}
    out = []
    for p in preds:
        p = normalize_label(p)
        out.append(p if p in known_set else INVALID)
    return out


def _check_pair(preds: Sequence, golds: Sequence) -> None:
    if len(preds) != len(golds):
        raise ContractError(f"{len(preds)} predictions vs {len(golds)} gold labels")
    if not golds:
        raise ContractError("cannot score an empty set of predictions")


def accuracy(preds: Sequence[str], golds: Sequence[str], label_set: Sequence[str] | None = None) -> float:
    _check_pair(preds, golds)
    golds_n = [normalize_label(g) for g in golds]
    mapped = map_predictions(preds, label_set if label_set is not None else golds_n)
    return sum(p == g for p, g in zip(mapped, golds_n)) / len(golds_n)


def macro_f1(
    preds: Sequence[str], golds: Sequence[str], label_set: Sequence[str] | None = None
) -> tuple[float, dict[str, dict[str, float]]]:
    """Macro-averaged F1 over classes present in golds or (mapped) predictions.

    Zero denominators give 0. Returns ``(macro, per_class)`` where
    ``per_class[c]`` holds precision, recall, f1 and support.
    """
    _check_pair(preds, golds)
    golds_n = [normalize_label(g) for g in golds]
    mapped = map_predictions(preds, label_set if label_set is not None else golds_n)
    classes = sorted(set(golds_n) | set(mapped))
    tp: Counter = Counter()
    fp: Counter = Counter()
    fn: Counter = Counter()
    for p, g in zip(mapped, golds_n):
        if p == g:
            tp[g] += 1
        else:
            fp[p] += 1
            fn[g] += 1
    table = {}
    for c in classes:
        prec = tp[c] / (tp[c] + fp[c]) if tp[c] + fp[c] else 0.0
        rec = tp[c] / (tp[c] + fn[c]) if tp[c] + fn[c] else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        table[c] = {"precision": prec, "recall": rec, "f1": f1, "support": tp[c] + fn[c]}
    macro = sum(row["f1"] for row in table.values()) / len(table)
    return macro, table


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _bleu_tokens(text: str) -> list[str]:
    return split_words(text.lower())


def bleu(candidates: Sequence[str], references: Sequence[str], max_order: int = 4) -> float:
    """Corpus BLEU-4 with uniform weights and a single reference per candidate.

    Orders with zero clipped matches use ``1 / (candidate n-grams + 1)``.
    Brevity penalty ``exp(1 - r/c)`` applies when the corpus candidate length
    ``c`` is below the reference length ``r``.
    """
    if len(candidates) != len(references):
        raise ContractError(f"{len(candidates)} candidates vs {len(references)} references")
    if not candidates:
        raise ContractError("BLEU needs a non-empty corpus")
    matches = [0] * max_order
    totals = [0] * max_order
    cand_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        c_tok, r_tok = _bleu_tokens(cand), _bleu_tokens(ref)
        cand_len += len(c_tok)
        ref_len += len(r_tok)
        for n in range(1, max_order + 1):
            c_counts = _ngrams(c_tok, n)
            r_counts = _ngrams(r_tok, n)
            matches[n - 1] += sum(min(k, r_counts[g]) for g, k in c_counts.items())
            totals[n - 1] += max(len(c_tok) - n + 1, 0)
    if cand_len == 0:
        return 0.0
    log_p = 0.0
    for m, t in zip(matches, totals):
        p = m / t if m > 0 else 1.0 / (t + 1)
        log_p += math.log(p) / max_order
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    return min(1.0, bp * math.exp(log_p))


def unigram_overlap_f1(candidate: str, reference: str) -> float:
    c = Counter(split_words(candidate.lower()))
    r = Counter(split_words(reference.lower()))
    if not c or not r:
        raise ContractError("unigram overlap needs two non-empty texts")
    overlap = sum((c & r).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(c.values())
    recall = overlap / sum(r.values())
    return 2 * precision * recall / (precision + recall)


def _marker_table(markers: GrammarConfig | Mapping[str, str]) -> dict[str, str]:
    table = markers.markers if isinstance(markers, GrammarConfig) else markers
    return {normalize_label(k): v for k, v in table.items()}


def is_consistent(rationale: str, label: str, markers: Mapping[str, str]) -> bool:
    """Rationale names ``label``'s marker and no other label's marker."""
    own = markers[normalize_label(label)]
    if not contains_phrase(rationale, own):
        return False
    return not any(
        contains_phrase(rationale, m) for k, m in markers.items() if k != normalize_label(label)
    )


def rationale_label_consistency(
    rationales: Sequence[str],
    conditioning_labels: Sequence[str],
    grammar: GrammarConfig | Mapping[str, str],
    strict: bool = True,
) -> float:
    """Fraction of rationales consistent with their conditioning label.

    With ``strict`` a label that has no marker is an error; otherwise such a
    rationale simply counts as inconsistent.
    """
    if len(rationales) != len(conditioning_labels):
        raise ContractError(f"{len(rationales)} rationales vs {len(conditioning_labels)} labels")
    if not rationales:
        raise ContractError("consistency needs at least one rationale")
    markers = _marker_table(grammar)
    hits = 0
    for rationale, label in zip(rationales, conditioning_labels):
        if normalize_label(label) not in markers:
            if strict:
                raise ContractError(f"label {label!r} has no marker phrase")
            continue
        hits += is_consistent(rationale, label, markers)
    return hits / len(rationales)
