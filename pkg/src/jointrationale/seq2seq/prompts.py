from __future__ import annotations

from dataclasses import dataclass

from ..tensorcore import ContractError


@dataclass(frozen=True)
class Predict:
    pass


@dataclass(frozen=True)
class ExplainUnconditioned:
    pass


@dataclass(frozen=True)
class ExplainGivenLabel:
    label: str


PromptKind = Predict | ExplainUnconditioned | ExplainGivenLabel


def format_prompt(kind: PromptKind, input_text: str) -> str:
    if not input_text:
        raise ContractError("prompt input text must be non-empty")
    if isinstance(kind, Predict):
        return f"predict: {input_text}"
    if isinstance(kind, ExplainUnconditioned):
        return f"explain: {input_text}"
    if isinstance(kind, ExplainGivenLabel):
        return f"given label: {kind.label}, explain: {input_text}"
    raise ContractError(f"unknown prompt kind {kind!r}")


def predict_prompt(x: str) -> str:
    return format_prompt(Predict(), x)


def explain_prompt(x: str) -> str:
    return format_prompt(ExplainUnconditioned(), x)


def conditioned_prompt(label: str, x: str) -> str:
    return format_prompt(ExplainGivenLabel(label), x)
