from __future__ import annotations

from typing import Sequence

from ..seq2seq import ModelParams, Vocab, batch_greedy_decode, conditioned_prompt, explain_prompt, predict_prompt
from ..tensorcore import ContractError
from .checkpoint import Checkpoint


class Predictor:
    """Label first, then a rationale conditioned on that predicted label.

    ``explain`` follows the training variant: ``"conditioned"`` builds the
    rationale prompt from the predicted label, ``"unconditioned"`` uses the
    bare explain prompt, ``"none"`` returns an empty rationale.
    """

    def __init__(
        self,
        params: ModelParams,
        vocab: Vocab,
        explain: str = "conditioned",
        label_max_len: int = 8,
        rationale_max_len: int = 40,
        batch_size: int = 128,
    ):
        if explain not in ("conditioned", "unconditioned", "none"):
            raise ContractError(f"unknown explain mode {explain!r}")
        self.params = params
        self.vocab = vocab
        self.explain = explain
        self.label_max_len = label_max_len
        self.rationale_max_len = rationale_max_len
        self.batch_size = batch_size

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, **overrides) -> "Predictor":
        meta = ckpt.meta
        kwargs = {
            "explain": meta.get("explain", "conditioned"),
            "label_max_len": meta.get("label_max_len", 8),
            "rationale_max_len": meta.get("rationale_max_len", 40),
        }
        kwargs.update(overrides)
        return cls(ckpt.to_params(), ckpt.vocab, **kwargs)

    def _decode(self, texts: Sequence[str], max_len: int) -> list[str]:
        out = []
        for start in range(0, len(texts), self.batch_size):
            chunk = [self.vocab.tokenize(t) for t in texts[start : start + self.batch_size]]
            out.extend(self.vocab.detokenize(ids) for ids in batch_greedy_decode(self.params, chunk, max_len))
        return out

    def predict_labels(self, inputs: Sequence[str]) -> list[str]:
        return self._decode([predict_prompt(x) for x in inputs], self.label_max_len)

    def rationale_prompts(self, inputs: Sequence[str], labels: Sequence[str]) -> list[str]:
        if self.explain == "conditioned":
            return [conditioned_prompt(y, x) for y, x in zip(labels, inputs)]
        return [explain_prompt(x) for x in inputs]

    def infer_batch(self, inputs: Sequence[str]) -> tuple[list[str], list[str]]:
        for x in inputs:
            if not x.strip():
                raise ContractError("input text must be non-empty")
        labels = self.predict_labels(inputs)
        if self.explain == "none":
            return labels, [""] * len(labels)
        rationales = self._decode(self.rationale_prompts(inputs, labels), self.rationale_max_len)
        return labels, rationales

    def infer(self, input_text: str) -> tuple[str, str]:
        labels, rationales = self.infer_batch([input_text])
        return labels[0], rationales[0]


def infer(ckpt: Checkpoint, input_text: str) -> tuple[str, str]:
    return Predictor.from_checkpoint(ckpt).infer(input_text)
