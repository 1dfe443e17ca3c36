from .model import (
    ModelConfig,
    ModelParams,
    batch_greedy_decode,
    batch_nll,
    forward_nll,
    greedy_decode,
)
from .prompts import (
    ExplainGivenLabel,
    ExplainUnconditioned,
    Predict,
    PromptKind,
    conditioned_prompt,
    explain_prompt,
    format_prompt,
    predict_prompt,
)
from .vocab import Vocab, detokenize, tokenize

__all__ = [
    "ModelConfig",
    "ModelParams",
    "batch_greedy_decode",
    "batch_nll",
    "forward_nll",
    "greedy_decode",
    "ExplainGivenLabel",
    "ExplainUnconditioned",
    "Predict",
    "PromptKind",
    "conditioned_prompt",
    "explain_prompt",
    "format_prompt",
    "predict_prompt",
    "Vocab",
    "detokenize",
    "tokenize",
]
