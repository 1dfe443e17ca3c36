from .example import Example
from .grammar import (
    GrammarConfig,
    GrammarError,
    LabelSpec,
    contains_phrase,
    default_grammar,
    generate_synthetic,
)
from .jsonl import JsonlError, load_jsonl, write_jsonl
from .split import largest_remainder, stratified_split

__all__ = [
    "Example",
    "GrammarConfig",
    "GrammarError",
    "LabelSpec",
    "contains_phrase",
    "default_grammar",
    "generate_synthetic",
    "JsonlError",
    "load_jsonl",
    "write_jsonl",
    "largest_remainder",
    "stratified_split",
]
