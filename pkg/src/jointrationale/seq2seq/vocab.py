"""Closed word-level vocabulary."""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Iterable, Sequence

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
SPECIALS = (PAD, BOS, EOS, UNK)
PROMPT_WORDS = ("predict", "explain", "given", "label", ":", ",")

_WORD = re.compile(r"\w+|[^\w\s]")


def split_words(text: str) -> list[str]:
    """Split on whitespace, with every punctuation mark its own token."""
    return _WORD.findall(text)


class Vocab:
    def __init__(self, tokens: Sequence[str]):
        if tuple(tokens[: len(SPECIALS)]) != SPECIALS:
            raise ValueError("vocabulary must start with the reserved tokens " + ", ".join(SPECIALS))
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocabulary tokens must be unique")
        self.tokens = list(tokens)
        self.index = {tok: i for i, tok in enumerate(self.tokens)}

    @classmethod
    def build(cls, texts: Iterable[str]) -> "Vocab":
        """Reserved tokens, prompt words, then corpus words in sorted order."""
        seen = set(SPECIALS) | set(PROMPT_WORDS)
        words = set()
        for text in texts:
            words.update(split_words(text))
        return cls(list(SPECIALS) + list(PROMPT_WORDS) + sorted(words - seen))

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def tokenize(self, text: str) -> list[int]:
        return [self.index.get(w, UNK_ID) for w in split_words(text)]

    def detokenize(self, ids: Iterable[int]) -> str:
        out = []
        for i in ids:
            i = int(i)
            if i in (PAD_ID, BOS_ID, EOS_ID):
                continue
            out.append(self.tokens[i] if 0 <= i < len(self.tokens) else UNK)
        return " ".join(out)

    def to_dict(self) -> dict[str, int]:
        return dict(self.index)

    @classmethod
    def from_dict(cls, mapping: dict[str, int]) -> "Vocab":
        tokens = [None] * len(mapping)
        for tok, i in mapping.items():
            if not 0 <= i < len(tokens) or tokens[i] is not None:
                raise ValueError(f"vocabulary ids are not a bijection onto 0..{len(tokens) - 1}")
            tokens[i] = tok
        return cls(tokens)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def tokenize(vocab: Vocab, text: str) -> list[int]:
    return vocab.tokenize(text)


def detokenize(vocab: Vocab, ids: Iterable[int]) -> str:
    return vocab.detokenize(ids)
