from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Example:
    id: str
    input_text: str
    gold_label: str
    gold_rationale: str

    def __post_init__(self):
        if not self.input_text.strip():
            raise ValueError(f"example {self.id!r}: input_text is empty")
        if not self.gold_rationale.strip():
            raise ValueError(f"example {self.id!r}: gold_rationale is empty")

    def to_json(self) -> dict:
        """JSONL record using the on-disk key names."""
        return {"id": self.id, "input": self.input_text, "label": self.gold_label, "rationale": self.gold_rationale}

    def to_dict(self) -> dict:
        return asdict(self)
