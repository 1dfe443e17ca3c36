from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .example import Example

REQUIRED_KEYS = ("input", "label", "rationale")


class JsonlError(ValueError):
    pass


def load_jsonl(path: str | Path) -> list[Example]:
    """Read ``{"input", "label", "rationale"[, "id"]}`` records, one per line.

    Blank lines are skipped. Missing ids become ``"<file stem>-<line>"``.
    """
    path = Path(path)
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            if not isinstance(record, dict):
                raise JsonlError(f"{path}:{lineno}: expected a JSON object")
            for key in REQUIRED_KEYS:
                if key not in record:
                    raise JsonlError(f"{path}:{lineno}: missing key {key!r}")
                if not isinstance(record[key], str):
                    raise JsonlError(f"{path}:{lineno}: key {key!r} must be a string")
            try:
                out.append(
                    Example(
                        id=str(record.get("id", f"{path.stem}-{lineno}")),
                        input_text=record["input"],
                        gold_label=record["label"],
                        gold_rationale=record["rationale"],
                    )
                )
            except ValueError as exc:
                raise JsonlError(f"{path}:{lineno}: {exc}") from None
    return out


def write_jsonl(path: str | Path, examples: Iterable[Example]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_json(), ensure_ascii=False) + "\n")
