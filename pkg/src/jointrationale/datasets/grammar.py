"""Synthetic triage-style corpus.

Each note mentions exactly one decisive symptom; the label is a fixed function
of that symptom, and the rationale names the symptom together with the label's
marker phrase, so label/rationale agreement can be checked by string search.

Config file keys (JSON)::

    {
      "seed": 0,
      "noise_rate": 0.15,            # chance of a filler word after each note token
      "imbalance": 1.0,              # label i is drawn with weight imbalance**i
      "note_templates": ["{age} year old caller reports {symptom} for {duration}", ...],
      "ages": [...], "durations": [...], "noise_words": [...],
      "labels": [
        {"name": "home care", "marker": "can be managed safely at home",
         "symptoms": ["runny nose", ...],
         "rationale_templates": ["{symptom} {marker}", ...]},
        ...
      ]
    }

Every key is optional; missing ones fall back to :func:`default_grammar`.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..tensorcore import Rng
from .example import Example


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class LabelSpec:
    name: str
    marker: str
    symptoms: tuple[str, ...]
    rationale_templates: tuple[str, ...]


_DEFAULT_LABELS = (
    LabelSpec(
        "home care",
        "can be managed safely at home",
        ("runny nose", "mild sore throat", "small scrape", "itchy eyes"),
        ("{symptom} is mild so it {marker}", "with {symptom} only this {marker}"),
    ),
    LabelSpec(
        "call pharmacist",
        "needs advice about medication",
        ("missed pill dose", "refill question", "pill interaction question"),
        ("{symptom} is a question that {marker}", "a {symptom} means the caller {marker}"),
    ),
    LabelSpec(
        "see pcp within 2 weeks",
        "needs a routine follow up",
        ("persistent fatigue", "recurring headache", "mild joint pain"),
        ("{symptom} is stable but {marker}", "ongoing {symptom} so the patient {marker}"),
    ),
    LabelSpec(
        "see pcp within 24 hours",
        "needs a prompt clinic visit",
        ("ear pain with fever", "painful urination", "spreading skin redness"),
        ("{symptom} is worsening and {marker}", "because of {symptom} the patient {marker}"),
    ),
    LabelSpec(
        "go to ed now",
        "needs emergency department care",
        ("deep bleeding cut", "stiff neck with fever", "severe belly pain"),
        ("{symptom} is serious and {marker}", "because of {symptom} the patient {marker}"),
    ),
    LabelSpec(
        "call ems now",
        "needs an ambulance immediately",
        ("chest pain with sweating", "slurred speech", "blue lips"),
        ("{symptom} is life threatening and {marker}", "with {symptom} the patient {marker}"),
    ),
)


@dataclass(frozen=True)
class GrammarConfig:
    labels: tuple[LabelSpec, ...] = _DEFAULT_LABELS
    note_templates: tuple[str, ...] = (
        "{age} year old caller reports {symptom} for {duration}",
        "caller says patient age {age} has {symptom} since {duration}",
        "patient has {symptom} for {duration} age {age}",
    )
    ages: tuple[str, ...] = ("two", "seven", "nineteen", "thirty", "forty", "sixty", "eighty")
    durations: tuple[str, ...] = ("one hour", "two hours", "one day", "three days", "a week")
    noise_words: tuple[str, ...] = ("also", "today", "mom", "states", "worried", "tired")
    noise_rate: float = 0.15
    imbalance: float = 1.0
    seed: int = 0

    @property
    def label_names(self) -> list[str]:
        return [spec.name for spec in self.labels]

    @property
    def markers(self) -> dict[str, str]:
        return {spec.name: spec.marker for spec in self.labels}

    def symptom_table(self) -> dict[str, str]:
        return {s: spec.name for spec in self.labels for s in spec.symptoms}

    def validate(self) -> "GrammarConfig":
        problems = []
        if not self.labels:
            problems.append("label set is empty")
        names = [spec.name for spec in self.labels]
        if len(set(names)) != len(names):
            problems.append("label names must be unique")
        for spec in self.labels:
            if len(spec.symptoms) < 3:
                problems.append(f"label {spec.name!r} has fewer than 3 symptoms")
            if len(spec.rationale_templates) < 2:
                problems.append(f"label {spec.name!r} has fewer than 2 rationale templates")
            for tpl in spec.rationale_templates:
                if "{symptom}" not in tpl or "{marker}" not in tpl:
                    problems.append(f"rationale template {tpl!r} must contain {{symptom}} and {{marker}}")
        markers = [spec.marker for spec in self.labels]
        for i, a in enumerate(markers):
            if not a.strip():
                problems.append("marker phrases must be non-empty")
            for b in markers[i + 1 :]:
                if a == b or contains_phrase(a, b) or contains_phrase(b, a):
                    problems.append(f"marker phrases {a!r} and {b!r} are not distinct")
        symptoms = [s for spec in self.labels for s in spec.symptoms]
        if len(set(symptoms)) != len(symptoms):
            problems.append("a symptom is assigned to more than one label")
        if len(self.note_templates) < 2:
            problems.append("need at least 2 note templates")
        for tpl in self.note_templates:
            if tpl.count("{symptom}") != 1:
                problems.append(f"note template {tpl!r} must contain {{symptom}} exactly once")
        if not 0.0 <= self.noise_rate < 1.0:
            problems.append("noise_rate must lie in [0, 1)")
        if self.noise_rate > 0 and not self.noise_words:
            problems.append("noise_rate > 0 needs noise_words")
        if self.imbalance <= 0:
            problems.append("imbalance must be positive")
        if problems:
            raise GrammarError("invalid grammar config: " + "; ".join(problems))
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GrammarConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise GrammarError(f"unknown grammar keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if key == "labels":
                kwargs[key] = tuple(
                    LabelSpec(
                        name=item["name"],
                        marker=item["marker"],
                        symptoms=tuple(item["symptoms"]),
                        rationale_templates=tuple(item["rationale_templates"]),
                    )
                    for item in value
                )
            elif isinstance(value, list):
                kwargs[key] = tuple(value)
            else:
                kwargs[key] = value
        return cls(**kwargs).validate()

    @classmethod
    def load(cls, path: str | Path) -> "GrammarConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_grammar(seed: int = 0) -> GrammarConfig:
    return GrammarConfig(seed=seed)


def contains_phrase(text: str, phrase: str) -> bool:
    """Whole-word, case-insensitive phrase search."""
    words = phrase.lower().split()
    if not words:
        return False
    pattern = r"(?<!\w)" + r"\s+".join(re.escape(w) for w in words) + r"(?!\w)"
    return re.search(pattern, text.lower()) is not None


def _label_weights(cfg: GrammarConfig) -> list[float]:
    raw = [cfg.imbalance**i for i in range(len(cfg.labels))]
    total = sum(raw)
    return [w / total for w in raw]


def _pick_weighted(rng: Rng, weights: list[float]) -> int:
    u = rng.uniform()
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1


def generate_synthetic(cfg: GrammarConfig, n: int, seed: int | None = None) -> list[Example]:
    """``n`` examples; a pure function of ``(cfg, n, seed)`` (``seed`` defaults to ``cfg.seed``)."""
    if n <= 0:
        raise GrammarError(f"n must be positive, got {n}")
    cfg.validate()
    rng = Rng(cfg.seed if seed is None else seed)
    weights = _label_weights(cfg)
    out = []
    for i in range(n):
        spec = cfg.labels[_pick_weighted(rng, weights)]
        symptom = rng.choice(spec.symptoms)
        note = rng.choice(cfg.note_templates).format(
            age=rng.choice(cfg.ages), duration=rng.choice(cfg.durations), symptom="\x00"
        )
        words = []
        for word in note.split():
            words.append(symptom if word == "\x00" else word)
            if cfg.noise_rate > 0 and rng.uniform() < cfg.noise_rate:
                words.append(rng.choice(cfg.noise_words))
        rationale = rng.choice(spec.rationale_templates).format(symptom=symptom, marker=spec.marker)
        out.append(
            Example(
                id=f"syn-{i:06d}",
                input_text=" ".join(words),
                gold_label=spec.name,
                gold_rationale=rationale,
            )
        )
    return out
