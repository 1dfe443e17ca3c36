"""Run configuration: one JSON file, every field defaulted, unknown keys rejected.

Layout (all sections and keys optional)::

    {
      "seed": 0,
      "variant": "full",
      "out_dir": "runs/default",
      "model":    {"d_model": 64, "n_heads": 4, "d_ff": 128, "enc_layers": 2, "dec_layers": 2, "max_len": 128},
      "schedule": {"total_steps": 5000, "warmup_fraction": 0.05, "transition_fraction": 0.6,
                   "pi_ceiling": 0.9, "alpha_max": 0.7},
      "optim":    {"lr": 0.0003, "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-08,
                   "weight_decay": 0.01, "clip_norm": 1.0},
      "train":    {"batch_size": 16, "stage1_max_steps": 1500, "stage1_eval_interval": 100,
                   "stage1_patience": 3, "stage2_patience": 5, "eval_interval": null,
                   "min_delta": 1e-06, "label_max_len": 8, "rationale_max_len": 40,
                   "eval_batch_size": 128},
      "data":     {"grammar": null, "n_examples": 3000, "fractions": [0.6667, 0.1667, 0.1666],
                   "data_dir": null, "train_path": null, "val_path": null, "test_path": null},
      "ablation": {"variants": ["full", "no-stage1", ...], "seeds": [0, 1, 2]}
    }

``data.grammar`` is either a path to a grammar JSON file or the grammar object
inline; ``null`` means the built-in six-label grammar.
"""

from __future__ import annotations

import json
import typing
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

from .curriculum.pipeline import VARIANTS
from .curriculum.schedule import ScheduleConfig
from .curriculum.trainer import OptimConfig, TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelFields:
    d_model: int = 64
    n_heads: int = 4
    d_ff: int = 128
    enc_layers: int = 2
    dec_layers: int = 2
    max_len: int = 128


@dataclass(frozen=True)
class DataConfig:
    grammar: str | dict | None = None
    n_examples: int = 3000
    fractions: tuple[float, float, float] = (2 / 3, 1 / 6, 1 / 6)
    data_dir: str | None = None
    train_path: str | None = None
    val_path: str | None = None
    test_path: str | None = None


@dataclass(frozen=True)
class AblationConfig:
    variants: tuple[str, ...] = (
        "full",
        "no-stage1",
        "no-scheduled-sampling",
        "no-warmup",
        "sft",
        "dss-style",
    )
    seeds: tuple[int, ...] = (0, 1, 2)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    variant: str = "full"
    out_dir: str = "runs/default"
    model: ModelFields = field(default_factory=ModelFields)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {sorted(VARIANTS)}, got {self.variant!r}")
        for v in self.ablation.variants:
            if v not in VARIANTS:
                raise ConfigError(f"ablation variant {v!r} is not one of {sorted(VARIANTS)}")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return _build(cls, data, "config")

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls()
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)

    def replace(self, **changes) -> "RunConfig":
        data = self.to_dict()
        data.update(changes)
        return RunConfig.from_dict(data)


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for key, value in data.items():
        hint = hints[key]
        if is_dataclass(hint):
            kwargs[key] = _build(hint, value, f"{where}.{key}")
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
