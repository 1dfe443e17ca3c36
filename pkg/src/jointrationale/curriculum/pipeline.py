"""Variant dispatch: which stages run and how Stage-2 is configured."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..datasets import Example
from ..seq2seq import ModelConfig, ModelParams, Vocab
from ..tensorcore import Rng
from .checkpoint import Checkpoint
from .schedule import ScheduleConfig
from .trainer import OptimConfig, Stage2Mode, TrainConfig, TrainReport, train_stage1, train_stage2


@dataclass(frozen=True)
class Variant:
    stage1: bool
    mode: Stage2Mode


VARIANTS: dict[str, Variant] = {
    "full": Variant(True, Stage2Mode()),
    "sft": Variant(False, Stage2Mode(scheduled_sampling=False, explain="none", delay_early_stop=False)),
    "no-stage1": Variant(False, Stage2Mode()),
    "no-scheduled-sampling": Variant(True, Stage2Mode(scheduled_sampling=False)),
    # removes only the alpha ramp; the pi schedule (and its warm-up) is unchanged
    "no-warmup": Variant(True, Stage2Mode(alpha_warmup=False)),
    "dss-style": Variant(
        False, Stage2Mode(scheduled_sampling=False, explain="unconditioned", delay_early_stop=False)
    ),
}


def build_vocab(train: Sequence[Example]) -> Vocab:
    texts = []
    for ex in train:
        texts.extend((ex.input_text, ex.gold_label, ex.gold_rationale))
    return Vocab.build(texts)


def run_training(
    variant: str,
    train: Sequence[Example],
    val: Sequence[Example],
    model_fields: dict,
    sched: ScheduleConfig,
    tcfg: TrainConfig,
    ocfg: OptimConfig,
    seed: int,
) -> tuple[Checkpoint, TrainReport]:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}")
    spec = VARIANTS[variant]
    vocab = build_vocab(train)
    label_set = sorted({ex.gold_label for ex in train})
    master = Rng(seed)
    init_rng, stage1_rng, stage2_rng = master.split(), master.split(), master.split()
    params = ModelParams.init(ModelConfig(vocab_size=len(vocab), **model_fields), init_rng)
    report = TrainReport(variant=variant)
    if spec.stage1:
        train_stage1(params, vocab, train, val, tcfg, ocfg, stage1_rng, report)
    ckpt, report = train_stage2(
        params, vocab, train, val, sched, tcfg, ocfg, stage2_rng, label_set, spec.mode, report
    )
    ckpt.meta = {
        "variant": variant,
        "explain": spec.mode.explain,
        "label_set": label_set,
        "label_max_len": tcfg.label_max_len,
        "rationale_max_len": tcfg.rationale_max_len,
        "seed": seed,
    }
    return ckpt, report
