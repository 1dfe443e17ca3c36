"""Two-stage training: rationale foundation, then joint prediction/explanation
with task-level scheduled sampling of the conditioning label."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..datasets import Example
from ..eval import macro_f1
from ..seq2seq import (
    ModelParams,
    Vocab,
    batch_greedy_decode,
    batch_nll,
    conditioned_prompt,
    explain_prompt,
    predict_prompt,
)
from ..tensorcore import (
    ContractError,
    NumericError,
    OptimizerState,
    Rng,
    Tape,
    add,
    backward,
    clip_grad_norm,
    optimizer_step,
    paused,
    scale,
)
from .checkpoint import Checkpoint
from .schedule import ScheduleConfig, alpha_at, pi_at

log = logging.getLogger(__name__)

GOLD, PREDICTED = "gold", "predicted"


@dataclass(frozen=True)
class OptimConfig:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.01
    clip_norm: float = 1.0  # <= 0 disables clipping

    def fresh_state(self, params: ModelParams) -> OptimizerState:
        return OptimizerState.fresh(
            params.tensors,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
            weight_decay=self.weight_decay,
        )


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    stage1_max_steps: int = 1500
    stage1_eval_interval: int = 100
    stage1_patience: int = 3
    stage2_patience: int = 5
    eval_interval: int | None = None  # None: max(1, T // 50)
    min_delta: float = 1e-6
    label_max_len: int = 8
    rationale_max_len: int = 40
    eval_batch_size: int = 128


@dataclass(frozen=True)
class Stage2Mode:
    """Which parts of the joint objective are active.

    ``explain`` is ``"conditioned"`` (label-conditioned rationale),
    ``"unconditioned"`` (rationale from the bare explain prompt) or ``"none"``
    (prediction only).
    """

    scheduled_sampling: bool = True
    alpha_warmup: bool = True
    explain: str = "conditioned"
    delay_early_stop: bool = True

    def __post_init__(self):
        if self.explain not in ("conditioned", "unconditioned", "none"):
            raise ContractError(f"unknown explain mode {self.explain!r}")


@dataclass
class TrainReport:
    variant: str = "full"
    stage1: list[dict] = field(default_factory=list)
    stage1_validation: list[dict] = field(default_factory=list)
    stage1_selected_step: int | None = None
    steps: list[dict] = field(default_factory=list)
    validation: list[dict] = field(default_factory=list)
    selected_step: int | None = None
    selected_f1: float | None = None
    stopped_early: bool = False
    early_stop_t: int | None = None
    predicted_branch_count: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


class EncodedCorpus:
    """Token ids for every prompt/target a training run needs, computed once."""

    def __init__(self, examples: Sequence[Example], vocab: Vocab):
        self.examples = list(examples)
        tok = vocab.tokenize
        self.predict = [tok(predict_prompt(ex.input_text)) for ex in self.examples]
        self.labels = [tok(ex.gold_label) for ex in self.examples]
        self.explain = [tok(explain_prompt(ex.input_text)) for ex in self.examples]
        self.gold_conditioned = [
            tok(conditioned_prompt(ex.gold_label, ex.input_text)) for ex in self.examples
        ]
        self.rationales = [tok(ex.gold_rationale) for ex in self.examples]

    def __len__(self) -> int:
        return len(self.examples)


class BatchStream:
    """Endless minibatches of indices, reshuffled every epoch."""

    def __init__(self, n: int, batch_size: int, rng: Rng):
        if n <= 0:
            raise ContractError("training set is empty")
        self.n, self.batch_size, self.rng = n, batch_size, rng
        self._order: list[int] = []
        self._pos = 0

    def next(self) -> list[int]:
        if self._pos >= len(self._order):
            self._order = list(range(self.n))
            self.rng.shuffle(self._order)
            self._pos = 0
        batch = self._order[self._pos : self._pos + self.batch_size]
        self._pos += self.batch_size
        return batch


# ---------------------------------------------------------------- helpers


def _chunks(n: int, size: int):
    for start in range(0, n, size):
        yield range(start, min(n, start + size))


def mean_nll(params: ModelParams, prompts, targets, batch_size: int = 128) -> float:
    """Mean per-example NLL over a whole set, without recording gradients."""
    total = 0.0
    with paused():
        for idx in _chunks(len(prompts), batch_size):
            loss = batch_nll(params, [prompts[i] for i in idx], [targets[i] for i in idx])
            total += loss.item() * len(idx)
    return total / len(prompts)


def decode_texts(params: ModelParams, vocab: Vocab, prompts, max_len: int, batch_size: int = 128) -> list[str]:
    out = []
    for idx in _chunks(len(prompts), batch_size):
        for ids in batch_greedy_decode(params, [prompts[i] for i in idx], max_len):
            out.append(vocab.detokenize(ids))
    return out


def validation_f1(
    params: ModelParams, vocab: Vocab, corpus: EncodedCorpus, label_set: Sequence[str], tcfg: TrainConfig
) -> float:
    preds = decode_texts(params, vocab, corpus.predict, tcfg.label_max_len, tcfg.eval_batch_size)
    return macro_f1(preds, [ex.gold_label for ex in corpus.examples], label_set)[0]


def _update(params: ModelParams, loss, tape: Tape, opt: OptimizerState, ocfg: OptimConfig) -> None:
    grads = backward(tape, loss, params.tensors)
    if ocfg.clip_norm > 0:
        clip_grad_norm(grads, ocfg.clip_norm)
    optimizer_step(params.tensors, grads, opt)


# ---------------------------------------------------------------- conditioning label


def choose_conditioning_label(
    example: Example,
    pi: float,
    rng: Rng,
    params: ModelParams,
    vocab: Vocab,
    label_max_len: int = 8,
) -> tuple[str, str]:
    """Gold label with probability ``1 - pi``, else the model's greedy prediction.

    The prediction is decoded without recording gradients. Returns the label
    text and ``"gold"`` or ``"predicted"``.
    """
    if not 0.0 <= pi <= 1.0:
        raise ContractError(f"pi must lie in [0, 1], got {pi}")
    if rng.uniform() < pi:
        ids = batch_greedy_decode(params, [vocab.tokenize(predict_prompt(example.input_text))], label_max_len)[0]
        return vocab.detokenize(ids), PREDICTED
    return example.gold_label, GOLD


def _batch_conditioning(
    params: ModelParams,
    vocab: Vocab,
    corpus: EncodedCorpus,
    idx: Sequence[int],
    pi: float,
    rng: Rng,
    label_max_len: int,
) -> tuple[list[list[int]], int]:
    """Batched form of :func:`choose_conditioning_label`; one draw per example in order."""
    draws = [rng.uniform() for _ in idx]
    swap = [i for i, u in zip(idx, draws) if u < pi]
    decoded = {}
    if swap:
        for i, ids in zip(swap, batch_greedy_decode(params, [corpus.predict[i] for i in swap], label_max_len)):
            label = vocab.detokenize(ids)
            decoded[i] = vocab.tokenize(conditioned_prompt(label, corpus.examples[i].input_text))
    prompts = [decoded[i] if i in decoded else corpus.gold_conditioned[i] for i in idx]
    return prompts, len(swap)


# ---------------------------------------------------------------- stage 1


def train_stage1(
    params: ModelParams,
    vocab: Vocab,
    train: Sequence[Example],
    val: Sequence[Example],
    tcfg: TrainConfig,
    ocfg: OptimConfig,
    rng: Rng,
    report: TrainReport | None = None,
) -> Checkpoint:
    """Rationale-only training on ``explain: x`` prompts.

    Validation loss is checked every ``stage1_eval_interval`` steps; training
    stops after ``stage1_patience`` evaluations without improvement and the
    lowest-validation-loss parameters are returned (and left in ``params``).
    """
    if not train:
        raise ContractError("stage 1 needs a non-empty training set")
    if not val:
        raise ContractError("stage 1 needs a non-empty validation set")
    report = report if report is not None else TrainReport()
    tr, va = EncodedCorpus(train, vocab), EncodedCorpus(val, vocab)
    opt = ocfg.fresh_state(params)
    stream = BatchStream(len(tr), tcfg.batch_size, rng)
    best: Checkpoint | None = None
    best_loss = math.inf
    bad = 0
    for step in range(1, tcfg.stage1_max_steps + 1):
        idx = stream.next()
        try:
            with Tape() as tape:
                loss = batch_nll(params, [tr.explain[i] for i in idx], [tr.rationales[i] for i in idx])
            _update(params, loss, tape, opt, ocfg)
        except NumericError as exc:
            raise NumericError(f"stage 1 diverged at step {step}: {exc}") from None
        report.stage1.append({"step": step, "loss": loss.item()})
        if step % tcfg.stage1_eval_interval == 0 or step == tcfg.stage1_max_steps:
            val_loss = mean_nll(params, va.explain, va.rationales, tcfg.eval_batch_size)
            if not math.isfinite(val_loss):
                raise NumericError(f"stage 1 validation loss is non-finite at step {step}")
            report.stage1_validation.append({"step": step, "val_loss": val_loss})
            log.info("stage1 step %d loss %.4f val %.4f", step, loss.item(), val_loss)
            if val_loss < best_loss - tcfg.min_delta:
                best_loss, bad = val_loss, 0
                best = Checkpoint.capture(
                    params, vocab, step=step, val_score=val_loss, rng_state={"stage1_data": rng.getstate()}
                )
            else:
                bad += 1
                if bad >= tcfg.stage1_patience:
                    break
    assert best is not None
    params.restore(best.arrays)
    report.stage1_selected_step = best.step
    return best


# ---------------------------------------------------------------- stage 2


def train_stage2(
    params: ModelParams,
    vocab: Vocab,
    train: Sequence[Example],
    val: Sequence[Example],
    sched: ScheduleConfig,
    tcfg: TrainConfig,
    ocfg: OptimConfig,
    rng: Rng,
    label_set: Sequence[str],
    mode: Stage2Mode = Stage2Mode(),
    report: TrainReport | None = None,
    validate: Callable[[ModelParams], float] | None = None,
) -> tuple[Checkpoint, TrainReport]:
    """Joint optimisation ``alpha_t * L_pred + (1 - alpha_t) * L_expl``.

    At step ``t`` every example contributes both losses. The explanation
    prompt is conditioned on the gold label or, with probability ``pi_t``, on
    the model's own greedy prediction from the current parameters. Validation
    Macro-F1 of greedy label predictions is computed every ``eval_interval``
    steps; with ``delay_early_stop`` the patience counter only runs once
    ``t >= w + m``. The highest-F1 parameters are returned (and left in
    ``params``).
    """
    if not train:
        raise ContractError("stage 2 needs a non-empty training set")
    if not val:
        raise ContractError("stage 2 needs a non-empty validation set")
    report = report if report is not None else TrainReport()
    tr, va = EncodedCorpus(train, vocab), EncodedCorpus(val, vocab)
    data_rng, coin_rng = rng.split(), rng.split()
    if validate is None:

        def validate(p: ModelParams) -> float:
            return validation_f1(p, vocab, va, label_set, tcfg)

    opt = ocfg.fresh_state(params)
    stream = BatchStream(len(tr), tcfg.batch_size, data_rng)
    interval = tcfg.eval_interval or max(1, sched.total_steps // 50)
    arm_at = sched.transition_end if mode.delay_early_stop else 0
    best: Checkpoint | None = None
    best_f1 = -math.inf
    bad = 0

    for t in range(sched.total_steps):
        pi = pi_at(t, sched) if mode.scheduled_sampling else 0.0
        if mode.explain == "none":
            alpha = 1.0
        else:
            alpha = alpha_at(t, sched) if mode.alpha_warmup else sched.alpha_max
        idx = stream.next()
        n_pred = 0
        if mode.explain == "conditioned":
            expl_prompts, n_pred = _batch_conditioning(params, vocab, tr, idx, pi, coin_rng, tcfg.label_max_len)
        elif mode.explain == "unconditioned":
            expl_prompts = [tr.explain[i] for i in idx]
        try:
            with Tape() as tape:
                l_pred = batch_nll(params, [tr.predict[i] for i in idx], [tr.labels[i] for i in idx])
                if mode.explain == "none":
                    l_expl = None
                    total = l_pred
                else:
                    l_expl = batch_nll(params, expl_prompts, [tr.rationales[i] for i in idx])
                    total = add(scale(l_pred, alpha), scale(l_expl, 1.0 - alpha))
            _update(params, total, tape, opt, ocfg)
        except NumericError as exc:
            raise NumericError(f"stage 2 diverged at step {t}: {exc}") from None

        report.predicted_branch_count += n_pred
        report.steps.append(
            {
                "t": t,
                "pi": pi,
                "alpha": alpha,
                "l_pred": l_pred.item(),
                "l_expl": None if l_expl is None else l_expl.item(),
                "l_total": total.item(),
                "n_predicted": n_pred,
                "batch": len(idx),
            }
        )

        if (t + 1) % interval == 0 or t + 1 == sched.total_steps:
            f1 = validate(params)
            report.validation.append({"step": t + 1, "t": t, "macro_f1": f1})
            log.info("stage2 t=%d pi=%.3f alpha=%.3f loss=%.4f val_f1=%.4f", t, pi, alpha, total.item(), f1)
            if f1 > best_f1 + tcfg.min_delta:
                best_f1, bad = f1, 0
                best = Checkpoint.capture(
                    params,
                    vocab,
                    step=t + 1,
                    val_score=f1,
                    rng_state={"data": data_rng.getstate(), "coin": coin_rng.getstate()},
                )
            elif t >= arm_at:
                bad += 1
                if bad >= tcfg.stage2_patience:
                    report.stopped_early = True
                    report.early_stop_t = t
                    break

    assert best is not None
    params.restore(best.arrays)
    report.selected_step = best.step
    report.selected_f1 = best.val_score
    return best, report


def report_identity_errors(report: TrainReport) -> list[float]:
    """|L_total - (alpha L_pred + (1 - alpha) L_expl)| for every joint step."""
    out = []
    for row in report.steps:
        if row["l_expl"] is None:
            continue
        a = row["alpha"]
        out.append(abs(row["l_total"] - (a * row["l_pred"] + (1.0 - a) * row["l_expl"])))
    return out


def loss_trace(report: TrainReport, key: str) -> np.ndarray:
    return np.array([row[key] for row in report.steps], dtype=float)
