from __future__ import annotations

import pytest

from jointrationale.curriculum import OptimConfig, TrainConfig, TrainReport, train_stage1
from jointrationale.curriculum.pipeline import build_vocab
from jointrationale.datasets import default_grammar, generate_synthetic
from jointrationale.seq2seq import ModelConfig, ModelParams
from jointrationale.tensorcore import Rng

TINY_FIELDS = dict(d_model=32, n_heads=4, d_ff=64, enc_layers=1, dec_layers=1, max_len=64)


@pytest.fixture(scope="session")
def tiny_examples():
    return generate_synthetic(default_grammar(), 10, seed=7)


@pytest.fixture(scope="session")
def trained_tiny(tiny_examples):
    """Stage-1 run that memorizes 10 rationales; returns (params, vocab, examples, report)."""
    vocab = build_vocab(tiny_examples)
    params = ModelParams.init(ModelConfig(vocab_size=len(vocab), **TINY_FIELDS), Rng(0))
    tcfg = TrainConfig(batch_size=10, stage1_max_steps=400, stage1_eval_interval=50, stage1_patience=100)
    report = TrainReport()
    train_stage1(params, vocab, tiny_examples, tiny_examples, tcfg, OptimConfig(lr=3e-3), Rng(1), report)
    return params, vocab, tiny_examples, report


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
