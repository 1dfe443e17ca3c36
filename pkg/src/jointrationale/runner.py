"""Command implementations behind the CLI. Each returns what it wrote."""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .config import ConfigError, RunConfig
from .curriculum import (
    Checkpoint,
    Predictor,
    alpha_at,
    load_checkpoint,
    pi_at,
    run_training,
    save_checkpoint,
)
from .datasets import (
    Example,
    GrammarConfig,
    default_grammar,
    generate_synthetic,
    load_jsonl,
    stratified_split,
    write_jsonl,
)
from .eval import MetricsReport, build_report
from .tensorcore import ContractError

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def grammar_from_config(cfg: RunConfig) -> GrammarConfig:
    src = cfg.data.grammar
    if src is None:
        return default_grammar(cfg.seed)
    grammar = GrammarConfig.from_dict(src) if isinstance(src, dict) else GrammarConfig.load(src)
    return grammar


def synthetic_splits(cfg: RunConfig) -> tuple[GrammarConfig, tuple[list[Example], list[Example], list[Example]]]:
    grammar = grammar_from_config(cfg)
    examples = generate_synthetic(grammar, cfg.data.n_examples, seed=grammar.seed)
    return grammar, stratified_split(examples, cfg.data.fractions, seed=cfg.seed)


def _histogram(examples: Sequence[Example]) -> dict[str, int]:
    return dict(sorted(Counter(ex.gold_label for ex in examples).items()))


def gen_data(cfg: RunConfig, out_dir: str | Path) -> dict:
    """Write train/val/test JSONL plus ``manifest.json``; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grammar, parts = synthetic_splits(cfg)
    manifest = {
        "seed": cfg.seed,
        "grammar_seed": grammar.seed,
        "fractions": list(cfg.data.fractions),
        "counts": {},
        "label_histogram": {},
        "markers": grammar.markers,
    }
    for name, part in zip(SPLITS, parts):
        write_jsonl(out / f"{name}.jsonl", part)
        manifest["counts"][name] = len(part)
        manifest["label_histogram"][name] = _histogram(part)
    _write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _write_text(out / "config.json", cfg.to_json())
    return manifest


def load_splits(cfg: RunConfig) -> tuple[list[Example], list[Example], list[Example], dict | None]:
    """Data for a run: explicit JSONL paths, a gen-data directory, or the grammar in memory.

    The last element is the label-to-marker table when one is known.
    """
    d = cfg.data
    if d.train_path or d.val_path or d.test_path:
        if not (d.train_path and d.val_path):
            raise ConfigError("data.train_path and data.val_path must both be set")
        test = load_jsonl(d.test_path) if d.test_path else []
        return load_jsonl(d.train_path), load_jsonl(d.val_path), test, None
    if d.data_dir:
        root = Path(d.data_dir)
        markers = None
        if (root / "manifest.json").exists():
            markers = json.loads((root / "manifest.json").read_text(encoding="utf-8")).get("markers")
        train, val, test = (load_jsonl(root / f"{name}.jsonl") for name in SPLITS)
        return train, val, test, markers
    grammar, (train, val, test) = synthetic_splits(cfg)
    return train, val, test, grammar.markers


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    checkpoint_path: Path
    report_path: Path


def train(cfg: RunConfig, out_dir: str | Path, variant: str | None = None, seed: int | None = None) -> TrainResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    variant = variant or cfg.variant
    seed = cfg.seed if seed is None else seed
    train_set, val_set, _, markers = load_splits(cfg)
    ckpt, report = run_training(
        variant,
        train_set,
        val_set,
        dict(vars(cfg.model)),
        cfg.schedule,
        cfg.train,
        cfg.optim,
        seed,
    )
    if markers:
        ckpt.meta["markers"] = markers
    ckpt_path = out / "checkpoint.ckpt"
    save_checkpoint(ckpt_path, ckpt)
    ckpt.vocab.save(out / "vocab.json")
    report_path = out / "train_report.json"
    _write_text(report_path, report.to_json())
    _write_text(out / "config.json", cfg.replace(variant=variant, seed=seed).to_json())
    return TrainResult(ckpt, ckpt_path, report_path)


def evaluate(
    checkpoint: str | Path | Checkpoint,
    examples: Sequence[Example],
    markers: dict | None = None,
) -> MetricsReport:
    ckpt = checkpoint if isinstance(checkpoint, Checkpoint) else load_checkpoint(checkpoint)
    if not examples:
        raise ContractError("evaluation data is empty")
    predictor = Predictor.from_checkpoint(ckpt)
    labels, rationales = predictor.infer_batch([ex.input_text for ex in examples])
    has_rationales = predictor.explain != "none"
    markers = markers if markers is not None else ckpt.meta.get("markers")
    label_set = ckpt.meta.get("label_set") or sorted({ex.gold_label for ex in examples})
    return build_report(
        labels,
        [ex.gold_label for ex in examples],
        label_set,
        rationales if has_rationales else None,
        [ex.gold_rationale for ex in examples] if has_rationales else None,
        markers,
    )


def schedule_rows(cfg: RunConfig) -> list[tuple[int, float, float]]:
    sched = cfg.schedule
    return [(t, pi_at(t, sched), alpha_at(t, sched)) for t in range(sched.total_steps + 1)]


def schedule_csv(cfg: RunConfig) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "pi", "alpha"])
    for t, pi, alpha in schedule_rows(cfg):
        writer.writerow([t, repr(pi), repr(alpha)])
    return buf.getvalue()


# ---------------------------------------------------------------- ablation


def _median(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return statistics.median(present) if present else None


def ablate(cfg: RunConfig, out_dir: str | Path, seeds: Sequence[int] | None = None) -> dict:
    """Train and evaluate every (variant, seed) cell on the test split.

    A failing cell is recorded with ``status: "failed"`` and its error; the
    table still covers every other cell.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = list(cfg.ablation.seeds if seeds is None else seeds)
    _, _, test, markers = load_splits(cfg)
    if not test:
        raise ContractError("ablation needs a non-empty test split")
    cells = []
    for variant in cfg.ablation.variants:
        for seed in seeds:
            cell_dir = out / f"{variant}-seed{seed}"
            row = {"variant": variant, "seed": seed}
            try:
                result = train(cfg, cell_dir, variant=variant, seed=seed)
                report = evaluate(result.checkpoint, test, markers)
                report.write(cell_dir / "metrics.json")
                row.update(
                    status="ok",
                    accuracy=report.accuracy,
                    macro_f1=report.macro_f1,
                    bleu=report.bleu,
                    consistency=report.consistency,
                )
            except Exception as exc:  # a failed cell must not sink the table
                log.exception("ablation cell %s seed %s failed", variant, seed)
                row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
            cells.append(row)
            log.info("ablation cell %s", row)
    medians = {}
    for variant in cfg.ablation.variants:
        rows = [c for c in cells if c["variant"] == variant and c["status"] == "ok"]
        medians[variant] = {
            key: _median([r[key] for r in rows]) for key in ("accuracy", "macro_f1", "bleu", "consistency")
        }
    table = {"seeds": seeds, "cells": cells, "medians": medians}
    _write_text(out / "ablation.json", json.dumps(table, indent=2, sort_keys=True) + "\n")
    _write_text(out / "ablation.txt", format_table(table))
    _write_text(out / "config.json", cfg.to_json())
    return table


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.4f}"


def format_table(table: dict) -> str:
    header = f"{'variant':<24}{'seed':>6}{'macro_f1':>10}{'accuracy':>10}{'bleu':>10}{'consist':>10}  status"
    lines = [header, "-" * len(header)]
    for c in table["cells"]:
        lines.append(
            f"{c['variant']:<24}{c['seed']:>6}{_fmt(c.get('macro_f1')):>10}{_fmt(c.get('accuracy')):>10}"
            f"{_fmt(c.get('bleu')):>10}{_fmt(c.get('consistency')):>10}  {c['status']}"
        )
    lines.append("")
    lines.append(f"{'median':<24}{'':>6}{'macro_f1':>10}{'accuracy':>10}{'bleu':>10}{'consist':>10}")
    for variant, m in table["medians"].items():
        lines.append(
            f"{variant:<24}{'':>6}{_fmt(m['macro_f1']):>10}{_fmt(m['accuracy']):>10}"
            f"{_fmt(m['bleu']):>10}{_fmt(m['consistency']):>10}"
        )
    return "\n".join(lines) + "\n"
