"""End-to-end acceptance checks, one test per criterion.

Each test records a ``PASS``/``FAIL`` line (shown in the terminal summary and
printed to stdout) before asserting. Criteria 4-8 share one seed-0 full-recipe
run and one ablation over three seeds, so the module takes roughly 45 minutes
on a single core. Select it alone with ``pytest -m acceptance``.
"""

from __future__ import annotations

import json
import random
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from jointrationale import cli, runner
from jointrationale.config import RunConfig
from jointrationale.curriculum import ScheduleConfig, alpha_at, load_checkpoint, payload_bytes, pi_at
from jointrationale.eval import bleu, macro_f1

from .conftest import ACCEPTANCE_LINES
from .gradcheck import expl_style_batch, model_gradient_errors, pred_style_batch
from .oracles import brute_force_bleu, confusion_macro_f1

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

LEARN_BUDGET_S = 15 * 60
ABLATION_BUDGET_S = 90 * 60
TIE_BAND = 0.005  # half an F1 point
COMPARED = ("full", "no-stage1", "sft", "no-scheduled-sampling")
SEEDS = (0, 1, 2)
RETRY_SEEDS = (3, 4, 5)


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------- 1


def _reference_pi(t, T, wf=0.05, mf=0.60, ceiling=0.9):
    w, m = wf * T, mf * T
    if t < w:
        return 0.0
    if t < w + m:
        return min(ceiling, (t - w) / m)
    return ceiling


def _reference_alpha(t, T, wf=0.05, amax=0.7):
    w = wf * T
    return amax * t / w if t < w else amax


def test_criterion_1_schedule_exactness():
    start = time.perf_counter()
    worst = 0.0
    for T in (100, 1000, 5000):
        cfg = ScheduleConfig(total_steps=T)
        w, m = cfg.warmup_steps, cfg.transition_steps
        boundaries = {0, int(w) - 1, int(w), int(w + 0.9 * m), int(w + m), T}
        for t in sorted(set(range(T + 1)) | boundaries):
            worst = max(worst, abs(pi_at(t, cfg) - _reference_pi(t, T)), abs(alpha_at(t, cfg) - _reference_alpha(t, T)))
        assert pi_at(0, cfg) == 0.0 and alpha_at(0, cfg) == 0.0
        assert pi_at(T, cfg) == 0.9 and alpha_at(T, cfg) == 0.7
        assert pi_at(int(w + 0.9 * m), cfg) == 0.9
    elapsed = time.perf_counter() - start
    verdict(1, worst <= 1e-12 and elapsed < 1.0, f"max |schedule - formula| = {worst:.1e}, {elapsed:.2f}s")


# ---------------------------------------------------------------- 2


def test_criterion_2_gradient_fidelity():
    start = time.perf_counter()
    worst = {}
    for style, batch in (("pred", pred_style_batch), ("expl", expl_style_batch)):
        prompts, targets = batch()
        errors = model_gradient_errors(prompts, targets, per_tensor=16)
        name = max(errors, key=errors.get)
        worst[style] = (name, errors[name])
    elapsed = time.perf_counter() - start
    top = max(e for _, e in worst.values())
    detail = ", ".join(f"{k}: {v[1]:.1e} ({v[0]})" for k, v in worst.items())
    verdict(2, top <= 1e-4 and elapsed < 60, f"max relative error {detail}, {elapsed:.1f}s")


# ---------------------------------------------------------------- 3


def test_criterion_3_metric_oracles():
    start = time.perf_counter()
    rnd = random.Random(2024)
    vocab = [f"w{i}" for i in range(10)]
    bleu_gap = 0.0
    for _ in range(100):
        cand = [rnd.choice(vocab) for _ in range(rnd.randint(1, 20))]
        ref = [rnd.choice(vocab) for _ in range(rnd.randint(1, 20))]
        bleu_gap = max(bleu_gap, abs(bleu([" ".join(cand)], [" ".join(ref)]) - brute_force_bleu([cand], [ref])))
    f1_mismatch = 0
    labels = list("abcdef")
    for _ in range(100):
        n = rnd.randint(1, 60)
        golds = [rnd.choice(labels) for _ in range(n)]
        preds = [rnd.choice(labels) for _ in range(n)]
        ours, _ = macro_f1(preds, golds, label_set=labels)
        ref, _ = confusion_macro_f1(preds, golds)
        f1_mismatch += ours != ref
    elapsed = time.perf_counter() - start
    ok = bleu_gap <= 1e-9 and f1_mismatch == 0 and elapsed < 10
    verdict(3, ok, f"BLEU max gap {bleu_gap:.1e}, macro-F1 mismatches {f1_mismatch}/100, {elapsed:.2f}s")


# ---------------------------------------------------------------- shared runs


@pytest.fixture(scope="module")
def workspace(tmp_path_factory) -> dict:
    root = tmp_path_factory.mktemp("acceptance")
    base = root / "base.json"
    base.write_text(json.dumps({}))
    assert cli.main(["gen-data", "--config", str(base), "--out", str(root / "data")]) == 0
    cfg_path = root / "run.json"
    cfg_path.write_text(json.dumps({"data": {"data_dir": str(root / "data")}}))
    return {"root": root, "config": str(cfg_path), "data": root / "data"}


def _train_and_evaluate(ws: dict, name: str, variant: str = "full", seed: int = 0) -> dict:
    out = ws["root"] / name
    start = time.perf_counter()
    rc = cli.main(["train", "--config", ws["config"], "--out", str(out), "--variant", variant, "--seed", str(seed)])
    assert rc == 0
    rc = cli.main(
        [
            "evaluate",
            "--checkpoint",
            str(out / "checkpoint.ckpt"),
            "--data",
            str(ws["data"] / "test.jsonl"),
            "--out",
            str(out / "metrics.json"),
        ]
    )
    assert rc == 0
    return {
        "dir": out,
        "seconds": time.perf_counter() - start,
        "metrics": json.loads((out / "metrics.json").read_text()),
        "report": json.loads((out / "train_report.json").read_text()),
    }


@pytest.fixture(scope="module")
def full_run(workspace) -> dict:
    return _train_and_evaluate(workspace, "full-a")


def _cells(ws: dict, seeds, reuse: dict | None = None) -> tuple[dict, float]:
    cells: dict[tuple[str, int], dict] = {}
    start = time.perf_counter()
    for variant in COMPARED:
        for seed in seeds:
            if reuse is not None and (variant, seed) == ("full", 0):
                cells[variant, seed] = reuse["metrics"]
                continue
            cells[variant, seed] = _train_and_evaluate(ws, f"{variant}-seed{seed}", variant, seed)["metrics"]
    return cells, time.perf_counter() - start


def _comparisons(cells: dict, seeds) -> list[dict]:
    out = []
    for metric, rival in (("macro_f1", "no-stage1"), ("macro_f1", "sft"), ("consistency", "no-scheduled-sampling")):
        ours = [cells["full", s][metric] for s in seeds]
        theirs = [cells[rival, s][metric] for s in seeds]
        out.append(
            {
                "metric": metric,
                "rival": rival,
                "full": statistics.median(ours),
                "other": statistics.median(theirs),
                "ok": statistics.median(ours) >= statistics.median(theirs),
                "tied": all(abs(a - b) <= TIE_BAND for a, b in zip(ours, theirs)),
            }
        )
    return out


@pytest.fixture(scope="module")
def ablation(workspace, full_run) -> dict:
    cells, seconds = _cells(workspace, SEEDS, reuse=full_run)
    seconds += full_run["seconds"]
    seeds = SEEDS
    comps = _comparisons(cells, seeds)
    repeated = False
    if any(not c["ok"] and c["tied"] for c in comps) and all(c["ok"] or c["tied"] for c in comps):
        repeated = True
        cells, extra = _cells(workspace, RETRY_SEEDS)
        seconds += extra
        seeds = RETRY_SEEDS
        comps = _comparisons(cells, seeds)
    summary = {
        "seeds": list(seeds),
        "repeated": repeated,
        "seconds": seconds,
        "comparisons": comps,
        "cells": {f"{v}/{s}": m for (v, s), m in cells.items()},
    }
    (workspace["root"] / "ablation_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


# ---------------------------------------------------------------- 4


def test_criterion_4_learnability(full_run, workspace):
    counts = json.loads((workspace["data"] / "manifest.json").read_text())["counts"]
    f1 = full_run["metrics"]["macro_f1"]
    stage2_steps = len(full_run["report"]["steps"])
    ok = f1 >= 0.90 and stage2_steps <= 5000 and full_run["seconds"] <= LEARN_BUDGET_S
    verdict(
        4,
        ok,
        f"test Macro-F1 {f1:.4f} after {stage2_steps} Stage-2 steps, {full_run['seconds']:.0f}s, "
        f"split {counts['train']}/{counts['val']}/{counts['test']}",
    )


# ---------------------------------------------------------------- 5


def test_criterion_5_ablation_direction(ablation):
    parts = [
        f"{c['metric']} full {c['full']:.4f} vs {c['rival']} {c['other']:.4f}{'' if c['ok'] else ' (violated)'}"
        for c in ablation["comparisons"]
    ]
    ok = all(c["ok"] for c in ablation["comparisons"]) and ablation["seconds"] <= ABLATION_BUDGET_S
    seeds = "retry seeds" if ablation["repeated"] else "seeds"
    verdict(5, ok, f"medians over {seeds} {ablation['seeds']}: " + "; ".join(parts) + f"; {ablation['seconds'] / 60:.1f} min")


# ---------------------------------------------------------------- 6


def test_criterion_6_exposure_bias(full_run, ablation):
    consistency = full_run["metrics"]["consistency"]
    gap = next(c for c in ablation["comparisons"] if c["metric"] == "consistency")
    diff = gap["full"] - gap["other"]
    ok = consistency >= 0.90 and diff >= 0
    verdict(6, ok, f"full-recipe consistency {consistency:.4f}; median gap vs no-scheduled-sampling {diff:+.4f}")


# ---------------------------------------------------------------- 7


def test_criterion_7_determinism(full_run, workspace):
    again = _train_and_evaluate(workspace, "full-b")
    a, b = Path(full_run["dir"]), Path(again["dir"])
    same_metrics = (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()
    same_payload = payload_bytes(load_checkpoint(a / "checkpoint.ckpt")) == payload_bytes(
        load_checkpoint(b / "checkpoint.ckpt")
    )
    same_file = (a / "checkpoint.ckpt").read_bytes() == (b / "checkpoint.ckpt").read_bytes()
    within = again["seconds"] + full_run["seconds"] <= 2 * LEARN_BUDGET_S
    ok = same_metrics and same_payload and same_file and within
    verdict(
        7,
        ok,
        f"metrics identical={same_metrics}, payload identical={same_payload}, file identical={same_file}, "
        f"{full_run['seconds']:.0f}s + {again['seconds']:.0f}s",
    )


# ---------------------------------------------------------------- 8


def test_criterion_8_protocol_conformance(full_run, workspace):
    report = full_run["report"]
    sched = RunConfig.load(workspace["config"]).schedule
    arm = sched.transition_end
    no_early = (not report["stopped_early"]) or report["early_stop_t"] >= arm
    history = [v["macro_f1"] for v in report["validation"]]
    ckpt = load_checkpoint(Path(full_run["dir"]) / "checkpoint.ckpt")
    best_ok = report["selected_f1"] == max(history) == ckpt.val_score
    best_ok = best_ok and ckpt.step == report["selected_step"]
    first_best = next(v["step"] for v in report["validation"] if v["macro_f1"] == max(history))
    best_ok = best_ok and report["selected_step"] == first_best
    identity = max(
        abs(r["l_total"] - (r["alpha"] * r["l_pred"] + (1 - r["alpha"]) * r["l_expl"])) for r in report["steps"]
    )
    trace_ok = all(r["pi"] == pi_at(r["t"], sched) and r["alpha"] == alpha_at(r["t"], sched) for r in report["steps"])
    ok = no_early and best_ok and identity <= 1e-12 and trace_ok
    stop = f"stopped at t={report['early_stop_t']}" if report["stopped_early"] else "ran to T"
    verdict(
        8,
        ok,
        f"{stop} (armed at {arm:g}); selected step {report['selected_step']} F1 {report['selected_f1']:.4f} "
        f"= max of {len(history)} evals; max identity error {identity:.1e}",
    )
    assert np.isfinite([r["l_total"] for r in report["steps"]]).all()
