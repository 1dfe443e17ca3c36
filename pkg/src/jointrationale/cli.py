"""Command-line entry point.

    jointrationale gen-data      --config run.json --out data/
    jointrationale train         --config run.json --out runs/full [--variant sft]
    jointrationale evaluate      --checkpoint runs/full/checkpoint.ckpt --data data/test.jsonl
    jointrationale infer         --checkpoint runs/full/checkpoint.ckpt --input "caller reports ..."
    jointrationale ablate        --config run.json --out runs/ablation
    jointrationale schedule-dump --config run.json [--out schedule.csv]

Log verbosity comes from R2D_LOG (error, info or debug; default error).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import runner
from .config import ConfigError, RunConfig
from .curriculum import CheckpointFormatError, Predictor, load_checkpoint
from .curriculum.pipeline import VARIANTS
from .datasets import GrammarError, JsonlError, load_jsonl
from .tensorcore import ContractError, NumericError

VARIANT_HELP = (
    "training variant: full (Stage-1 then Stage-2), sft (label prediction only), "
    "no-stage1, no-scheduled-sampling (pi fixed at 0), no-warmup (alpha fixed at its "
    "maximum from step 0; the pi warm-up window is kept), dss-style (rationales from "
    "'explain: x', never label-conditioned)"
)


def _setup_logging() -> None:
    level = os.environ.get("R2D_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out_dir"] = args.out
    if getattr(args, "variant", None):
        changes["variant"] = args.variant
    return cfg.replace(**changes) if changes else cfg


def cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    manifest = runner.gen_data(cfg, cfg.out_dir)
    print(json.dumps(manifest["counts"], sort_keys=True))
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    result = runner.train(cfg, cfg.out_dir)
    print(result.checkpoint_path)
    return 0


def cmd_evaluate(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    examples = load_jsonl(args.data)
    markers = None
    if args.grammar:
        from .datasets import GrammarConfig

        markers = GrammarConfig.load(args.grammar).markers
    report = runner.evaluate(ckpt, examples, markers)
    text = report.to_json()
    if args.out:
        out = Path(args.out)
        target = out / "metrics.json" if out.suffix != ".json" else out
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8", newline="\n")
    sys.stdout.write(text)
    return 0


def cmd_infer(args, parser) -> int:
    if not args.input or not args.input.strip():
        parser.error("--input must be a non-empty string")
    predictor = Predictor.from_checkpoint(load_checkpoint(args.checkpoint))
    label, rationale = predictor.infer(args.input)
    print(label)
    print(rationale)
    return 0


def cmd_ablate(args) -> int:
    cfg = _load_config(args)
    table = runner.ablate(cfg, cfg.out_dir)
    sys.stdout.write(runner.format_table(table))
    return 0 if all(c["status"] == "ok" for c in table["cells"]) else 1


def cmd_schedule_dump(args) -> int:
    cfg = _load_config(args)
    text = runner.schedule_csv(cfg)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration JSON")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", metavar="DIR", help="output directory (file for schedule-dump/evaluate)")

    parser = argparse.ArgumentParser(prog="jointrationale", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="write synthetic train/val/test JSONL")
    p = sub.add_parser("train", parents=[common], help="train one variant", description=VARIANT_HELP)
    p.add_argument("--variant", choices=sorted(VARIANTS), help=VARIANT_HELP)
    p = sub.add_parser("evaluate", parents=[common], help="score a checkpoint on a JSONL file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, metavar="JSONL")
    p.add_argument("--grammar", metavar="PATH", help="grammar JSON for the consistency score")
    p = sub.add_parser("infer", parents=[common], help="predict a label and rationale for one input")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    sub.add_parser("ablate", parents=[common], help="variants x seeds table", description=VARIANT_HELP)
    sub.add_parser("schedule-dump", parents=[common], help="CSV of (t, pi_t, alpha_t)")
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen-data": cmd_gen_data,
        "train": cmd_train,
        "evaluate": cmd_evaluate,
        "ablate": cmd_ablate,
        "schedule-dump": cmd_schedule_dump,
    }
    try:
        if args.command == "infer":
            return cmd_infer(args, parser)
        return handlers[args.command](args)
    except (ConfigError, GrammarError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CheckpointFormatError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return 1
    except (ContractError, JsonlError, NumericError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
