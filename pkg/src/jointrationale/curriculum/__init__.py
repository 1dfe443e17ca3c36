from .checkpoint import (
    Checkpoint,
    CheckpointFormatError,
    load_checkpoint,
    payload_bytes,
    save_checkpoint,
)
from .inference import Predictor, infer
from .pipeline import VARIANTS, Variant, build_vocab, run_training
from .schedule import ScheduleConfig, ScheduleState, alpha_at, pi_at, state_at
from .trainer import (
    GOLD,
    PREDICTED,
    EncodedCorpus,
    OptimConfig,
    Stage2Mode,
    TrainConfig,
    TrainReport,
    choose_conditioning_label,
    report_identity_errors,
    train_stage1,
    train_stage2,
    validation_f1,
)

__all__ = [
    "Checkpoint",
    "CheckpointFormatError",
    "load_checkpoint",
    "payload_bytes",
    "save_checkpoint",
    "Predictor",
    "infer",
    "VARIANTS",
    "Variant",
    "build_vocab",
    "run_training",
    "ScheduleConfig",
    "ScheduleState",
    "alpha_at",
    "pi_at",
    "state_at",
    "GOLD",
    "PREDICTED",
    "EncodedCorpus",
    "OptimConfig",
    "Stage2Mode",
    "TrainConfig",
    "TrainReport",
    "choose_conditioning_label",
    "report_identity_errors",
    "train_stage1",
    "train_stage2",
    "validation_f1",
]
