"""Checkpoint container and its on-disk format.

A checkpoint file is one line of UTF-8 JSON (the manifest), a newline, then
the tensors as little-endian float32 in manifest order. Each manifest tensor
entry records name, shape, dtype (``"<f4"``), byte offset and byte length
relative to the start of the payload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..seq2seq import ModelConfig, ModelParams, Vocab

FORMAT_NAME = "jointrationale-checkpoint"
FORMAT_VERSION = 1


class CheckpointFormatError(ValueError):
    pass


@dataclass
class Checkpoint:
    model_config: ModelConfig
    arrays: dict[str, np.ndarray]
    vocab: Vocab
    step: int = 0
    val_score: float | None = None
    rng_state: dict[str, int] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @classmethod
    def capture(cls, params: ModelParams, vocab: Vocab, **kwargs) -> "Checkpoint":
        return cls(params.config, params.snapshot(), vocab, **kwargs)

    def to_params(self) -> ModelParams:
        return ModelParams.from_arrays(self.model_config, self.arrays)


def payload_bytes(ckpt: Checkpoint) -> bytes:
    return b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in ckpt.arrays.values())


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    tensors = []
    offset = 0
    for name, arr in ckpt.arrays.items():
        nbytes = int(arr.size) * 4
        tensors.append({"name": name, "shape": list(arr.shape), "dtype": "<f4", "offset": offset, "nbytes": nbytes})
        offset += nbytes
    manifest = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "model_config": ckpt.model_config.to_dict(),
        "step": ckpt.step,
        "val_score": ckpt.val_score,
        "rng_state": ckpt.rng_state,
        "vocab": ckpt.vocab.to_dict(),
        "meta": ckpt.meta,
        "tensors": tensors,
        "payload_nbytes": offset,
    }
    header = json.dumps(manifest, sort_keys=True, ensure_ascii=False).encode("utf-8")
    Path(path).write_bytes(header + b"\n" + payload_bytes(ckpt))


def read_manifest(path: str | Path) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    cut = raw.find(b"\n")
    if cut < 0:
        raise CheckpointFormatError(f"{path}: no manifest line")
    try:
        manifest = json.loads(raw[:cut].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"{path}: unreadable manifest ({exc})") from None
    if manifest.get("format") != FORMAT_NAME:
        raise CheckpointFormatError(f"{path}: not a {FORMAT_NAME} file")
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointFormatError(
            f"{path}: format version {manifest.get('format_version')!r}, this build reads {FORMAT_VERSION}"
        )
    payload = raw[cut + 1 :]
    if len(payload) != manifest["payload_nbytes"]:
        raise CheckpointFormatError(f"{path}: payload is {len(payload)} bytes, manifest says {manifest['payload_nbytes']}")
    return manifest, payload


def load_checkpoint(path: str | Path) -> Checkpoint:
    manifest, payload = read_manifest(path)
    arrays = {}
    for entry in manifest["tensors"]:
        if entry["dtype"] != "<f4":
            raise CheckpointFormatError(f"{path}: unsupported dtype {entry['dtype']!r}")
        chunk = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
        arrays[entry["name"]] = np.frombuffer(chunk, dtype="<f4").astype(np.float64).reshape(entry["shape"])
    return Checkpoint(
        model_config=ModelConfig(**manifest["model_config"]),
        arrays=arrays,
        vocab=Vocab.from_dict(manifest["vocab"]),
        step=manifest["step"],
        val_score=manifest["val_score"],
        rng_state=manifest["rng_state"],
        meta=manifest["meta"],
    )
