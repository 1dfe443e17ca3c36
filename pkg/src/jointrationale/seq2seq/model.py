"""Compact pre-norm transformer encoder-decoder over the tensorcore tape."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..tensorcore import (
    ContractError,
    Rng,
    Tensor,
    add,
    embedding,
    gelu,
    layer_norm,
    matmul,
    paused,
    reshape,
    scale,
    softmax,
    softmax_cross_entropy,
    transpose,
)
from .vocab import BOS_ID, EOS_ID, PAD_ID

NEG_INF = -1e9


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    d_ff: int = 128
    enc_layers: int = 2
    dec_layers: int = 2
    max_len: int = 128

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ContractError(f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}")
        for key in ("vocab_size", "d_model", "n_heads", "d_ff", "max_len"):
            if getattr(self, key) <= 0:
                raise ContractError(f"model config field {key} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def _param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    d, f, v = cfg.d_model, cfg.d_ff, cfg.vocab_size
    shapes: dict[str, tuple[int, ...]] = {"embed": (v, d)}

    def ln(prefix):
        shapes[f"{prefix}.g"] = (d,)
        shapes[f"{prefix}.b"] = (d,)

    def attn(prefix):
        for w in ("wq", "wk", "wv", "wo"):
            shapes[f"{prefix}.{w}"] = (d, d)

    def ff(prefix):
        shapes[f"{prefix}.w1"] = (d, f)
        shapes[f"{prefix}.b1"] = (f,)
        shapes[f"{prefix}.w2"] = (f, d)
        shapes[f"{prefix}.b2"] = (d,)

    for i in range(cfg.enc_layers):
        ln(f"enc.{i}.ln1")
        attn(f"enc.{i}.self")
        ln(f"enc.{i}.ln2")
        ff(f"enc.{i}.ff")
    ln("enc.ln")
    for i in range(cfg.dec_layers):
        ln(f"dec.{i}.ln1")
        attn(f"dec.{i}.self")
        ln(f"dec.{i}.ln2")
        attn(f"dec.{i}.cross")
        ln(f"dec.{i}.ln3")
        ff(f"dec.{i}.ff")
    ln("dec.ln")
    shapes["out.w"] = (d, v)
    shapes["out.b"] = (v,)
    return shapes


class ModelParams:
    """Named parameter tensors plus the architecture they belong to."""

    def __init__(self, config: ModelConfig, tensors: dict[str, Tensor]):
        expected = _param_shapes(config)
        if set(expected) != set(tensors):
            missing = sorted(set(expected) - set(tensors))
            extra = sorted(set(tensors) - set(expected))
            raise ContractError(f"parameter table mismatch: missing={missing} extra={extra}")
        for name, shape in expected.items():
            if tensors[name].shape != shape:
                raise ContractError(f"{name}: expected shape {shape}, got {tensors[name].shape}")
        self.config = config
        self.tensors = {name: tensors[name] for name in expected}
        self._pos = sinusoidal_positions(config.max_len, config.d_model)

    @classmethod
    def init(cls, config: ModelConfig, rng: Rng) -> "ModelParams":
        tensors = {}
        for name, shape in _param_shapes(config).items():
            leaf = name.rsplit(".", 1)[-1]
            if len(shape) == 2:
                limit = math.sqrt(6.0 / (shape[0] + shape[1]))
                data = (rng.uniform_array(shape[0] * shape[1]) * 2.0 - 1.0) * limit
                data = data.reshape(shape)
            elif leaf == "g":
                data = np.ones(shape)
            else:
                data = np.zeros(shape)
            tensors[name] = Tensor(data, requires_grad=True, name=name)
        return cls(config, tensors)

    @classmethod
    def from_arrays(cls, config: ModelConfig, arrays: dict[str, np.ndarray]) -> "ModelParams":
        return cls(
            config,
            {k: Tensor(np.array(v, dtype=np.float64), requires_grad=True, name=k) for k, v in arrays.items()},
        )

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def items(self):
        return self.tensors.items()

    def snapshot(self) -> dict[str, np.ndarray]:
        # optimizer_step replaces arrays instead of mutating them, so references suffice
        return {k: t.data for k, t in self.tensors.items()}

    def restore(self, arrays: dict[str, np.ndarray]) -> None:
        for k, t in self.tensors.items():
            t.data = arrays[k]

    def copy(self) -> "ModelParams":
        return ModelParams.from_arrays(self.config, self.snapshot())

    def num_parameters(self) -> int:
        return sum(t.size for t in self.tensors.values())


def sinusoidal_positions(length: int, width: int) -> np.ndarray:
    pos = np.arange(length)[:, None]
    dim = np.arange(0, width, 2)[None, :]
    angle = pos / np.power(10000.0, dim / width)
    table = np.zeros((length, width))
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle[:, : width // 2])
    return table


# ---------------------------------------------------------------- batching


def pad_batch(seqs: Sequence[Sequence[int]], pad: int = PAD_ID) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad to a rectangle; returns (ids, mask) with mask True on real tokens."""
    width = max(1, max((len(s) for s in seqs), default=1))
    ids = np.full((len(seqs), width), pad, dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=bool)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
        mask[i, : len(s)] = True
    return ids, mask


def _check_length(seq: Sequence[int], limit: int, what: str) -> None:
    if len(seq) > limit:
        raise ContractError(f"{what} has {len(seq)} tokens, limit is {limit}")


# ---------------------------------------------------------------- layers


def _attention(params: ModelParams, prefix: str, q_in: Tensor, kv_in: Tensor, mask: np.ndarray) -> Tensor:
    cfg = params.config
    b, lq, d = q_in.shape
    lk = kv_in.shape[1]
    h, dh = cfg.n_heads, d // cfg.n_heads

    def heads(x, w, length):
        return transpose(reshape(matmul(x, params[f"{prefix}.{w}"]), (b, length, h, dh)), (0, 2, 1, 3))

    q = heads(q_in, "wq", lq)
    k = heads(kv_in, "wk", lk)
    v = heads(kv_in, "wv", lk)
    scores = add(scale(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh)), mask)
    ctx = matmul(softmax(scores), v)
    ctx = reshape(transpose(ctx, (0, 2, 1, 3)), (b, lq, d))
    return matmul(ctx, params[f"{prefix}.wo"])


def _feed_forward(params: ModelParams, prefix: str, x: Tensor) -> Tensor:
    hidden = gelu(add(matmul(x, params[f"{prefix}.w1"]), params[f"{prefix}.b1"]))
    return add(matmul(hidden, params[f"{prefix}.w2"]), params[f"{prefix}.b2"])


def _ln(params: ModelParams, prefix: str, x: Tensor) -> Tensor:
    return layer_norm(x, params[f"{prefix}.g"], params[f"{prefix}.b"])


def encode(params: ModelParams, src: np.ndarray, src_mask: np.ndarray) -> Tensor:
    """Encoder states (B, S, d) for padded source ids."""
    cfg = params.config
    s = src.shape[1]
    x = add(embedding(params["embed"], src), params._pos[:s])
    key_mask = np.where(src_mask, 0.0, NEG_INF)[:, None, None, :]
    for i in range(cfg.enc_layers):
        x = _enc_layer(params, i, x, key_mask)
    return _ln(params, "enc.ln", x)


def _enc_layer(params: ModelParams, i: int, x: Tensor, key_mask: np.ndarray) -> Tensor:
    h = _ln(params, f"enc.{i}.ln1", x)
    x = add(x, _attention(params, f"enc.{i}.self", h, h, key_mask))
    return add(x, _feed_forward(params, f"enc.{i}.ff", _ln(params, f"enc.{i}.ln2", x)))


def decoder_logits(
    params: ModelParams, memory: Tensor, src_mask: np.ndarray, dec_in: np.ndarray
) -> Tensor:
    """Next-token logits (B, L, V) for decoder inputs ``dec_in`` (BOS-prefixed)."""
    cfg = params.config
    length = dec_in.shape[1]
    y = add(embedding(params["embed"], dec_in), params._pos[:length])
    causal = np.triu(np.full((length, length), NEG_INF), k=1)[None, None]
    cross_mask = np.where(src_mask, 0.0, NEG_INF)[:, None, None, :]
    for i in range(cfg.dec_layers):
        h = _ln(params, f"dec.{i}.ln1", y)
        y = add(y, _attention(params, f"dec.{i}.self", h, h, causal))
        y = add(y, _attention(params, f"dec.{i}.cross", _ln(params, f"dec.{i}.ln2", y), memory, cross_mask))
        y = add(y, _feed_forward(params, f"dec.{i}.ff", _ln(params, f"dec.{i}.ln3", y)))
    return project(params, _ln(params, "dec.ln", y))


def project(params: ModelParams, h: Tensor) -> Tensor:
    return add(matmul(h, params["out.w"]), params["out.b"])


# ---------------------------------------------------------------- losses


def batch_nll(
    params: ModelParams, prompts: Sequence[Sequence[int]], targets: Sequence[Sequence[int]]
) -> Tensor:
    """Mean over examples of each example's mean per-token NLL (EOS included).

    The decoder is teacher-forced on the gold prefix.
    """
    if not prompts or len(prompts) != len(targets):
        raise ContractError("batch_nll needs equally many (non-zero) prompts and targets")
    limit = params.config.max_len
    for p, t in zip(prompts, targets):
        _check_length(p, limit, "prompt")
        _check_length(t, limit - 1, "target")
    src, src_mask = pad_batch(prompts)
    dec_in, _ = pad_batch([[BOS_ID, *t] for t in targets])
    dec_out, out_mask = pad_batch([[*t, EOS_ID] for t in targets])
    lengths = out_mask.sum(axis=1, keepdims=True)
    weights = out_mask / (lengths * len(targets))
    memory = encode(params, src, src_mask)
    logits = decoder_logits(params, memory, src_mask, dec_in)
    return softmax_cross_entropy(logits, dec_out, weights)


def forward_nll(params: ModelParams, prompt_ids: Sequence[int], target_ids: Sequence[int]) -> Tensor:
    return batch_nll(params, [prompt_ids], [target_ids])


# ---------------------------------------------------------------- decoding


def batch_greedy_decode(
    params: ModelParams, prompts: Sequence[Sequence[int]], max_len: int
) -> list[list[int]]:
    """Argmax decoding, stopping at EOS or ``max_len`` tokens; EOS is not returned.

    Never records on a tape. Ties go to the lowest token id.
    """
    if max_len < 1:
        raise ContractError("max_len must be at least 1")
    if not prompts:
        return []
    limit = params.config.max_len
    for p in prompts:
        _check_length(p, limit, "prompt")
    max_len = min(max_len, limit - 1)
    with paused():
        src, src_mask = pad_batch(prompts)
        memory = encode(params, src, src_mask)
        n = len(prompts)
        out = np.zeros((n, 0), dtype=np.int64)
        done = np.zeros(n, dtype=bool)
        lengths = np.full(n, max_len)
        for step in range(max_len):
            dec_in = np.concatenate([np.full((n, 1), BOS_ID), out], axis=1)
            logits = decoder_logits(params, memory, src_mask, dec_in).data[:, -1, :]
            nxt = logits.argmax(axis=1)
            finished_now = (nxt == EOS_ID) & ~done
            lengths[finished_now] = step
            done |= finished_now
            out = np.concatenate([out, nxt[:, None]], axis=1)
            if done.all():
                break
    return [out[i, : lengths[i]].tolist() for i in range(n)]


def greedy_decode(params: ModelParams, prompt_ids: Sequence[int], max_len: int) -> list[int]:
    return batch_greedy_decode(params, [prompt_ids], max_len)[0]
