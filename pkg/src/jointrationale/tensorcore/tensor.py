"""Dense float64 tensors with tape-based reverse-mode differentiation.

Operations record onto the innermost active :class:`Tape` whenever at least
one operand requires a gradient. Outside a tape (or inside ``paused()``) they
are plain numpy computations, which is what decoding uses.

    with Tape() as tape:
        loss = softmax_cross_entropy(matmul(x, w), targets)
    grads = backward(tape, loss, {"w": w})
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractError, DimensionError, NumericError, TapeReuseError

_ACTIVE: list["Tape | None"] = []


class Tensor:
    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else _not_scalar(self)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _not_scalar(t: Tensor):
    raise ContractError(f"expected a scalar, got shape {t.shape}")


class Node:
    __slots__ = ("out", "inputs", "backward")

    def __init__(self, out: Tensor, inputs: tuple[Tensor, ...], backward: Callable):
        self.out = out
        self.inputs = inputs
        self.backward = backward


class Tape:
    """Append-only record of primitive operations for one backward pass."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.pop()

    def __len__(self) -> int:
        return len(self.nodes)


@contextmanager
def paused():
    """Suspend recording, e.g. for a gradient-free decode inside a training step."""
    _ACTIVE.append(None)
    try:
        yield
    finally:
        _ACTIVE.pop()


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(out_data: np.ndarray, inputs: tuple[Tensor, ...], backward: Callable) -> Tensor:
    tape = _ACTIVE[-1] if _ACTIVE else None
    if tape is None or not any(t.requires_grad for t in inputs):
        return Tensor(out_data)
    out = Tensor(out_data, requires_grad=True)
    tape.nodes.append(Node(out, inputs, backward))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------- elementwise


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise DimensionError(f"add: cannot broadcast {a.shape} with {b.shape}") from None
    sa, sb = a.shape, b.shape
    return _record(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data - b.data
    except ValueError:
        raise DimensionError(f"sub: cannot broadcast {a.shape} with {b.shape}") from None
    sa, sb = a.shape, b.shape
    return _record(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise DimensionError(f"mul: cannot broadcast {a.shape} with {b.shape}") from None
    ad, bd = a.data, b.data
    return _record(
        out, (a, b), lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape))
    )


def scale(a, c: float) -> Tensor:
    a = _as_tensor(a)
    return _record(a.data * c, (a,), lambda g: (g * c,))


def gelu(a) -> Tensor:
    """Tanh approximation of GELU (smooth, so finite differences behave)."""
    a = _as_tensor(a)
    x = a.data
    k = math.sqrt(2.0 / math.pi)
    x2 = x * x
    t = np.tanh(k * x * (1.0 + 0.044715 * x2))
    out = 0.5 * x * (1.0 + t)

    def back(g):
        dt = (1.0 - t * t) * (k * (1.0 + 3 * 0.044715 * x2))
        return (g * (0.5 * (1.0 + t) + 0.5 * x * dt),)

    return _record(out, (a,), back)


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0
    return _record(a.data * mask, (a,), lambda g: (g * mask,))


# ---------------------------------------------------------------- reductions


def sum_all(a) -> Tensor:
    a = _as_tensor(a)
    shape = a.shape
    return _record(np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean_all(a) -> Tensor:
    a = _as_tensor(a)
    shape, n = a.shape, a.size
    return _record(
        np.asarray(a.data.mean()), (a,), lambda g: (np.broadcast_to(g / n, shape).copy(),)
    )


# ---------------------------------------------------------------- shape ops


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = _as_tensor(a)
    old = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot view {old} as {tuple(shape)}") from None
    return _record(out, (a,), lambda g: (g.reshape(old),))


def transpose(a, axes: Sequence[int]) -> Tensor:
    a = _as_tensor(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _record(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


# ---------------------------------------------------------------- linear algebra


def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes, broadcasting leading axes."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not align")
    ad, bd = a.data, b.data
    flat = bd.ndim == 2 and ad.ndim > 2
    try:
        if flat:
            # one GEMM instead of a loop over the leading axes
            out = (ad.reshape(-1, ad.shape[-1]) @ bd).reshape(ad.shape[:-1] + bd.shape[-1:])
        else:
            out = ad @ bd
    except ValueError:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not align") from None

    def back(g):
        ga = gb = None
        if flat:
            g2 = g.reshape(-1, g.shape[-1])
            if a.requires_grad:
                ga = (g2 @ bd.T).reshape(ad.shape)
            if b.requires_grad:
                gb = ad.reshape(-1, ad.shape[-1]).T @ g2
            return ga, gb
        if a.requires_grad:
            ga = _unbroadcast(g @ np.swapaxes(bd, -1, -2), ad.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.swapaxes(ad, -1, -2) @ g, bd.shape)
        return ga, gb

    return _record(out, (a, b), back)


def embedding(table, ids) -> Tensor:
    """Row lookup ``table[ids]``; ``ids`` is an integer array of any shape."""
    table = _as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(f"embedding id out of range for table with {table.shape[0]} rows")
    out = table.data[ids]
    rows, width = table.shape

    def back(g):
        gt = np.zeros((rows, width))
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, width))
        return (gt,)

    return _record(out, (table,), back)


# ---------------------------------------------------------------- normalisation / softmax


def _softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax(a, axis: int = -1) -> Tensor:
    a = _as_tensor(a)
    y = _softmax(a.data, axis)

    def back(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _record(y, (a,), back)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    x, gain, bias = _as_tensor(x), _as_tensor(gain), _as_tensor(bias)
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    rstd = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * rstd
    out = xhat * gain.data + bias.data
    width = xd.shape[-1]

    def back(g):
        dxhat = g * gain.data
        dx = rstd * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        flat_g = g.reshape(-1, width)
        return dx, (flat_g * xhat.reshape(-1, width)).sum(axis=0), flat_g.sum(axis=0)

    return _record(out, (x, gain, bias), back)


def softmax_cross_entropy(logits, targets, weights=None) -> Tensor:
    """Negative log-likelihood of ``targets`` under ``softmax(logits)``.

    ``logits`` has shape (..., V) and ``targets`` the leading shape. Without
    ``weights`` the result is the mean over all target positions; with
    ``weights`` it is ``sum(weights * nll)``, which is how padded batches
    express per-sequence means.
    """
    logits = _as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64)
    vocab = logits.shape[-1]
    lead = logits.shape[:-1]
    if targets.shape != lead:
        raise DimensionError(f"softmax_cross_entropy: logits {logits.shape} vs targets {targets.shape}")
    if targets.size == 0:
        raise ContractError("softmax_cross_entropy needs at least one target")
    if targets.min() < 0 or targets.max() >= vocab:
        raise IndexError(f"target id out of range for vocabulary of size {vocab}")
    if weights is None:
        w = np.full(lead, 1.0 / targets.size)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != lead:
            raise DimensionError(f"softmax_cross_entropy: weights {w.shape} vs targets {lead}")

    flat = logits.data.reshape(-1, vocab)
    tflat = targets.reshape(-1)
    shifted = flat - flat.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    nll = log_z - shifted[np.arange(tflat.size), tflat]
    loss = float((w.reshape(-1) * nll).sum())
    if not math.isfinite(loss):
        raise NumericError("softmax_cross_entropy produced a non-finite loss")

    def back(g):
        p = np.exp(shifted - log_z[:, None])
        p[np.arange(tflat.size), tflat] -= 1.0
        p *= (w.reshape(-1) * g)[:, None]
        return (p.reshape(logits.shape),)

    return _record(np.asarray(loss), (logits,), back)


# ---------------------------------------------------------------- backward


def backward(
    tape: Tape,
    loss: Tensor,
    params: Mapping[str, Tensor] | Iterable[Tensor] | None = None,
) -> dict[str, np.ndarray]:
    """Gradients of a scalar ``loss`` with respect to ``params``.

    Parameters that the loss does not reach get zero gradients. With
    ``params=None`` every named leaf seen on the tape is reported.
    """
    if tape.consumed:
        raise TapeReuseError("backward already ran on this tape")
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape.consumed = True

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.out), None)
        if g is None:
            continue
        for inp, gi in zip(node.inputs, node.backward(g)):
            if gi is None or not inp.requires_grad:
                continue
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi
                leaves[key] = inp

    if params is None:
        named = {t.name: t for k, t in leaves.items() if t.name is not None and k in grads}
    elif isinstance(params, Mapping):
        named = dict(params)
    else:
        named = {t.name: t for t in params}
    out = {}
    for name, t in named.items():
        g = grads.get(id(t))
        out[name] = np.zeros_like(t.data) if g is None else g.reshape(t.shape)
    return out


def check_finite(t: Tensor, what: str = "tensor") -> Tensor:
    if not np.isfinite(t.data).all():
        raise NumericError(f"{what} contains non-finite values")
    return t
