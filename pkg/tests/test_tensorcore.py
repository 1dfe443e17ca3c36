import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jointrationale.tensorcore import (
    ContractError,
    DimensionError,
    NumericError,
    OptimizerState,
    Rng,
    Tape,
    TapeReuseError,
    Tensor,
    add,
    backward,
    clip_grad_norm,
    embedding,
    gelu,
    layer_norm,
    matmul,
    mul,
    optimizer_step,
    reshape,
    rng_uniform,
    scale,
    softmax,
    softmax_cross_entropy,
    sum_all,
    transpose,
)

from .oracles import central_difference, relative_error


def param(data, name):
    return Tensor(np.array(data, dtype=float), requires_grad=True, name=name)


# ---------------------------------------------------------------- matmul


def test_matmul_identity():
    b = np.arange(12.0).reshape(3, 4)
    assert np.array_equal(matmul(np.eye(3), b).data, b)


def test_matmul_hand_case():
    out = matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[1.0], [1.0]]))
    assert np.array_equal(out.data, [[3.0], [7.0]])


def test_matmul_zero_annihilates():
    b = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(matmul(np.zeros((4, 2)), b).data, np.zeros((4, 3)))


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_records_on_tape():
    w = param(np.ones((2, 2)), "w")
    with Tape() as tape:
        matmul(np.ones((1, 2)), w)
    assert len(tape) == 1


# ---------------------------------------------------------------- cross entropy


def test_cross_entropy_uniform():
    loss = softmax_cross_entropy(np.zeros((1, 8)), [5])
    assert loss.item() == pytest.approx(math.log(8), abs=1e-12)


def test_cross_entropy_near_one_hot():
    logits = np.zeros((1, 8))
    logits[0, 3] = 30.0
    assert softmax_cross_entropy(logits, [3]).item() < 1e-9


def test_cross_entropy_hand_value():
    expected = -math.log(math.exp(3) / (math.exp(1) + math.exp(2) + math.exp(3)))
    assert softmax_cross_entropy(np.array([[1.0, 2.0, 3.0]]), [2]).item() == pytest.approx(expected, abs=1e-14)


def test_cross_entropy_target_out_of_range():
    with pytest.raises(IndexError):
        softmax_cross_entropy(np.zeros((2, 4)), [1, 4])


def test_cross_entropy_is_batch_mean():
    logits = np.array([[1.0, 2.0, 3.0], [0.5, 0.0, -1.0]])
    each = [softmax_cross_entropy(logits[i : i + 1], [t]).item() for i, t in enumerate([2, 0])]
    assert softmax_cross_entropy(logits, [2, 0]).item() == pytest.approx(sum(each) / 2, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 5), elements=st.floats(-50, 50)), st.lists(st.integers(0, 4), min_size=3, max_size=3))
def test_cross_entropy_non_negative(logits, targets):
    assert softmax_cross_entropy(logits, targets).item() >= 0.0


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (4, 7), elements=st.floats(-300, 300)))
def test_softmax_rows_sum_to_one(x):
    rows = softmax(x).data.sum(axis=1)
    assert np.all(np.abs(rows - 1.0) <= 1e-12)


# ---------------------------------------------------------------- backward


def test_backward_sum_of_squares():
    x = param([1.0, -2.0, 3.5], "x")
    with Tape() as tape:
        loss = sum_all(mul(x, x))
    grads = backward(tape, loss, {"x": x})
    assert np.allclose(grads["x"], 2 * x.data)


def test_backward_constant_gives_zero():
    x = param([1.0, 2.0], "x")
    with Tape() as tape:
        loss = sum_all(Tensor([4.0]))
    assert np.array_equal(backward(tape, loss, {"x": x})["x"], np.zeros(2))


def test_unreached_parameter_gets_zero_gradient():
    x, y = param([1.0], "x"), param([2.0, 3.0], "y")
    with Tape() as tape:
        loss = sum_all(scale(x, 3.0))
    grads = backward(tape, loss, {"x": x, "y": y})
    assert grads["x"] == pytest.approx([3.0])
    assert np.array_equal(grads["y"], np.zeros(2))


def test_backward_rejects_non_scalar():
    x = param([1.0, 2.0], "x")
    with Tape() as tape:
        y = scale(x, 2.0)
    with pytest.raises(ContractError):
        backward(tape, y, {"x": x})


def test_second_backward_is_an_error():
    x = param([1.0], "x")
    with Tape() as tape:
        loss = sum_all(mul(x, x))
    backward(tape, loss, {"x": x})
    with pytest.raises(TapeReuseError):
        backward(tape, loss, {"x": x})


def test_tape_linearity():
    x = param(np.ones((2, 3)), "x")
    with Tape() as tape:
        y = add(x, 1.0)
        y = mul(y, y)
        y = reshape(y, (3, 2))
        y = transpose(y, (1, 0))
        loss = sum_all(y)
    assert len(tape) == 5
    calls = []
    for node in tape.nodes:
        inner = node.backward
        node.backward = lambda g, inner=inner: calls.append(1) or inner(g)
    backward(tape, loss, {"x": x})
    assert len(calls) == 5


def test_no_recording_without_tape():
    x = param([1.0], "x")
    out = mul(x, x)
    assert not out.requires_grad


def _two_layer_loss(arrays, xs, targets):
    h = gelu(add(matmul(xs, arrays["w1"]), arrays["b1"]))
    h = layer_norm(h, arrays["g"], arrays["beta"])
    logits = add(matmul(h, arrays["w2"]), arrays["b2"])
    return softmax_cross_entropy(logits, targets)


def test_two_layer_model_matches_finite_differences():
    rng = np.random.default_rng(3)
    arrays_ = {
        "w1": rng.normal(size=(5, 7)),
        "b1": rng.normal(size=7),
        "g": 1 + 0.1 * rng.normal(size=7),
        "beta": 0.1 * rng.normal(size=7),
        "w2": rng.normal(size=(7, 4)),
        "b2": rng.normal(size=4),
    }
    xs = rng.normal(size=(6, 5))
    targets = rng.integers(0, 4, size=6)
    params = {k: Tensor(v, requires_grad=True, name=k) for k, v in arrays_.items()}
    with Tape() as tape:
        loss = _two_layer_loss(params, xs, targets)
    grads = backward(tape, loss, params)

    def f():
        return _two_layer_loss({k: Tensor(v) for k, v in arrays_.items()}, xs, targets).item()

    for name, arr in arrays_.items():
        numeric = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            numeric[idx] = central_difference(f, arrays_, name, idx)
        assert relative_error(grads[name], numeric) <= 1e-4, name


@pytest.mark.parametrize(
    "op, shapes",
    [
        (lambda a, b: mul(a, b), [(3, 4), (4,)]),
        (lambda a, b: add(a, b), [(2, 3, 4), (1, 4)]),
        (lambda a, b: matmul(a, b), [(2, 3, 4), (2, 4, 5)]),
        (lambda a, b: matmul(a, b), [(3, 4), (4, 2)]),
        (lambda a, b: matmul(a, b), [(2, 3, 4), (4, 2)]),
        (lambda a, b: mul(softmax(a), b), [(3, 5), (3, 5)]),
        (lambda a, b: mul(transpose(reshape(a, (2, 6)), (1, 0)), b), [(3, 4), (6, 2)]),
        (lambda a, b: mul(gelu(a), b), [(4, 3), (4, 3)]),
    ],
)
def test_primitive_gradients(op, shapes):
    rng = np.random.default_rng(len(shapes[0]) + len(shapes[1]))
    arrays_ = {f"p{i}": rng.normal(size=s) for i, s in enumerate(shapes)}
    params = {k: Tensor(v, requires_grad=True, name=k) for k, v in arrays_.items()}
    with Tape() as tape:
        loss = sum_all(mul(op(*params.values()), 1.0))
    grads = backward(tape, loss, params)

    def f():
        return sum_all(op(*(Tensor(v) for v in arrays_.values()))).item()

    for name, arr in arrays_.items():
        numeric = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            numeric[idx] = central_difference(f, arrays_, name, idx)
        assert relative_error(grads[name], numeric) <= 1e-6, name


def test_embedding_gradient_accumulates_repeated_ids():
    table = param(np.arange(12.0).reshape(4, 3), "table")
    with Tape() as tape:
        loss = sum_all(embedding(table, np.array([[1, 1], [3, 1]])))
    g = backward(tape, loss, {"table": table})["table"]
    assert np.array_equal(g[:, 0], [0.0, 3.0, 0.0, 1.0])


def test_embedding_out_of_range():
    with pytest.raises(IndexError):
        embedding(np.zeros((3, 2)), [3])


# ---------------------------------------------------------------- optimizer


def test_zero_grads_without_decay_is_fixed_point():
    p = {"w": param([1.0, -2.0], "w")}
    state = OptimizerState.fresh(p, weight_decay=0.0)
    optimizer_step(p, {"w": np.zeros(2)}, state)
    assert np.array_equal(p["w"].data, [1.0, -2.0])


def test_zero_grads_with_decay_scales_params():
    p = {"w": param([1.0, -2.0], "w")}
    state = OptimizerState.fresh(p, lr=0.1, weight_decay=0.5)
    optimizer_step(p, {"w": np.zeros(2)}, state)
    assert np.allclose(p["w"].data, np.array([1.0, -2.0]) * (1 - 0.1 * 0.5), rtol=0, atol=1e-15)


def test_scalar_adamw_by_hand():
    lr, b1, b2, eps, wd = 0.01, 0.9, 0.999, 1e-8, 0.1
    p = {"w": param([0.5], "w")}
    state = OptimizerState.fresh(p, lr=lr, beta1=b1, beta2=b2, epsilon=eps, weight_decay=wd)
    theta = 0.5
    m = v = 0.0
    for t, g in enumerate([0.3, -0.2, 0.7], start=1):
        optimizer_step(p, {"w": np.array([g])}, state)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        theta = theta * (1 - lr * wd) - lr * m_hat / (math.sqrt(v_hat) + eps)
        assert p["w"].data[0] == pytest.approx(theta, abs=1e-15)
    assert state.step == 3


def test_optimizer_rejects_non_finite_gradient_by_name():
    p = {"layer.w": param([1.0], "layer.w")}
    state = OptimizerState.fresh(p)
    with pytest.raises(NumericError, match="layer.w"):
        optimizer_step(p, {"layer.w": np.array([np.nan])}, state)


def test_optimizer_shape_mismatch():
    p = {"w": param([1.0, 2.0], "w")}
    with pytest.raises(DimensionError):
        optimizer_step(p, {"w": np.zeros(3)}, OptimizerState.fresh(p))


def test_optimizer_is_deterministic():
    def run():
        p = {"w": param(np.linspace(-1, 1, 5), "w")}
        state = OptimizerState.fresh(p, weight_decay=0.01)
        for g in (np.full(5, 0.1), np.linspace(0, 1, 5)):
            optimizer_step(p, {"w": g}, state)
        return p["w"].data.tobytes(), state.m["w"].tobytes(), state.v["w"].tobytes()

    assert run() == run()


def test_clip_grad_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert clip_grad_norm(grads, 1.0) == pytest.approx(5.0)
    assert math.hypot(grads["a"][0], grads["b"][0]) == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------- rng


def test_rng_reference_vectors():
    r = Rng(0)
    assert [r.next_u64() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
    r = Rng(1234567)
    assert [r.next_u64() for _ in range(2)] == [6457827717110365317, 3203168211198807973]


def test_rng_golden_first_draw():
    assert rng_uniform(Rng(42)) == 0.7415648787718233


def test_rng_same_seed_same_sequence():
    a, b = Rng(7), Rng(7)
    assert [a.uniform() for _ in range(1000)] == [b.uniform() for _ in range(1000)]


def test_rng_mean():
    assert 0.49 <= Rng(11).uniform_array(100_000).mean() <= 0.51


def test_uniform_array_matches_scalar_draws():
    a, b = Rng(5), Rng(5)
    bulk = a.uniform_array(257)
    assert bulk.tolist() == [b.uniform() for _ in range(257)]
    assert a.state == b.state


def test_rng_range_and_split():
    r = Rng(3)
    draws = r.uniform_array(10_000)
    assert draws.min() >= 0.0 and draws.max() < 1.0
    child = r.split()
    assert child.uniform() != r.uniform()
