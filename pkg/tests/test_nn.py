import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sedae.errors import ContractViolation, DimensionError, NumericError
from sedae.nn import (
    AdamState,
    adam_step,
    attention_forward,
    clip_grad_norm,
    cross_entropy,
    linear_forward,
    load_tensors,
    log_softmax,
    lstm_cell_forward,
    masked_softmax,
    save_tensors,
    softmax,
    tensors_digest,
)

from gradsuite import CASES


def _sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def test_linear_matches_naive_loops():
    rng = np.random.default_rng(0)
    x, W, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2)), rng.normal(size=2)
    y, _ = linear_forward(x, W, b)
    for i in range(3):
        for j in range(2):
            assert y[i, j] == pytest.approx(math.fsum(x[i, k] * W[k, j] for k in range(4)) + b[j], abs=1e-12)


def test_linear_shape_mismatch():
    with pytest.raises(DimensionError):
        linear_forward(np.zeros((2, 3)), np.zeros((4, 2)), np.zeros(2))


def test_lstm_cell_gate_equations():
    rng = np.random.default_rng(1)
    I, H = 3, 2
    x, h0, c0 = rng.normal(size=(1, I)), rng.normal(size=(1, H)), rng.normal(size=(1, H))
    Wx, Wh, b = rng.normal(size=(I, 4 * H)), rng.normal(size=(H, 4 * H)), rng.normal(size=4 * H)
    h, c, _ = lstm_cell_forward(x, h0, c0, Wx, Wh, b)
    for j in range(H):
        pre = [math.fsum(x[0, k] * Wx[k, g * H + j] for k in range(I))
               + math.fsum(h0[0, k] * Wh[k, g * H + j] for k in range(H)) + b[g * H + j] for g in range(4)]
        i_, f_, o_, g_ = _sig(pre[0]), _sig(pre[1]), _sig(pre[2]), math.tanh(pre[3])
        c_ref = f_ * c0[0, j] + i_ * g_
        assert c[0, j] == pytest.approx(c_ref, abs=1e-12)
        assert h[0, j] == pytest.approx(o_ * math.tanh(c_ref), abs=1e-12)


def test_lstm_cell_rejects_non_finite_state():
    H = 1
    with pytest.raises(NumericError):
        lstm_cell_forward(np.zeros((1, 1)), np.zeros((1, H)), np.array([[np.inf]]),
                          np.zeros((1, 4)), np.zeros((1, 4)), np.zeros(4))


def test_attention_matches_explicit_softmax():
    rng = np.random.default_rng(2)
    q, keys, W = rng.normal(size=(1, 2)), rng.normal(size=(1, 4, 3)), rng.normal(size=(2, 3))
    mask = np.array([[True, True, False, True]])
    ctx, weights, _ = attention_forward(q, keys, mask, W)
    scores = [math.fsum(q[0, a] * W[a, b] * keys[0, s, b] for a in range(2) for b in range(3)) for s in range(4)]
    z = [math.exp(scores[s]) if mask[0, s] else 0.0 for s in range(4)]
    w = [v / sum(z) for v in z]
    assert weights[0] == pytest.approx(w, abs=1e-12)
    assert weights[0, 2] == 0.0
    for b in range(3):
        assert ctx[0, b] == pytest.approx(sum(w[s] * keys[0, s, b] for s in range(4)), abs=1e-12)


def test_fully_masked_row_is_a_contract_violation():
    with pytest.raises(ContractViolation):
        masked_softmax(np.zeros((1, 3)), np.zeros((1, 3), dtype=bool))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 5), elements=st.floats(-50, 50)))
def test_softmax_and_log_softmax(z):
    p = softmax(z)
    assert np.allclose(p.sum(axis=-1), 1.0)
    for r in range(z.shape[0]):
        m = max(z[r])
        lse = m + math.log(math.fsum(math.exp(v - m) for v in z[r]))
        assert np.allclose(log_softmax(z)[r], z[r] - lse, atol=1e-10)


def test_cross_entropy_ignores_masked_positions():
    logits = np.log(np.array([[[0.5, 0.25, 0.25], [0.1, 0.1, 0.8]]]))
    loss, d = cross_entropy(logits, np.array([[0, 2]]), np.array([[True, False]]))
    assert loss == pytest.approx(-math.log(0.5))
    assert np.all(d[0, 1] == 0.0)


def test_cross_entropy_needs_a_live_token():
    with pytest.raises(ContractViolation):
        cross_entropy(np.zeros((1, 2, 3)), np.zeros((1, 2), dtype=int), np.zeros((1, 2), dtype=bool))


@pytest.mark.parametrize("layer", sorted(CASES))
def test_gradients_match_finite_differences(layer):
    for j in range(5):
        report = CASES[layer](np.random.default_rng([99, j]))
        assert report.ok, (layer, j, report.errors)


def test_adam_first_step_is_signed_lr():
    p = {"w": np.array([1.0, -2.0, 3.0])}
    g = {"w": np.array([0.5, -4.0, 1e-3])}
    state = AdamState.for_params(p, lr=0.1)
    adam_step(p, g, state)
    # with bias correction, m_hat = g and v_hat = g^2, so the step is lr * g / (|g| + eps)
    expected = np.array([1.0, -2.0, 3.0]) - 0.1 * g["w"] / (np.abs(g["w"]) + 1e-8)
    assert np.allclose(p["w"], expected, atol=1e-12)


def test_adam_recurrence():
    rng = np.random.default_rng(3)
    w = rng.normal(size=4)
    p = {"w": w.copy()}
    state = AdamState.for_params(p, lr=0.01, beta1=0.8, beta2=0.95, eps=1e-6)
    ref = w.copy()
    m = np.zeros(4)
    v = np.zeros(4)
    for t in range(1, 8):
        g = rng.normal(size=4)
        adam_step(p, {"w": g.copy()}, state)
        m = 0.8 * m + 0.2 * g
        v = 0.95 * v + 0.05 * g * g
        ref = ref - 0.01 * (m / (1 - 0.8 ** t)) / (np.sqrt(v / (1 - 0.95 ** t)) + 1e-6)
    assert np.allclose(p["w"], ref, atol=1e-12)


def test_adam_rejects_non_finite_gradient():
    p = {"w": np.zeros(2)}
    with pytest.raises(NumericError):
        adam_step(p, {"w": np.array([np.nan, 0.0])}, AdamState.for_params(p))


def test_clip_grad_norm():
    g = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert clip_grad_norm(g, 1.0) == pytest.approx(5.0)
    assert math.hypot(g["a"][0], g["b"][0]) == pytest.approx(1.0)
    g = {"a": np.array([0.3])}
    clip_grad_norm(g, 1.0)
    assert g["a"][0] == 0.3


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(4)
    t = {"a": rng.normal(size=(3, 2)), "b/c": np.array([np.pi]), "scalar": np.array(1.5).reshape(())}
    save_tensors(tmp_path / "x.ckpt", t)
    back = load_tensors(tmp_path / "x.ckpt")
    assert list(back) == list(t)
    for k in t:
        assert back[k].shape == t[k].shape
        assert back[k].tobytes() == t[k].tobytes()
    assert tensors_digest(back) == tensors_digest(t)


def test_checkpoint_layout(tmp_path):
    save_tensors(tmp_path / "x.ckpt", {"w": np.array([[1.0, 2.0]])})
    raw = (tmp_path / "x.ckpt").read_bytes()
    assert raw[:6] == b"SEDAE1"
    assert struct.unpack_from("<BI", raw, 6) == (1, 1)
    assert raw[-16:] == struct.pack("<2d", 1.0, 2.0)


def test_checkpoint_rejects_foreign_files(tmp_path):
    (tmp_path / "bad").write_bytes(b"NOTSEDAE")
    with pytest.raises(ContractViolation):
        load_tensors(tmp_path / "bad")
