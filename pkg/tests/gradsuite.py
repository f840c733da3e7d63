"""Randomized finite-difference checks, one generator per layer.

Each case draws fresh shapes and values, builds a scalar loss as a random
projection of the layer output, and compares the hand-written backward pass
with central differences on every input and parameter.
"""

import numpy as np

from sedae import classifier as cls
from sedae import model as m
from sedae.nn import (
    attention_backward,
    attention_forward,
    cross_entropy,
    embedding_backward,
    embedding_forward,
    grad_check,
    linear_backward,
    linear_forward,
    lstm_cell_backward,
    lstm_cell_forward,
)

TOL = 1e-4


def linear_case(rng):
    B, I, O = rng.integers(1, 5, size=3)
    t = {"x": rng.normal(size=(B, I)), "W": rng.normal(size=(I, O)), "b": rng.normal(size=O)}
    R = rng.normal(size=(B, O))

    def f(t):
        y, cache = linear_forward(t["x"], t["W"], t["b"])
        dx, dW, db = linear_backward(R, cache)
        return float(np.sum(R * y)), {"x": dx, "W": dW, "b": db}
    return grad_check(f, t, tol=TOL)


def lstm_case(rng):
    B, I, H = rng.integers(1, 4, size=3)
    t = {"x": rng.normal(size=(B, I)), "h": rng.normal(size=(B, H)), "c": rng.normal(size=(B, H)),
         "Wx": rng.normal(size=(I, 4 * H)), "Wh": rng.normal(size=(H, 4 * H)), "b": rng.normal(size=4 * H)}
    Rh, Rc = rng.normal(size=(B, H)), rng.normal(size=(B, H))

    def f(t):
        h, c, cache = lstm_cell_forward(t["x"], t["h"], t["c"], t["Wx"], t["Wh"], t["b"])
        g = lstm_cell_backward(Rh, Rc, cache)
        return float(np.sum(Rh * h) + np.sum(Rc * c)), dict(zip(("x", "h", "c", "Wx", "Wh", "b"), g))
    return grad_check(f, t, tol=TOL)


def attention_case(rng):
    B, S, H, K = rng.integers(1, 4, size=4)
    mask = rng.random((B, S)) < 0.7
    mask[:, 0] = True
    t = {"q": rng.normal(size=(B, H)), "k": rng.normal(size=(B, S, K)), "W": rng.normal(size=(H, K))}
    R = rng.normal(size=(B, K))

    def f(t):
        ctx, _, cache = attention_forward(t["q"], t["k"], mask, t["W"])
        dq, dk, dW = attention_backward(R, cache)
        return float(np.sum(R * ctx)), {"q": dq, "k": dk, "W": dW}
    return grad_check(f, t, tol=TOL)


def embedding_case(rng):
    V, E = rng.integers(2, 6), rng.integers(1, 4)
    ids = rng.integers(V, size=(rng.integers(1, 4), rng.integers(1, 5)))
    t = {"E": rng.normal(size=(V, E))}
    R = rng.normal(size=ids.shape + (E,))

    def f(t):
        out, cache = embedding_forward(ids, t["E"])
        return float(np.sum(R * out)), {"E": embedding_backward(R, cache)}
    return grad_check(f, t, tol=TOL)


def textcnn_case(rng):
    V, E, F = rng.integers(5, 9), rng.integers(1, 4), rng.integers(1, 4)
    widths = (1, 2, 3)[:rng.integers(1, 4)]
    model = cls.init_textcnn(V, E, rng, widths, F)
    for k in model.params:
        model.params[k] = model.params[k] + rng.normal(0.0, 0.5, size=model.params[k].shape)
    B = rng.integers(1, 4)
    lengths = rng.integers(1, 6, size=B)
    T = int(lengths.max())
    labels = rng.integers(2, size=B)
    t = dict(model.params)
    t["xe"] = rng.normal(size=(B, T, E))

    def f(t):
        model.params = {k: v for k, v in t.items() if k != "xe"}
        logits, cache = cls.forward_embedded(model, t["xe"], lengths=lengths)
        loss, dlogits = cross_entropy(logits, labels)
        dxe, grads = cls.backward_embedded(model, dlogits, cache)
        grads["xe"] = dxe[:, :T]
        return loss, grads
    return grad_check(f, t, tol=TOL)


def seq2seq_case(rng):
    """One full encoder-decoder training loss (both reconstruction and transfer objectives)."""
    V = int(rng.integers(6, 9))
    dims = m.ModelDims(vocab=V, emb=int(rng.integers(2, 4)), hidden=2, layers=int(rng.integers(1, 3)))
    params = m.init_params(dims, rng)
    for k in params:
        params[k] = params[k] + rng.normal(0.0, 0.3, size=params[k].shape)
    n = int(rng.integers(1, 4))
    src = [tuple(rng.integers(4, V, size=rng.integers(1, 4))) for _ in range(n)]
    tgt = [tuple(rng.integers(4, V, size=rng.integers(1, 4))) for _ in range(n)]
    style = list(rng.integers(2, size=n))
    if rng.random() < 0.5:
        return grad_check(lambda p: m.reconstruction_loss(p, dims, src, tgt, style), params, tol=TOL)
    clf = cls.init_textcnn(V, 2, rng, (1, 2), 2)
    lam = float(rng.choice([0.0, 0.3, 1.0]))

    def f(p):
        loss, _, grads = m.transfer_loss(p, dims, src, tgt, style, clf, lam)
        return loss, grads
    return grad_check(f, params, tol=TOL)


CASES = {
    "linear": linear_case,
    "lstm_cell": lstm_case,
    "attention": attention_case,
    "embedding": embedding_case,
    "textcnn": textcnn_case,
    "encoder_decoder": seq2seq_case,
}


def run_suite(n_configs=20, seed=0):
    """``{layer: [GradCheckReport, ...]}`` over ``n_configs`` random configurations per layer."""
    out = {}
    for k, (name, case) in enumerate(CASES.items()):
        out[name] = [case(np.random.default_rng([seed, k, j])) for j in range(n_configs)]
    return out
