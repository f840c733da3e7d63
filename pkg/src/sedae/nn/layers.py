"""Forward/backward pairs for the handful of layers the models need.

Every ``*_forward`` returns its output plus a ``cache`` tuple; the matching
``*_backward`` consumes the upstream gradient and that cache. All arrays are
float64 numpy arrays; leading batch dimensions are allowed wherever noted.
"""

import numpy as np
from scipy.special import expit, logsumexp

from ..errors import ContractViolation, DimensionError, NumericError


def xavier_uniform(rng, shape):
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def sigmoid(x):
    return expit(x)


def softmax(x, axis=-1):
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(x, axis=-1):
    return x - logsumexp(x, axis=axis, keepdims=True)


def masked_softmax(scores, mask):
    """Softmax over the last axis restricted to positions where ``mask`` is true."""
    mask = np.asarray(mask, dtype=bool)
    if not np.all(mask.any(axis=-1)):
        raise ContractViolation("attention row with every position masked")
    z = np.where(mask, scores, -np.inf)
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.where(mask, np.exp(z), 0.0)
    return e / np.sum(e, axis=-1, keepdims=True)


def linear_forward(x, W, b):
    """Affine map ``y = x @ W + b``.

    Args:
        x: input of shape (..., D).
        W: weights of shape (D, M).
        b: bias of shape (M,).

    Returns:
        y of shape (..., M) and the cache for :func:`linear_backward`.
    """
    if x.shape[-1] != W.shape[0] or b.shape != (W.shape[1],):
        raise DimensionError(f"linear: x {x.shape}, W {W.shape}, b {b.shape}")
    return x @ W + b, (x, W)


def linear_backward(dy, cache):
    x, W = cache
    dx = dy @ W.T
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return dx, x2.T @ dy2, dy2.sum(axis=0)


def embedding_forward(ids, table):
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DimensionError("embedding id out of range")
    return table[ids], (ids, table.shape)


def embedding_backward(dout, cache):
    ids, shape = cache
    dtable = np.zeros(shape)
    np.add.at(dtable, ids.reshape(-1), dout.reshape(-1, shape[1]))
    return dtable


def lstm_cell_forward(x, h_prev, c_prev, Wx, Wh, b):
    """One LSTM step with gate order (input, forget, output, candidate).

    Args:
        x: input (B, D).
        h_prev, c_prev: previous hidden and cell state, (B, H).
        Wx: (D, 4H), Wh: (H, 4H), b: (4H,).

    Returns:
        h, c and a cache for :func:`lstm_cell_backward`.
    """
    H = h_prev.shape[-1]
    if Wx.shape != (x.shape[-1], 4 * H) or Wh.shape != (H, 4 * H) or c_prev.shape != h_prev.shape:
        raise DimensionError(f"lstm: x {x.shape}, h {h_prev.shape}, Wx {Wx.shape}, Wh {Wh.shape}")
    a = x @ Wx + h_prev @ Wh + b
    i = expit(a[..., :H])
    f = expit(a[..., H:2 * H])
    o = expit(a[..., 2 * H:3 * H])
    g = np.tanh(a[..., 3 * H:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    if not np.all(np.isfinite(c)):
        raise NumericError("non-finite LSTM cell state")
    return h, c, (x, h_prev, c_prev, Wx, Wh, i, f, o, g, tc)


def lstm_cell_backward(dh, dc, cache):
    x, h_prev, c_prev, Wx, Wh, i, f, o, g, tc = cache
    dc = dc + dh * o * (1.0 - tc * tc)
    da = np.concatenate(
        [
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dh * tc * o * (1.0 - o),
            dc * i * (1.0 - g * g),
        ],
        axis=-1,
    )
    dx = da @ Wx.T
    dh_prev = da @ Wh.T
    dc_prev = dc * f
    return dx, dh_prev, dc_prev, x.T @ da, h_prev.T @ da, da.sum(axis=0)


def attention_forward(query, keys, mask, W):
    """Bilinear ("general") attention.

    ``score[b, s] = query[b] @ W @ keys[b, s]``; weights are the masked
    softmax of the scores and the context is the weighted sum of keys.

    Args:
        query: decoder state (B, H).
        keys: encoder outputs (B, S, K).
        mask: boolean (B, S), true on real source positions.
        W: (H, K).
    """
    if keys.shape[1] == 0:
        raise ContractViolation("attention over an empty source")
    if mask.shape != keys.shape[:2]:
        raise DimensionError(f"attention mask {mask.shape} vs keys {keys.shape}")
    proj = query @ W
    scores = np.einsum("bsk,bk->bs", keys, proj)
    weights = masked_softmax(scores, mask)
    context = np.einsum("bs,bsk->bk", weights, keys)
    return context, weights, (query, keys, W, proj, weights)


def attention_backward(dcontext, cache):
    query, keys, W, proj, weights = cache
    dweights = np.einsum("bk,bsk->bs", dcontext, keys)
    dkeys = weights[..., None] * dcontext[:, None, :]
    dscores = weights * (dweights - np.sum(dweights * weights, axis=-1, keepdims=True))
    dproj = np.einsum("bs,bsk->bk", dscores, keys)
    dkeys += dscores[..., None] * proj[:, None, :]
    return dproj @ W.T, dkeys, query.T @ dproj


def cross_entropy(logits, targets, mask=None):
    """Mean token-level negative log-likelihood and its gradient.

    Args:
        logits: (..., V).
        targets: integer indices with shape ``logits.shape[:-1]``.
        mask: optional boolean array of the same shape; false entries are ignored.

    Returns:
        (loss, dlogits) where the loss is averaged over unmasked tokens.
    """
    targets = np.asarray(targets)
    V = logits.shape[-1]
    if targets.shape != logits.shape[:-1]:
        raise DimensionError(f"targets {targets.shape} vs logits {logits.shape}")
    if targets.size and targets.max() >= V:
        raise ContractViolation("target index outside the vocabulary")
    mask = np.ones(targets.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    n = int(mask.sum())
    if n == 0:
        raise ContractViolation("cross entropy over zero tokens")
    logp = log_softmax(logits)
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    loss = -float(np.sum(picked * mask)) / n
    dlogits = np.exp(logp)
    np.put_along_axis(
        dlogits, targets[..., None],
        np.take_along_axis(dlogits, targets[..., None], axis=-1) - 1.0, axis=-1,
    )
    dlogits *= mask[..., None] / n
    return loss, dlogits
