"""Shared encoder/decoder with style embeddings.

Encoder: stacked bidirectional LSTM over word embeddings. Decoder: stacked
LSTM whose initial hidden states come from a tanh bridge over the encoder's
final states, with bilinear attention on the top layer and an attentional
hidden state ``tanh(W [context; h])`` feeding the output projection. The
style embedding takes the place of the BOS embedding at the first decoder
step; it is the only way the target style enters the network.

Losses here are negative log-likelihoods (to be minimized).
"""

from dataclasses import dataclass

import numpy as np

from . import classifier as cls
from .corpus import EOS, PAD, pad_ids
from .errors import NumericError
from .nn import (
    attention_backward,
    attention_forward,
    cross_entropy,
    lstm_cell_backward,
    lstm_cell_forward,
    softmax,
    tensors_digest,
    xavier_uniform,
)

MAX_DECODE_LEN = 64


@dataclass(frozen=True)
class ModelDims:
    vocab: int
    emb: int = 512
    hidden: int = 512
    layers: int = 2


@dataclass
class DecodeOutput:
    ids: list       # generated id tuples, EOS stripped
    dists: list     # per sentence (steps, V) probability rows, including the EOS step when emitted
    style: str


def init_params(dims, rng):
    E, H, V = dims.emb, dims.hidden, dims.vocab
    p = {
        "emb": rng.normal(0.0, 1.0, size=(V, E)),
        "style": rng.normal(0.0, 1.0, size=(2, E)),
    }
    for l in range(dims.layers):
        d_in = E if l == 0 else 2 * H
        for d in ("f", "b"):
            p[f"enc{l}.{d}.Wx"] = xavier_uniform(rng, (d_in, 4 * H))
            p[f"enc{l}.{d}.Wh"] = xavier_uniform(rng, (H, 4 * H))
            p[f"enc{l}.{d}.b"] = np.zeros(4 * H)
        p[f"bridge{l}.W"] = xavier_uniform(rng, (2 * H, H))
        p[f"bridge{l}.b"] = np.zeros(H)
        d_in = E if l == 0 else H
        p[f"dec{l}.Wx"] = xavier_uniform(rng, (d_in, 4 * H))
        p[f"dec{l}.Wh"] = xavier_uniform(rng, (H, 4 * H))
        p[f"dec{l}.b"] = np.zeros(4 * H)
    p["attn.W"] = xavier_uniform(rng, (H, 2 * H))
    p["comb.W"] = xavier_uniform(rng, (3 * H, H))
    p["comb.b"] = np.zeros(H)
    p["out.W"] = xavier_uniform(rng, (H, V))
    p["out.b"] = np.zeros(V)
    return p


def zero_grads(params):
    return {k: np.zeros_like(v) for k, v in params.items()}


# ---------------------------------------------------------------- encoder

def encode(params, ids, mask, layers):
    """Bidirectional encoding of a padded batch.

    Returns (enc_out (B, S, 2H), init_h list of (B, H) per decoder layer, cache).
    """
    mask_f = np.asarray(mask, dtype=np.float64)
    B, S = ids.shape
    inp = params["emb"][ids]
    layer_caches, bridge_caches, init_h = [], [], []
    for l in range(layers):
        outs, finals, steps_by_dir = [], [], {}
        for d in ("f", "b"):
            Wx, Wh, b = params[f"enc{l}.{d}.Wx"], params[f"enc{l}.{d}.Wh"], params[f"enc{l}.{d}.b"]
            H = Wh.shape[0]
            h = np.zeros((B, H))
            c = np.zeros((B, H))
            out = np.zeros((B, S, H))
            steps = [None] * S
            for t in (range(S) if d == "f" else range(S - 1, -1, -1)):
                hn, cn, cc = lstm_cell_forward(inp[:, t], h, c, Wx, Wh, b)
                m = mask_f[:, t, None]
                h = m * hn + (1.0 - m) * h
                c = m * cn + (1.0 - m) * c
                out[:, t] = m * hn
                steps[t] = cc
            outs.append(out)
            finals.append(h)
            steps_by_dir[d] = steps
        cat = np.concatenate(finals, axis=-1)
        h0 = np.tanh(cat @ params[f"bridge{l}.W"] + params[f"bridge{l}.b"])
        init_h.append(h0)
        bridge_caches.append((cat, h0))
        layer_caches.append(steps_by_dir)
        inp = np.concatenate(outs, axis=-1)
    return inp, init_h, (ids, mask_f, layer_caches, bridge_caches)


def encode_backward(params, d_enc_out, d_init_h, cache, grads):
    ids, mask_f, layer_caches, bridge_caches = cache
    B, S = ids.shape
    layers = len(layer_caches)
    d_out = d_enc_out
    for l in range(layers - 1, -1, -1):
        cat, h0 = bridge_caches[l]
        dpre = d_init_h[l] * (1.0 - h0 * h0)
        grads[f"bridge{l}.W"] += cat.T @ dpre
        grads[f"bridge{l}.b"] += dpre.sum(axis=0)
        dcat = dpre @ params[f"bridge{l}.W"].T
        H = params[f"enc{l}.f.Wh"].shape[0]
        d_in = None
        for k, d in enumerate(("f", "b")):
            steps = layer_caches[l][d]
            dh = dcat[:, k * H:(k + 1) * H].copy()
            dc = np.zeros((B, H))
            dout = d_out[..., k * H:(k + 1) * H]
            for t in (range(S - 1, -1, -1) if d == "f" else range(S)):
                m = mask_f[:, t, None]
                dstate = dh + m * dout[:, t]
                dx, dhp, dcp, dWx, dWh, db = lstm_cell_backward(m * dstate, m * dc, steps[t])
                dh = (1.0 - m) * dstate + dhp
                dc = (1.0 - m) * dc + dcp
                grads[f"enc{l}.{d}.Wx"] += dWx
                grads[f"enc{l}.{d}.Wh"] += dWh
                grads[f"enc{l}.{d}.b"] += db
                if d_in is None:
                    d_in = np.zeros((B, S, dx.shape[-1]))
                d_in[:, t] += dx
        d_out = d_in
    np.add.at(grads["emb"], ids.reshape(-1), d_out.reshape(-1, d_out.shape[-1]))


# ---------------------------------------------------------------- decoder

def _dec_step(params, x, hs, cs, enc_out, src_mask, layers):
    cell_caches = []
    new_h, new_c = [], []
    inp = x
    for l in range(layers):
        h, c, cc = lstm_cell_forward(inp, hs[l], cs[l], params[f"dec{l}.Wx"], params[f"dec{l}.Wh"], params[f"dec{l}.b"])
        new_h.append(h)
        new_c.append(c)
        cell_caches.append(cc)
        inp = h
    ctx, _, att_cache = attention_forward(inp, enc_out, src_mask, params["attn.W"])
    cat = np.concatenate([ctx, inp], axis=-1)
    ht = np.tanh(cat @ params["comb.W"] + params["comb.b"])
    return ht, new_h, new_c, (cell_caches, att_cache, cat, ht)


def _step_input(params, t, style_idx, inp_ids):
    return params["style"][style_idx] if t == 0 else params["emb"][inp_ids[:, t]]


def decode_teacher(params, enc_out, src_mask, init_h, style_idx, inp_ids, layers):
    """Teacher-forced decoder pass; column 0 of ``inp_ids`` is replaced by the style embedding.

    Returns logits (B, T, V) and a cache for :func:`decode_backward`.
    """
    B, T = inp_ids.shape
    hs = list(init_h)
    cs = [np.zeros_like(h) for h in init_h]
    Ht = np.zeros((B, T, params["comb.b"].shape[0]))
    steps = []
    for t in range(T):
        x = _step_input(params, t, style_idx, inp_ids)
        ht, hs, cs, sc = _dec_step(params, x, hs, cs, enc_out, src_mask, layers)
        Ht[:, t] = ht
        steps.append(sc)
    logits = Ht @ params["out.W"] + params["out.b"]
    return logits, (Ht, steps, style_idx, inp_ids, enc_out.shape)


def decode_backward(params, dlogits, cache, grads):
    """Backprop through the decoder; returns (d_enc_out, d_init_h)."""
    Ht, steps, style_idx, inp_ids, enc_shape = cache
    B, T = inp_ids.shape
    layers = len(steps[0][0])
    grads["out.W"] += Ht.reshape(-1, Ht.shape[-1]).T @ dlogits.reshape(-1, dlogits.shape[-1])
    grads["out.b"] += dlogits.sum(axis=(0, 1))
    dH = dlogits @ params["out.W"].T
    d_enc = np.zeros(enc_shape)
    dh_carry = [np.zeros((B, Ht.shape[-1])) for _ in range(layers)]
    dc_carry = [np.zeros((B, Ht.shape[-1])) for _ in range(layers)]
    dX = None
    K = enc_shape[-1]
    for t in range(T - 1, -1, -1):
        cell_caches, att_cache, cat, ht = steps[t]
        dpre = dH[:, t] * (1.0 - ht * ht)
        grads["comb.W"] += cat.T @ dpre
        grads["comb.b"] += dpre.sum(axis=0)
        dcat = dpre @ params["comb.W"].T
        dq, dk, dWa = attention_backward(dcat[:, :K], att_cache)
        d_enc += dk
        grads["attn.W"] += dWa
        dabove = dcat[:, K:] + dq
        for l in range(layers - 1, -1, -1):
            dx, dhp, dcp, dWx, dWh, db = lstm_cell_backward(dabove + dh_carry[l], dc_carry[l], cell_caches[l])
            dh_carry[l] = dhp
            dc_carry[l] = dcp
            grads[f"dec{l}.Wx"] += dWx
            grads[f"dec{l}.Wh"] += dWh
            grads[f"dec{l}.b"] += db
            dabove = dx
        if dX is None:
            dX = np.zeros((B, T, dabove.shape[-1]))
        dX[:, t] = dabove
    np.add.at(grads["style"], style_idx, dX[:, 0])
    if T > 1:
        np.add.at(grads["emb"], inp_ids[:, 1:].reshape(-1), dX[:, 1:].reshape(-1, dX.shape[-1]))
    return d_enc, dh_carry


def greedy_decode(params, enc_out, src_mask, init_h, style_idx, layers, max_len=MAX_DECODE_LEN, keep_dists=False):
    """Greedy argmax decoding until every row has emitted EOS or ``max_len`` steps.

    Returns (list of id tuples without EOS, list of (steps, V) distributions or None).
    """
    B = enc_out.shape[0]
    hs = list(init_h)
    cs = [np.zeros_like(h) for h in init_h]
    out = np.full((B, max_len), PAD, dtype=np.int64)
    done = np.zeros(B, dtype=bool)
    lengths = np.full(B, max_len, dtype=np.int64)
    dists = [] if keep_dists else None
    prev = None
    for t in range(max_len):
        x = params["style"][style_idx] if t == 0 else params["emb"][prev]
        ht, hs, cs, _ = _dec_step(params, x, hs, cs, enc_out, src_mask, layers)
        logits = ht @ params["out.W"] + params["out.b"]
        if keep_dists:
            dists.append(softmax(logits))
        prev = np.argmax(logits, axis=-1)
        out[:, t] = prev
        newly = (~done) & (prev == EOS)
        lengths[newly] = t
        done |= newly
        if done.all():
            break
    seqs = [tuple(int(i) for i in out[b, :lengths[b]]) for b in range(B)]
    if keep_dists:
        stacked = np.stack(dists, axis=1)
        dists = [stacked[b, :min(lengths[b] + 1, stacked.shape[1])] for b in range(B)]
    return seqs, dists


# ---------------------------------------------------------------- batch helpers

def teacher_arrays(targets):
    """Decoder input/target/mask arrays for target id sequences (EOS appended)."""
    ids, _, lengths = pad_ids([tuple(t) for t in targets])
    B, T = ids.shape
    dec_in = np.full((B, T + 1), PAD, dtype=np.int64)
    dec_in[:, 1:] = ids
    dec_out = np.full((B, T + 1), PAD, dtype=np.int64)
    dec_out[:, :T] = ids
    dec_out[np.arange(B), lengths] = EOS
    mask = np.arange(T + 1)[None, :] <= lengths[:, None]
    return dec_in, dec_out, mask


def decode_limit(src_lengths):
    return int(min(MAX_DECODE_LEN, 2 * int(np.max(src_lengths)) + 4))


# ---------------------------------------------------------------- losses

def grouped_cross_entropy(logits, targets, mask, groups):
    """Sum over row groups of each group's mean token NLL (one group when ``groups`` is None)."""
    if groups is None:
        return cross_entropy(logits, targets, mask)
    groups = np.asarray(groups)
    total = 0.0
    dlogits = np.zeros_like(logits)
    for g in np.unique(groups):
        rows = groups == g
        loss, d = cross_entropy(logits[rows], targets[rows], mask[rows])
        total += loss
        dlogits[rows] = d
    return total, dlogits


def reconstruction_loss(params, dims, sources, targets, style_idx, groups=None):
    """Token-level NLL of ``targets`` given ``sources`` decoded with the given style embeddings.

    With ``groups`` the loss is the sum of per-group means (e.g. one group per style).
    """
    src_ids, src_mask, _ = pad_ids([tuple(s) for s in sources])
    enc_out, init_h, ecache = encode(params, src_ids, src_mask, dims.layers)
    dec_in, dec_out, tmask = teacher_arrays(targets)
    style_idx = np.asarray(style_idx, dtype=np.int64)
    logits, dcache = decode_teacher(params, enc_out, src_mask, init_h, style_idx, dec_in, dims.layers)
    loss, dlogits = grouped_cross_entropy(logits, dec_out, tmask, groups)
    if not np.isfinite(loss):
        raise NumericError("non-finite reconstruction loss")
    grads = zero_grads(params)
    d_enc, d_init = decode_backward(params, dlogits, dcache, grads)
    encode_backward(params, d_enc, d_init, ecache, grads)
    return loss, grads


def transfer_loss(params, dims, sources, targets, style_idx, classifier, lam, groups=None):
    """``lam * NLL(targets | sources) + (1 - lam) * style loss`` for one direction-mixed batch.

    The style term decodes ``sources`` greedily toward ``style_idx`` (no
    gradient through the argmax choices), re-runs the decoder teacher-forced on
    those choices to get differentiable distributions, and scores their
    expected embeddings with the frozen ``classifier``.

    With ``groups`` both terms are sums of per-group means.

    Returns (loss, parts, grads) with parts = {"mle": ..., "style": ...}.
    """
    style_idx = np.asarray(style_idx, dtype=np.int64)
    src_ids, src_mask, src_len = pad_ids([tuple(s) for s in sources])
    enc_out, init_h, ecache = encode(params, src_ids, src_mask, dims.layers)
    grads = zero_grads(params)
    d_enc = np.zeros_like(enc_out)
    d_init = [np.zeros_like(h) for h in init_h]
    parts = {"mle": 0.0, "style": 0.0}

    if lam > 0.0:
        dec_in, dec_out, tmask = teacher_arrays(targets)
        logits, dcache = decode_teacher(params, enc_out, src_mask, init_h, style_idx, dec_in, dims.layers)
        mle, dlogits = grouped_cross_entropy(logits, dec_out, tmask, groups)
        parts["mle"] = mle
        de, di = decode_backward(params, lam * dlogits, dcache, grads)
        d_enc += de
        for a, b in zip(d_init, di):
            a += b

    if lam < 1.0:
        gen, _ = greedy_decode(params, enc_out, src_mask, init_h, style_idx, dims.layers, decode_limit(src_len))
        # rows predicting the generated tokens; an empty output still feeds its first row
        lengths = np.array([max(len(g), 1) for g in gen])
        T = int(lengths.max())
        dec_in = np.full((len(gen), T), PAD, dtype=np.int64)
        for b, g in enumerate(gen):
            dec_in[b, 1:len(g[:T - 1]) + 1] = g[:T - 1]
        logits, dcache = decode_teacher(params, enc_out, src_mask, init_h, style_idx, dec_in, dims.layers)
        probs = softmax(logits)
        if groups is None:
            sl, dprobs = cls.style_loss(classifier, probs, lengths, style_idx)
        else:
            sl, dprobs = 0.0, np.zeros_like(probs)
            for g in np.unique(groups):
                rows = np.asarray(groups) == g
                l_g, d_g = cls.style_loss(classifier, probs[rows], lengths[rows], style_idx[rows])
                sl += l_g
                dprobs[rows] = d_g
        parts["style"] = sl
        dlogits = probs * (dprobs - np.sum(dprobs * probs, axis=-1, keepdims=True))
        de, di = decode_backward(params, (1.0 - lam) * dlogits, dcache, grads)
        d_enc += de
        for a, b in zip(d_init, di):
            a += b

    encode_backward(params, d_enc, d_init, ecache, grads)
    loss = lam * parts["mle"] + (1.0 - lam) * parts["style"]
    if not np.isfinite(loss):
        raise NumericError("non-finite transfer loss")
    return loss, parts, grads


def translate(params, dims, sources, style_idx, batch_size=128, keep_dists=False):
    """Greedy transfer of id sequences toward ``style_idx`` (scalar or per-sentence)."""
    style_idx = np.broadcast_to(np.asarray(style_idx, dtype=np.int64), (len(sources),))
    out_ids, out_dists = [], []
    for k in range(0, len(sources), batch_size):
        chunk = [tuple(s) for s in sources[k:k + batch_size]]
        ids, mask, lengths = pad_ids(chunk)
        enc_out, init_h, _ = encode(params, ids, mask, dims.layers)
        seqs, dists = greedy_decode(params, enc_out, mask, init_h, style_idx[k:k + batch_size],
                                    dims.layers, decode_limit(lengths), keep_dists)
        out_ids.extend(seqs)
        if keep_dists:
            out_dists.extend(dists)
    return out_ids, (out_dists if keep_dists else None)


def params_digest(params):
    return tensors_digest(params)
