"""Text-CNN sentence style classifier.

Convolutions of several widths over word embeddings, ReLU, max-over-time
pooling, dropout, and a linear projection onto the two styles. Inputs can be
hard token ids or position-wise probability mixtures over the vocabulary; the
latter is what lets the style loss reach back into decoder distributions.
"""

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from .corpus import PAD, pad_ids
from .errors import ContractViolation
from .nn import AdamState, adam_step, clip_grad_norm, cross_entropy, log_softmax, softmax, xavier_uniform

log = logging.getLogger(__name__)


@dataclass
class TextCNN:
    params: dict
    widths: tuple = (3, 4, 5)
    styles: tuple = ("pos", "neg")

    @property
    def min_len(self):
        return max(self.widths)

    def digest(self):
        h = hashlib.sha256()
        for name in sorted(self.params):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.params[name]).tobytes())
        return h.hexdigest()

    def style_index(self, style):
        return self.styles.index(style)


def init_textcnn(vocab_size, emb_dim, rng, widths=(3, 4, 5), filters=100, styles=("pos", "neg")):
    widths = tuple(widths)
    if any(b <= a for a, b in zip(widths, widths[1:])):
        raise ContractViolation("filter widths must be strictly increasing")
    emb = rng.normal(0.0, 0.1, size=(vocab_size, emb_dim))
    emb[PAD] = 0.0
    params = {"emb": emb}
    for k in widths:
        params[f"conv{k}.W"] = xavier_uniform(rng, (k * emb_dim, filters))
        params[f"conv{k}.b"] = np.zeros(filters)
    params["out.W"] = xavier_uniform(rng, (len(widths) * filters, len(styles)))
    params["out.b"] = np.zeros(len(styles))
    return TextCNN(params, widths, tuple(styles))


def _pad_time(x, min_len):
    if x.shape[1] >= min_len:
        return x
    pad = np.zeros((x.shape[0], min_len - x.shape[1]) + x.shape[2:])
    return np.concatenate([x, pad], axis=1)


def forward_embedded(model, xe, dropout=0.0, rng=None, lengths=None):
    """Logits from embedded input ``xe`` of shape (B, T, E).

    Each sentence is treated as zero-padded to the widest filter; windows that
    start past a sentence's own (padded) length are excluded from pooling, so
    results do not depend on what else shares the batch.
    """
    p = model.params
    xe = _pad_time(xe, model.min_len)
    B, T, E = xe.shape
    eff = np.full(B, T) if lengths is None else np.maximum(np.asarray(lengths), model.min_len)
    pooled, caches = [], []
    for k in model.widths:
        L = T - k + 1
        win = np.concatenate([xe[:, j:j + L] for j in range(k)], axis=-1)
        conv = win @ p[f"conv{k}.W"] + p[f"conv{k}.b"]
        valid = np.arange(L)[None, :] <= (eff - k)[:, None]
        conv = np.where(valid[..., None], conv, -1.0)
        act = np.maximum(conv, 0.0)
        arg = np.argmax(act, axis=1)
        pooled.append(np.take_along_axis(act, arg[:, None, :], axis=1)[:, 0])
        caches.append((k, L, win, conv, arg))
    h = np.concatenate(pooled, axis=-1)
    keep = None
    if dropout > 0.0:
        keep = (rng.random(h.shape) >= dropout) / (1.0 - dropout)
        h = h * keep
    logits = h @ p["out.W"] + p["out.b"]
    return logits, (xe.shape, h, keep, caches)


def backward_embedded(model, dlogits, cache, need_params=True):
    """Gradients w.r.t. the embedded input (B, T', E) and, optionally, the conv/output params."""
    p = model.params
    shape, h, keep, caches = cache
    B, T, E = shape
    grads = {}
    if need_params:
        grads["out.W"] = h.T @ dlogits
        grads["out.b"] = dlogits.sum(axis=0)
    dh = dlogits @ p["out.W"].T
    if keep is not None:
        dh = dh * keep
    dxe = np.zeros(shape)
    F = p[f"conv{model.widths[0]}.b"].shape[0]
    for n, (k, L, win, conv, arg) in enumerate(caches):
        dpool = dh[:, n * F:(n + 1) * F]
        dconv = np.zeros_like(conv)
        np.put_along_axis(dconv, arg[:, None, :], dpool[:, None, :], axis=1)
        dconv *= conv > 0
        if need_params:
            grads[f"conv{k}.W"] = win.reshape(-1, win.shape[-1]).T @ dconv.reshape(-1, F)
            grads[f"conv{k}.b"] = dconv.sum(axis=(0, 1))
        dwin = dconv @ p[f"conv{k}.W"].T
        for j in range(k):
            dxe[:, j:j + L] += dwin[..., j * E:(j + 1) * E]
    return dxe, grads


def embed_ids(model, ids):
    return model.params["emb"][ids]


def embed_soft(model, probs):
    """Expected embeddings ``probs @ emb`` for (B, T, V) probability rows."""
    return probs @ model.params["emb"]


def predict_proba(model, ids, lengths=None):
    logits, _ = forward_embedded(model, embed_ids(model, ids), lengths=lengths)
    return softmax(logits)


def predict_proba_soft(model, probs, lengths=None):
    logits, _ = forward_embedded(model, embed_soft(model, probs), lengths=lengths)
    return softmax(logits)


def predict_seqs(model, seqs, batch_size=256):
    """Style probabilities for a list of id sequences, in order."""
    out = []
    for k in range(0, len(seqs), batch_size):
        ids, _, lengths = pad_ids([tuple(s) if len(s) else (PAD,) for s in seqs[k:k + batch_size]])
        out.append(predict_proba(model, ids, lengths))
    return np.concatenate(out, axis=0) if out else np.zeros((0, len(model.styles)))


def sty_score(ids, target_style, model):
    """Probability the frozen classifier assigns to ``target_style`` for one sentence."""
    probs = predict_proba(model, np.asarray(ids, dtype=np.int64)[None, :])
    return float(probs[0, model.style_index(target_style)])


def loss_and_grads(model, ids, labels, dropout=0.0, rng=None, lengths=None):
    xe = embed_ids(model, ids)
    logits, cache = forward_embedded(model, xe, dropout, rng, lengths)
    loss, dlogits = cross_entropy(logits, labels)
    dxe, grads = backward_embedded(model, dlogits, cache)
    demb = np.zeros_like(model.params["emb"])
    np.add.at(demb, ids.reshape(-1), dxe[:, :ids.shape[1]].reshape(-1, dxe.shape[-1]))
    demb[PAD] = 0.0
    grads["emb"] = demb
    return loss, grads


def style_loss(model, probs, lengths, target):
    """``-log P_cls(target | expected embeddings)`` averaged over the batch.

    Args:
        probs: decoder distributions (B, T, V); rows at or beyond ``lengths``
            are ignored (treated as PAD, whose embedding is zero).
        lengths: number of rows per sentence that belong to the output.
        target: int array (B,) of target style indices.

    Returns:
        (loss, dprobs) with ``dprobs`` shaped like ``probs``. Classifier
        parameters receive no gradient.
    """
    B, T, V = probs.shape
    valid = (np.arange(T)[None, :] < np.asarray(lengths)[:, None]).astype(np.float64)
    xe = embed_soft(model, probs) * valid[..., None]
    logits, cache = forward_embedded(model, xe, lengths=lengths)
    logp = log_softmax(logits)
    target = np.asarray(target)
    loss = -float(np.mean(logp[np.arange(B), target]))
    dlogits = np.exp(logp)
    dlogits[np.arange(B), target] -= 1.0
    dlogits /= B
    dxe, _ = backward_embedded(model, dlogits, cache, need_params=False)
    dprobs = (dxe[:, :T] * valid[..., None]) @ model.params["emb"].T
    return loss, dprobs


def _labeled(corpora):
    seqs, labels = [], []
    for k, corpus in enumerate(corpora):
        for s in corpus:
            seqs.append(s.ids)
            labels.append(k)
    return seqs, np.array(labels, dtype=np.int64)


def accuracy(model, seqs, labels):
    probs = predict_seqs(model, seqs)
    return float(np.mean(np.argmax(probs, axis=1) == labels))


@dataclass
class ClassifierHyper:
    emb_dim: int = 128
    filters: int = 100
    widths: tuple = (3, 4, 5)
    dropout: float = 0.5
    lr: float = 1e-3
    batch_size: int = 50
    epochs: int = 5
    clip: float = 5.0
    shuffle_labels: bool = False


def train_classifier(train, dev, vocab_size, hyper=None, seed=0):
    """Fit a Text-CNN on two style corpora; returns the best-on-dev snapshot and its dev accuracy.

    ``train`` and ``dev`` are pairs of corpora, one per style, in label order.
    """
    hyper = hyper or ClassifierHyper()
    if len(train) != 2 or any(len(c) == 0 for c in train):
        raise ContractViolation("classifier training needs non-empty corpora for both styles")
    styles = tuple(c.style for c in train)
    if styles[0] == styles[1]:
        raise ContractViolation("classifier training needs two distinct styles")
    rng = np.random.default_rng([seed, 17])
    model = init_textcnn(vocab_size, hyper.emb_dim, rng, hyper.widths, hyper.filters, styles)
    seqs, labels = _labeled(train)
    if hyper.shuffle_labels:
        labels = rng.permutation(labels)
    dev_seqs, dev_labels = _labeled(dev)
    state = AdamState.for_params(model.params, lr=hyper.lr)
    best = (-1.0, None)
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(seqs))
        for k in range(0, len(order), hyper.batch_size):
            idx = order[k:k + hyper.batch_size]
            ids, _, lengths = pad_ids([seqs[i] for i in idx])
            loss, grads = loss_and_grads(model, ids, labels[idx], hyper.dropout, rng, lengths)
            clip_grad_norm(grads, hyper.clip)
            adam_step(model.params, grads, state)
            model.params["emb"][PAD] = 0.0
        acc = accuracy(model, dev_seqs, dev_labels)
        log.info("classifier epoch %d dev acc %.4f", epoch, acc)
        if acc > best[0]:
            best = (acc, {k: v.copy() for k, v in model.params.items()})
    model.params = best[1]
    return model, best[0]


def to_tensors(model):
    out = {f"textcnn/{k}": v for k, v in model.params.items()}
    out["textcnn/meta/widths"] = np.array(model.widths, dtype=np.float64)
    return out


def from_tensors(tensors, styles):
    params = {k[len("textcnn/"):]: v for k, v in tensors.items()
              if k.startswith("textcnn/") and not k.startswith("textcnn/meta/")}
    widths = tuple(int(w) for w in tensors["textcnn/meta/widths"])
    return TextCNN(params, widths, tuple(styles))
