"""Style-word lexicons from a bag-of-words logistic regression."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.special import expit, log_expit

from .corpus import RESERVED
from .errors import ContractViolation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WordCoefficients:
    """Fitted weights; positive values point toward ``styles[0]``."""

    styles: tuple
    words: tuple
    coef: np.ndarray
    bias: float
    losses: tuple


def count_matrix(corpora, vocab):
    rows, cols, vals = [], [], []
    r = 0
    for corpus in corpora:
        for s in corpus:
            ids = s.ids if s.ids is not None else vocab.encode(s.tokens)
            for i in ids:
                if i >= len(RESERVED):
                    rows.append(r)
                    cols.append(i)
                    vals.append(1.0)
            r += 1
    return sparse.csr_matrix((vals, (rows, cols)), shape=(r, len(vocab)))


def _spectral_norm_sq_bound(X):
    # ||X||_2^2 <= ||X||_1 * ||X||_inf
    absX = abs(X)
    return float(absX.sum(axis=0).max()) * float(absX.sum(axis=1).max())


def train_word_lr(corpus_a, corpus_b, vocab, l2=1e-3, epochs=5000, tol=1e-8):
    """Full-batch gradient descent on L2-regularized logistic loss over token counts.

    Label 1 is ``corpus_a``'s style. The step size is ``1/L`` with ``L`` an
    upper bound on the gradient's Lipschitz constant, so the objective is
    non-increasing at every iterate.
    """
    if corpus_a.style == corpus_b.style:
        raise ContractViolation("word LR needs two corpora of distinct styles")
    if len(corpus_a) == 0 or len(corpus_b) == 0:
        raise ContractViolation("word LR needs both classes")
    X = count_matrix([corpus_a, corpus_b], vocab)
    y = np.concatenate([np.ones(len(corpus_a)), np.zeros(len(corpus_b))])
    n = X.shape[0]
    # bias column folded in as an unregularized feature
    Xb = sparse.hstack([X, sparse.csr_matrix(np.ones((n, 1)))]).tocsr()
    lip = 0.25 * _spectral_norm_sq_bound(Xb) / n + l2
    step = 1.0 / lip
    reg = np.ones(Xb.shape[1])
    reg[-1] = 0.0

    def objective(w):
        z = Xb @ w
        nll = -np.mean(y * log_expit(z) + (1 - y) * log_expit(-z))
        return nll + 0.5 * l2 * float(np.sum(reg * w * w)), z

    w = np.zeros(Xb.shape[1])
    loss, z = objective(w)
    losses = [loss]
    for _ in range(epochs):
        grad = Xb.T @ (expit(z) - y) / n + l2 * reg * w
        w = w - step * grad
        new_loss, z = objective(w)
        losses.append(new_loss)
        if loss - new_loss < tol:
            break
        loss = new_loss
    return WordCoefficients((corpus_a.style, corpus_b.style), tuple(vocab.itos),
                            w[:-1].copy(), float(w[-1]), tuple(losses))


@dataclass(frozen=True)
class StyleLexicon:
    styles: tuple
    words: dict       # style -> {word: weight}
    threshold: float

    def side(self, style):
        return self.words[style]

    def pairs(self, style, vocab):
        """``(token, id)`` list for :func:`sedae.noise.pollute`, in vocabulary order."""
        return [(w, vocab.stoi[w]) for w in sorted(self.words[style], key=vocab.stoi.get)]

    def save(self, path):
        rows = [(w, s, wt) for s in self.styles for w, wt in self.words[s].items()]
        rows.sort(key=lambda r: (-r[2], r[0]))
        Path(path).write_text("".join(f"{w}\t{s}\t{wt:.6f}\n" for w, s, wt in rows), encoding="utf-8")

    @classmethod
    def load(cls, path, styles, threshold=float("nan")):
        words = {s: {} for s in styles}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                w, s, wt = line.split("\t")
                words[s][w] = float(wt)
        return cls(tuple(styles), words, threshold)


def standardized(coefs):
    """Coefficients divided by the standard deviation of the nonzero ones (sign kept)."""
    nz = coefs.coef[coefs.coef != 0.0]
    scale = float(np.std(nz)) if nz.size > 1 else 1.0
    return coefs.coef / (scale if scale > 0 else 1.0)


def extract_lexicon(coefs, threshold=0.9):
    if not 0.0 < threshold < 1.0:
        raise ContractViolation("threshold must lie in (0, 1)")
    z = standardized(coefs)
    first, second = coefs.styles
    words = {first: {}, second: {}}
    for k in range(len(RESERVED), len(z)):
        if z[k] > 0 and expit(z[k]) >= threshold:
            words[first][coefs.words[k]] = float(expit(z[k]))
        elif z[k] < 0 and expit(-z[k]) >= threshold:
            words[second][coefs.words[k]] = float(expit(-z[k]))
    for s in coefs.styles:
        if not words[s]:
            log.warning("empty style lexicon for %r at threshold %.3f", s, threshold)
    return StyleLexicon(coefs.styles, words, threshold)
