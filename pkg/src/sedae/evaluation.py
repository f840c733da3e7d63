"""Automatic metrics: transfer accuracy, multi-reference BLEU, G2/H2, and style-word counts."""

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classifier as cls
from .corpus import tokenize
from .errors import ContractViolation


def ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _closest_ref_len(hyp_len, refs):
    return min((len(r) for r in refs), key=lambda L: (abs(L - hyp_len), L))


def bleu_stats(hypotheses, reference_sets, max_n=4):
    if len(hypotheses) != len(reference_sets) or not hypotheses:
        raise ContractViolation("need one non-empty reference set per hypothesis")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, refs in zip(hypotheses, reference_sets):
        if not refs:
            raise ContractViolation("empty reference set")
        hyp = list(hyp)
        hyp_len += len(hyp)
        ref_len += _closest_ref_len(len(hyp), refs)
        for n in range(1, max_n + 1):
            counts = ngrams(hyp, n)
            best = Counter()
            for r in refs:
                best |= ngrams(list(r), n)
            matches[n - 1] += sum(min(c, best[g]) for g, c in counts.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)
    return matches, totals, hyp_len, ref_len


def bleu_corpus(hypotheses, reference_sets, max_n=4):
    """Corpus BLEU on a 0-100 scale: clipped multi-reference counts, closest-length brevity penalty, no smoothing."""
    matches, totals, c, r = bleu_stats(hypotheses, reference_sets, max_n)
    if c == 0 or min(matches) == 0:
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return 100.0 * bp * math.exp(log_p)


def bleu_sentence(hypothesis, references, max_n=4):
    """Add-one smoothed sentence BLEU (n > 1) for per-line diagnostics."""
    matches, totals, c, r = bleu_stats([hypothesis], [references], max_n)
    if c == 0 or matches[0] == 0:
        return 0.0
    log_p = math.log(matches[0] / totals[0])
    log_p += sum(math.log((m + 1) / (t + 1)) for m, t in zip(matches[1:], totals[1:]))
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return 100.0 * bp * math.exp(log_p / max_n)


def transfer_accuracy(hypotheses, target_style, eval_classifier):
    """Percentage of hypotheses the evaluation classifier assigns to ``target_style``."""
    if not hypotheses:
        return 0.0
    probs = cls.predict_seqs(eval_classifier, list(hypotheses))
    k = eval_classifier.style_index(target_style)
    return 100.0 * float(np.mean(np.argmax(probs, axis=1) == k))


def g2_h2(acc, bleu):
    if acc < 0 or bleu < 0:
        raise ContractViolation("metrics must be non-negative")
    g2 = math.sqrt(acc * bleu)
    h2 = 0.0 if acc + bleu == 0 else 2.0 * acc * bleu / (acc + bleu)
    return g2, h2


@dataclass(frozen=True)
class DirectionScores:
    source_style: str
    target_style: str
    acc: float
    bleu: float
    n: int
    self_bleu: float = float("nan")

    @property
    def name(self):
        return f"{self.source_style}2{self.target_style}"

    @property
    def g2(self):
        return g2_h2(self.acc, self.bleu)[0]

    @property
    def h2(self):
        return g2_h2(self.acc, self.bleu)[1]


@dataclass
class EvalReport:
    directions: list = field(default_factory=list)

    @property
    def acc(self):
        return float(np.mean([d.acc for d in self.directions]))

    @property
    def bleu(self):
        return float(np.mean([d.bleu for d in self.directions]))

    @property
    def self_bleu(self):
        return float(np.mean([d.self_bleu for d in self.directions]))

    @property
    def g2(self):
        return g2_h2(self.acc, self.bleu)[0]

    @property
    def h2(self):
        return g2_h2(self.acc, self.bleu)[1]

    def format(self):
        head = f"{'direction':<12}{'n':>6}{'acc':>9}{'bleu':>9}{'self-bleu':>11}{'g2':>9}{'h2':>9}"
        rows = [head]
        for d in self.directions:
            rows.append(f"{d.name:<12}{d.n:>6}{d.acc:>9.2f}{d.bleu:>9.2f}{d.self_bleu:>11.2f}{d.g2:>9.2f}{d.h2:>9.2f}")
        rows.append(f"{'all':<12}{sum(d.n for d in self.directions):>6}{self.acc:>9.2f}{self.bleu:>9.2f}"
                    f"{self.self_bleu:>11.2f}{self.g2:>9.2f}{self.h2:>9.2f}")
        for d in self.directions:
            rows.append(f"RESULT dir={d.name} acc={d.acc:.2f} bleu={d.bleu:.2f} g2={d.g2:.2f} h2={d.h2:.2f}")
        rows.append(f"RESULT dir=all acc={self.acc:.2f} bleu={self.bleu:.2f} g2={self.g2:.2f} h2={self.h2:.2f}")
        return "\n".join(rows) + "\n"


def score_direction(sources, outputs, references, source_style, target_style, eval_classifier, vocab):
    """Score one transfer direction.

    ``sources``/``outputs`` are id sequences; ``references`` a list of
    token-list reference sets (or None, in which case BLEU is against the source).
    """
    src_tok = [list(vocab.decode(s)) for s in sources]
    out_tok = [list(vocab.decode(o)) for o in outputs]
    refs = references if references is not None else [[s] for s in src_tok]
    return DirectionScores(
        source_style, target_style,
        transfer_accuracy(outputs, target_style, eval_classifier),
        bleu_corpus(out_tok, refs),
        len(outputs),
        bleu_corpus(out_tok, [[s] for s in src_tok]),
    )


def load_references(data_dir, split, style, n_lines=None):
    """Reference sets from ``<split>.<style>.ref<k>`` files (k = 0, 1, ...); None if absent."""
    files = sorted(Path(data_dir).glob(f"{split}.{style}.ref*"), key=lambda p: int(p.suffix[4:] or 0))
    if not files:
        return None
    columns = []
    for f in files:
        with open(f, encoding="utf-8") as fh:
            columns.append([tokenize(ln) for ln in fh.read().splitlines()])
    n = len(columns[0]) if n_lines is None else n_lines
    if any(len(c) != n for c in columns):
        raise ContractViolation(f"reference files for {split}.{style} are not line-aligned")
    return [[c[i] for c in columns] for i in range(n)]


def style_word_report(outputs, lexicon, source_style, target_style):
    """Counts of leftover source-style words and introduced target-style words in token outputs."""
    src_words = lexicon.side(source_style)
    tgt_words = lexicon.side(target_style)
    residual = Counter()
    introduced = Counter()
    total = 0
    for toks in outputs:
        for t in toks:
            total += 1
            if t in src_words:
                residual[t] += 1
            elif t in tgt_words:
                introduced[t] += 1
    n_res = sum(residual.values())
    n_int = sum(introduced.values())
    return {
        "tokens": total,
        "residual": n_res,
        "introduced": n_int,
        "style_density": (n_res + n_int) / total if total else 0.0,
        "residual_words": dict(residual.most_common()),
        "introduced_words": dict(introduced.most_common()),
    }
