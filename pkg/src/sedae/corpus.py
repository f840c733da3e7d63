"""Style corpora: reading, vocabularies, batching, and dataset statistics."""

import logging
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ContractViolation

log = logging.getLogger(__name__)

PAD, UNK, BOS, EOS = 0, 1, 2, 3
RESERVED = ("<pad>", "<unk>", "<bos>", "<eos>")
MAX_LEN = 64
SPLITS = ("train", "dev", "test")


def tokenize(line):
    return line.lower().split()


def detokenize(tokens):
    return " ".join(tokens)


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple
    ids: tuple | None
    style: str

    def __post_init__(self):
        if len(self.tokens) == 0:
            raise ContractViolation("empty token sequence")
        if self.ids is not None and len(self.ids) != len(self.tokens):
            raise ContractViolation("tokens and ids differ in length")

    def __len__(self):
        return len(self.tokens)

    @property
    def text(self):
        return detokenize(self.tokens)


class Vocab:
    """Token/id mapping with PAD, UNK, BOS, EOS fixed at ids 0..3."""

    def __init__(self, tokens):
        self.itos = list(RESERVED) + [t for t in tokens]
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ContractViolation("duplicate vocabulary entries")

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.itos == other.itos

    def id(self, token):
        return self.stoi.get(token, UNK)

    def encode(self, tokens):
        return tuple(self.stoi.get(t, UNK) for t in tokens)

    def decode(self, ids):
        return tuple(self.itos[i] for i in ids)

    def save(self, path):
        Path(path).write_text("".join(t + "\n" for t in self.itos[len(RESERVED):]), encoding="utf-8")

    @classmethod
    def load(cls, path):
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([ln for ln in lines if ln])


@dataclass(frozen=True)
class StyleCorpus:
    style: str
    sentences: tuple
    split: str = "train"

    def __post_init__(self):
        for s in self.sentences:
            if s.style != self.style:
                raise ContractViolation(f"sentence of style {s.style!r} in {self.style!r} corpus")

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]

    def encode(self, vocab):
        return replace(self, sentences=tuple(
            replace(s, ids=vocab.encode(s.tokens)) for s in self.sentences))


def make_seq(tokens, style, vocab=None):
    tokens = tuple(tokens)[:MAX_LEN]
    return TokenSeq(tokens, vocab.encode(tokens) if vocab is not None else None, style)


def seq_from_ids(ids, style, vocab):
    """Build a TokenSeq from generated ids; returns None for an empty output."""
    ids = tuple(int(i) for i in ids)
    if not ids:
        return None
    return TokenSeq(vocab.decode(ids), ids, style)


def load_corpus(path, style, vocab=None, split="train"):
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    sents = [make_seq(tokenize(ln), style, vocab) for ln in lines if ln.strip()]
    if not sents:
        raise ContractViolation(f"{path}: no sentences")
    return StyleCorpus(style, tuple(sents), split)


def load_split(data_dir, split, styles, vocab=None):
    return tuple(load_corpus(Path(data_dir) / f"{split}.{s}", s, vocab, split) for s in styles)


def build_vocab(corpora, min_count=2):
    if not corpora:
        raise ContractViolation("build_vocab needs at least one corpus")
    counts = Counter()
    for corpus in corpora:
        for s in corpus:
            counts.update(s.tokens)
    kept = [t for t, c in counts.items() if c >= min_count and t not in RESERVED]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocab(kept)


@dataclass(frozen=True)
class Batch:
    ids: np.ndarray       # (B, T) int
    mask: np.ndarray      # (B, T) bool, true on real tokens
    lengths: np.ndarray   # (B,)
    style: str
    index: np.ndarray     # sentence indices into the source corpus

    def __len__(self):
        return len(self.lengths)


def pad_ids(seqs, pad=PAD):
    lengths = np.array([len(s) for s in seqs], dtype=np.int64)
    T = int(lengths.max()) if len(lengths) else 0
    ids = np.full((len(seqs), T), pad, dtype=np.int64)
    for k, s in enumerate(seqs):
        ids[k, :len(s)] = s
    mask = np.arange(T)[None, :] < lengths[:, None]
    return ids, mask, lengths


def batch_of(seqs, style, index=None):
    ids, mask, lengths = pad_ids([s.ids for s in seqs])
    index = np.arange(len(seqs)) if index is None else np.asarray(index)
    return Batch(ids, mask, lengths, style, index)


def make_batches(corpus, batch_size, seed, bucket=100):
    """Seeded shuffle, then length-sorting within windows of ``bucket`` batches."""
    if batch_size < 1:
        raise ContractViolation("batch_size must be >= 1")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(corpus))
    window = batch_size * bucket
    chunks = []
    for w in range(0, len(order), window):
        part = order[w:w + window]
        part = part[np.argsort([len(corpus[i]) for i in part], kind="stable")]
        chunks.extend(part[k:k + batch_size] for k in range(0, len(part), batch_size))
    chunks = [chunks[i] for i in rng.permutation(len(chunks))]
    return [batch_of([corpus[i] for i in c], corpus.style, c) for c in chunks]


def corpus_stats(data_dir, styles):
    """Sentence counts per split and style, Table-I style; missing files are reported as 0."""
    stats = {}
    for split in SPLITS:
        for style in styles:
            path = Path(data_dir) / f"{split}.{style}"
            if path.exists():
                with open(path, encoding="utf-8") as fh:
                    stats[(split, style)] = sum(1 for ln in fh if ln.strip())
            else:
                stats[(split, style)] = 0
    return stats


def format_stats(stats, styles):
    width = max(10, *(len(s) + 2 for s in styles))
    lines = ["split".ljust(8) + "".join(s.rjust(width) for s in styles)]
    for split in SPLITS:
        lines.append(split.ljust(8) + "".join(f"{stats[(split, s)]:>{width},}" for s in styles))
    return "\n".join(lines)
