"""Input corruption: DAE drop/shuffle noise and style-word pollution."""

from dataclasses import dataclass

import numpy as np

from .corpus import TokenSeq
from .errors import ContractViolation

POLLUTE_MODES = ("replace", "insert")


@dataclass(frozen=True)
class NoiseSpec:
    drop_prob: float = 0.1
    shuffle_window: int = 3
    p_sn: float = 0.2
    pollute_mode: str = "replace"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.drop_prob < 1.0:
            raise ContractViolation("drop_prob must lie in [0, 1)")
        if self.shuffle_window < 0:
            raise ContractViolation("shuffle_window must be >= 0")
        if not 0.0 <= self.p_sn <= 1.0:
            raise ContractViolation("p_sn must lie in [0, 1]")
        if self.pollute_mode not in POLLUTE_MODES:
            raise ContractViolation(f"pollute_mode must be one of {POLLUTE_MODES}")


def derive_rng(seed, *keys):
    """Independent stream for (global seed, epoch, batch, ...) without shared state."""
    return np.random.default_rng([seed, *keys])


def _take(s, order):
    ids = None if s.ids is None else tuple(s.ids[i] for i in order)
    return TokenSeq(tuple(s.tokens[i] for i in order), ids, s.style)


def bounded_permutation(n, window, rng):
    """Permutation where no element moves more than ``window`` positions."""
    if window == 0 or n < 2:
        return np.arange(n)
    keys = np.arange(n) + rng.uniform(0.0, window + 1, size=n)
    return np.argsort(keys, kind="stable")


def dae_corrupt(s, spec, rng):
    """Drop each token with ``spec.drop_prob`` (keeping at least one), then shuffle locally."""
    n = len(s)
    keep = rng.random(n) >= spec.drop_prob
    if not keep.any():
        keep[rng.integers(n)] = True
    kept = np.flatnonzero(keep)
    perm = bounded_permutation(len(kept), spec.shuffle_window, rng)
    return _take(s, kept[perm])


def pollute(s, style_words, p, mode, rng):
    """Overwrite (``replace``) or follow (``insert``) positions with random style words.

    ``style_words`` is a sequence of ``(token, id)`` pairs; each position is
    independently selected with probability ``p`` and receives a uniform draw.
    """
    if not style_words:
        raise ContractViolation("pollute needs a non-empty style word set")
    if mode not in POLLUTE_MODES:
        raise ContractViolation(f"unknown pollute mode {mode!r}")
    n = len(s)
    hit = rng.random(n) < p
    picks = rng.integers(len(style_words), size=n)
    tokens, ids = [], []
    with_ids = s.ids is not None
    for k in range(n):
        if mode == "replace" and hit[k]:
            tok, wid = style_words[picks[k]]
            tokens.append(tok)
            ids.append(wid)
            continue
        tokens.append(s.tokens[k])
        ids.append(s.ids[k] if with_ids else None)
        if mode == "insert" and hit[k]:
            tok, wid = style_words[picks[k]]
            tokens.append(tok)
            ids.append(wid)
    return TokenSeq(tuple(tokens), tuple(ids) if with_ids else None, s.style)
