"""Candidate-set bookkeeping and best-inference selection for pseudo-parallel pairs.

Each source sentence keeps only its best back-translation so far. Because
the scorer (classifier plus its embedding table) is frozen, the running
maximum equals the argmax over the full candidate history.
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import classifier as cls
from .errors import ContractViolation

log = logging.getLogger(__name__)

NEG_INF = -math.inf


@dataclass(frozen=True)
class Score:
    con: float
    sty: float

    @property
    def cs(self):
        return self.con + self.sty


UNSCORABLE = Score(NEG_INF, 0.0)


class CSScorer:
    """``CS = Con + Sty`` with a frozen WMD embedding table and classifier.

    With ``classifier=None`` the style term is dropped (content only).
    """

    def __init__(self, wmd_scorer, classifier=None):
        self.wmd = wmd_scorer
        self.classifier = classifier

    def score(self, candidate_ids, original_ids, target_style):
        return self.score_many([candidate_ids], [original_ids], target_style)[0]

    def score_many(self, candidates, originals, target_style):
        if self.classifier is not None:
            probs = cls.predict_seqs(self.classifier, list(candidates))
            sty = probs[:, self.classifier.style_index(target_style)]
        else:
            sty = np.zeros(len(candidates))
        out = []
        for cand, orig, s in zip(candidates, originals, sty):
            if len(cand) == 0:
                out.append(UNSCORABLE)
                continue
            try:
                con = self.wmd.con(cand, orig)
            except ContractViolation:
                out.append(UNSCORABLE)
                continue
            out.append(Score(con, float(s)))
        return out


def cs_score(candidate_ids, original_ids, target_style, scorer):
    return scorer.score(candidate_ids, original_ids, target_style).cs


@dataclass(frozen=True)
class CandidateSet:
    source_id: int
    source: object          # the original TokenSeq
    target_style: str
    best: tuple | None = None   # candidate ids
    best_score: Score = UNSCORABLE
    best_epoch: int = -1
    seen: int = 0

    @property
    def best_cs(self):
        return self.best_score.cs


def offer(cset, candidate, epoch, score, keep_best=True):
    """Offer a scored candidate.

    With ``keep_best`` the best is replaced only on strict improvement (ties
    keep the earlier one); otherwise the newest candidate always wins.
    """
    if not keep_best or score.cs > cset.best_cs:
        return replace(cset, best=tuple(candidate), best_score=score, best_epoch=epoch, seen=cset.seen + 1)
    return replace(cset, seen=cset.seen + 1)


@dataclass(frozen=True)
class PseudoPair:
    source: tuple       # refined (generated) ids, x* or y*
    source_style: str
    target: object      # original TokenSeq, y or x
    cs: float

    def __post_init__(self):
        if self.source_style == self.target.style:
            raise ContractViolation("pseudo pair with matching styles")


def init_sets(corpus, target_style):
    return [CandidateSet(k, s, target_style) for k, s in enumerate(corpus)]


def update_sets(sets, candidates, epoch, scorer, keep_best=True):
    scores = scorer.score_many(candidates, [c.source.ids for c in sets], sets[0].target_style if sets else None)
    return [offer(c, cand, epoch, sc, keep_best) for c, cand, sc in zip(sets, candidates, scores)]


def emit_pairs(*set_groups):
    """One pair per source sentence with a finite best score: [generated, original]."""
    pairs = []
    for sets in set_groups:
        for c in sets:
            if c.seen == 0:
                raise ContractViolation(f"candidate set {c.source_id} has never been offered a candidate")
            if c.best is None or not math.isfinite(c.best_cs):
                log.warning("skipping sentence %d (%s): no scorable candidate", c.source_id, c.source.style)
                continue
            pairs.append(PseudoPair(c.best, c.target_style, c.source, c.best_cs))
    return pairs


@dataclass(frozen=True)
class RefinementStats:
    epoch: int
    mean_sty: float
    mean_con: float
    mean_cs: float
    update_fraction: float


def refinement_stats(sets, epoch):
    scored = [c for c in sets if c.best is not None and math.isfinite(c.best_cs)]
    if not sets:
        raise ContractViolation("no candidate sets")
    mean = (lambda xs: float(np.mean(xs)) if xs else float("nan"))
    return RefinementStats(
        epoch,
        mean([c.best_score.sty for c in scored]),
        mean([c.best_score.con for c in scored]),
        mean([c.best_cs for c in scored]),
        sum(c.best_epoch == epoch for c in sets) / len(sets),
    )


def dump_sets(path, sets, vocab):
    lines = []
    for c in sets:
        toks = " ".join(vocab.decode(c.best)) if c.best else ""
        lines.append(f"{c.source_id}\t{c.best_cs:.6f}\t{toks}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")
