import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sedae.errors import ContractViolation
from sedae.evaluation import (
    DirectionScores,
    EvalReport,
    bleu_corpus,
    bleu_sentence,
    g2_h2,
    load_references,
    style_word_report,
    transfer_accuracy,
)
from sedae.lexicon import StyleLexicon

from oracles import corpus_bleu_oracle

words = st.sampled_from("a b c d e".split())
sentence = st.lists(words, min_size=1, max_size=12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(sentence, st.lists(sentence, min_size=1, max_size=4)), min_size=1, max_size=6))
def test_corpus_bleu_matches_counting_oracle(data):
    hyps = [h for h, _ in data]
    refs = [r for _, r in data]
    assert bleu_corpus(hyps, refs) == pytest.approx(corpus_bleu_oracle(hyps, refs), abs=1e-6)


def test_identity_scores_100():
    s = "the food was really great today".split()
    assert bleu_corpus([s], [[s]]) == pytest.approx(100.0)
    assert bleu_sentence(s, [s]) == pytest.approx(100.0)


def test_clipping_and_closest_reference():
    # the classic "the the the ..." example: unigram precision 2/7
    hyp = "the the the the the the the".split()
    refs = ["the cat is on the mat".split(), "there is a cat on the mat".split()]
    assert bleu_corpus([hyp], [refs], max_n=1) == pytest.approx(100 * 2 / 7)
    # closest reference length is 7 -> no brevity penalty
    short = "the cat".split()
    bp = math.exp(1 - 6 / 2)
    assert bleu_corpus([short], [refs], max_n=1) == pytest.approx(100 * bp)


def test_no_smoothing_at_corpus_level_and_add_one_per_sentence():
    hyp, ref = "a b c".split(), "a x c".split()
    assert bleu_corpus([hyp], [[ref]]) == 0.0
    # 1-gram 2/3; 2-grams 0/2 -> 1/3; 3-grams 0/1 -> 1/2; 4-grams 0/0 -> 1/1
    expected = 100 * math.exp((math.log(2 / 3) + math.log(1 / 3) + math.log(1 / 2) + math.log(1)) / 4)
    assert bleu_sentence(hyp, [ref]) == pytest.approx(expected)


def test_bleu_contracts():
    with pytest.raises(ContractViolation):
        bleu_corpus([["a"]], [])
    with pytest.raises(ContractViolation):
        bleu_corpus([["a"]], [[]])


@pytest.mark.parametrize("acc,bleu,g2,h2", [(85.7, 53.9, 67.97, 66.18), (85.5, 48.4, 64.33, 61.81)])
def test_g2_h2_fixtures(acc, bleu, g2, h2):
    g, h = g2_h2(acc, bleu)
    assert g == pytest.approx(g2, abs=0.05) and h == pytest.approx(h2, abs=0.05)


def test_h2_of_zero():
    assert g2_h2(0.0, 0.0) == (0.0, 0.0)
    with pytest.raises(ContractViolation):
        g2_h2(-1.0, 3.0)


def test_report_format():
    r = EvalReport([DirectionScores("pos", "neg", 90.0, 40.0, 10, 50.0), DirectionScores("neg", "pos", 80.0, 20.0, 10)])
    lines = r.format().splitlines()
    assert lines[-1] == "RESULT dir=all acc=85.00 bleu=30.00 g2=50.50 h2=44.35"
    assert lines[-3] == "RESULT dir=pos2neg acc=90.00 bleu=40.00 g2=60.00 h2=55.38"
    assert lines[0].split() == ["direction", "n", "acc", "bleu", "self-bleu", "g2", "h2"]


def test_reference_loading(tmp_path):
    (tmp_path / "test.pos.ref0").write_text("a b\nc\n")
    (tmp_path / "test.pos.ref1").write_text("a c\nd e\n")
    refs = load_references(tmp_path, "test", "pos")
    assert refs == [[["a", "b"], ["a", "c"]], [["c"], ["d", "e"]]]
    assert load_references(tmp_path, "test", "neg") is None
    (tmp_path / "test.pos.ref2").write_text("only one line\n")
    with pytest.raises(ContractViolation):
        load_references(tmp_path, "test", "pos")


def test_transfer_accuracy_uses_the_classifier(toy, toy_classifier):
    _, train, _ = toy
    pos = [s.ids for s in train[0][:50]]
    assert transfer_accuracy(pos, "pos", toy_classifier) > transfer_accuracy(pos, "neg", toy_classifier)
    assert transfer_accuracy([], "pos", toy_classifier) == 0.0


def test_style_word_report():
    lex = StyleLexicon(("pos", "neg"), {"pos": {"great": 0.95}, "neg": {"awful": 0.93}}, 0.9)
    rep = style_word_report([["the", "food", "was", "great"], ["awful", "awful", "place"]], lex, "pos", "neg")
    assert rep["residual"] == 1 and rep["introduced"] == 2 and rep["tokens"] == 7
    assert rep["introduced_words"] == {"awful": 2}
