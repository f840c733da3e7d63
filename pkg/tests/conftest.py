import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sedae import classifier as cls  # noqa: E402
from sedae.corpus import build_vocab, load_split  # noqa: E402
from sedae.lexicon import extract_lexicon, train_word_lr  # noqa: E402
from sedae.toy import STYLES, write_toy_corpus  # noqa: E402


@pytest.fixture(scope="session")
def toy_dir(tmp_path_factory):
    return write_toy_corpus(tmp_path_factory.mktemp("toy"), seed=0, n_train=400, n_dev=60, n_test=60)


@pytest.fixture(scope="session")
def toy(toy_dir):
    vocab = build_vocab(load_split(toy_dir, "train", STYLES))
    train = load_split(toy_dir, "train", STYLES, vocab)
    dev = load_split(toy_dir, "dev", STYLES, vocab)
    return vocab, train, dev


@pytest.fixture(scope="session")
def toy_classifier(toy):
    vocab, train, dev = toy
    hyper = cls.ClassifierHyper(emb_dim=16, filters=16, epochs=5, lr=5e-3)
    return cls.train_classifier(train, dev, len(vocab), hyper, seed=0)[0]


@pytest.fixture(scope="session")
def toy_lexicon(toy):
    vocab, train, _ = toy
    return extract_lexicon(train_word_lr(train[0], train[1], vocab))
