"""File-level pipeline steps shared by the command line and the end-to-end checks.

Every step reads its inputs from, and writes its products to, one run
directory, so steps can be run separately or chained with :func:`run_all`.
"""

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

from . import classifier as cls
from .corpus import Vocab, build_vocab, load_corpus, load_split, make_seq, tokenize
from .errors import ContractViolation
from .evaluation import EvalReport, load_references, score_direction
from .lexicon import StyleLexicon, extract_lexicon, train_word_lr
from .model import ModelDims
from .nn import load_tensors, save_tensors
from .training import StyleTransferModel, train, warmup

log = logging.getLogger(__name__)

VOCAB = "vocab.txt"
CLASSIFIER = "classifier.ckpt"
EVAL_CLASSIFIER = "eval_classifier.ckpt"
LEXICON = "lexicon.tsv"
PRETRAINED = "pretrain.ckpt"
MODEL = "model.ckpt"
METRICS = "metrics.log"
REPORT = "report.txt"


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class Run:
    """A resolved configuration bound to its run directory."""

    config: object      # RunConfig

    @property
    def out(self):
        p = Path(self.config["out_dir"])
        p.mkdir(parents=True, exist_ok=True)
        return p

    @property
    def styles(self):
        return self.config["styles"]

    @property
    def data_dir(self):
        return Path(self.config["data_dir"])

    def path(self, name):
        return self.out / name

    def split(self, split, vocab):
        return load_split(self.data_dir, split, self.styles, vocab)

    def write_manifest(self, command, products):
        lines = [f"# command: {command}", self.config.dump().rstrip("\n")]
        for name in products:
            p = self.path(name)
            if p.exists():
                lines.append(f"# sha256 {name} {sha256_file(p)}")
        self.path(f"manifest.{command}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


# ------------------------------------------------------------------ steps

def prepare_vocab(run):
    vocab = build_vocab(run.split("train", None), run.config["vocab.min_count"])
    vocab.save(run.path(VOCAB))
    log.info("vocabulary: %d entries", len(vocab))
    run.write_manifest("prepare-vocab", [VOCAB])
    return vocab


def vocab_of(run):
    return Vocab.load(run.path(VOCAB)) if run.path(VOCAB).exists() else prepare_vocab(run)


def train_classifiers(run):
    """The frozen scorer classifier and a separately seeded evaluation classifier."""
    vocab = vocab_of(run)
    tr, dv = run.split("train", vocab), run.split("dev", vocab)
    hyper = run.config.classifier_hyper()
    seed = run.config["seed"]
    out = {}
    for name, s in ((CLASSIFIER, seed), (EVAL_CLASSIFIER, seed + run.config["classifier.eval_seed"])):
        model, acc = cls.train_classifier(tr, dv, len(vocab), hyper, s)
        save_tensors(run.path(name), cls.to_tensors(model))
        log.info("%s: dev accuracy %.4f", name, acc)
        out[name] = (model, acc)
    run.write_manifest("train-classifier", [VOCAB, CLASSIFIER, EVAL_CLASSIFIER])
    return out


def classifier_of(run, name=CLASSIFIER):
    if not run.path(name).exists():
        train_classifiers(run)
    return cls.from_tensors(load_tensors(run.path(name)), run.styles)


def build_lexicon(run):
    vocab = vocab_of(run)
    tr = run.split("train", vocab)
    coefs = train_word_lr(tr[0], tr[1], vocab, l2=run.config["lexicon.l2"])
    lex = extract_lexicon(coefs, run.config["lexicon.threshold"])
    lex.save(run.path(LEXICON))
    log.info("style words: %s", {s: len(lex.words[s]) for s in run.styles})
    run.write_manifest("extract-lexicon", [VOCAB, LEXICON])
    return lex


def lexicon_of(run):
    if not run.path(LEXICON).exists():
        return build_lexicon(run)
    return StyleLexicon.load(run.path(LEXICON), run.styles, run.config["lexicon.threshold"])


def _metrics_writer(fh):
    def on_epoch(entry, _model):
        if entry.phase == "warmup":
            fh.write(f"warmup {entry.epoch} loss {entry.loss:.6f}\n")
        else:
            line = f"bt {entry.epoch} loss {entry.loss:.6f} mle {entry.parts['mle']:.6f} " \
                   f"style {entry.parts['style']:.6f}"
            for k, st in enumerate(entry.refinement):
                line += f" cs{k} {st.mean_cs:.6f} upd{k} {st.update_fraction:.4f}"
            fh.write(line + "\n")
            if entry.report is not None:
                fh.write(entry.metrics_line() + "\n")
        fh.flush()
    return on_epoch


def pretrain(run):
    """Style-modelling warmup only."""
    vocab = vocab_of(run)
    cfg = run.config.train_config()
    tm = StyleTransferModel.create(ModelDims(len(vocab), cfg.emb, cfg.hidden, cfg.layers), run.styles,
                                   cfg.seed, cfg.lr)
    with open(run.path("pretrain." + METRICS), "w", encoding="utf-8") as fh:
        warmup(tm, cfg, run.split("train", vocab), [], _metrics_writer(fh))
    tm.save(run.path(PRETRAINED))
    run.write_manifest("pretrain", [VOCAB, PRETRAINED])
    return tm


def train_model(run, init=None):
    """Full schedule (or back-translation only, when ``init`` names a pretrained checkpoint)."""
    vocab = vocab_of(run)
    cfg = run.config.train_config()
    classifier = classifier_of(run)
    eval_classifier = classifier_of(run, EVAL_CLASSIFIER)
    lexicon = lexicon_of(run)
    dev = run.split("dev", vocab)
    refs = [load_references(run.data_dir, "dev", s, len(c)) for s, c in zip(run.styles, dev)]
    refs = None if any(r is None for r in refs) else refs
    init_model = StyleTransferModel.load(init, run.styles) if init else None
    with open(run.path(METRICS), "w", encoding="utf-8") as fh:
        result = train(cfg, run.split("train", vocab), vocab, lexicon, classifier, eval_classifier,
                       dev, refs, _metrics_writer(fh), init_model)
        fh.write(f"best {result.best_epoch}\n")
    result.model.save(run.path(MODEL))
    run.write_manifest("train", [VOCAB, CLASSIFIER, EVAL_CLASSIFIER, LEXICON, MODEL, METRICS])
    return result


def model_of(run, path=None):
    return StyleTransferModel.load(path or run.path(MODEL), run.styles)


def transfer_file(run, in_path, out_path, to_style, model_path=None):
    """Transfer each line of ``in_path``; output is line-aligned (blank lines stay blank)."""
    if to_style not in run.styles:
        raise ContractViolation(f"unknown style {to_style!r}")
    vocab = vocab_of(run)
    tm = model_of(run, model_path)
    lines = Path(in_path).read_text(encoding="utf-8").splitlines()
    ids = [make_seq(tokenize(ln), to_style, vocab).ids if ln.strip() else () for ln in lines]
    live = [k for k, s in enumerate(ids) if s]
    outs = tm.transfer([ids[k] for k in live], to_style)
    text = [""] * len(lines)
    for k, o in zip(live, outs):
        text[k] = " ".join(vocab.decode(o))
    Path(out_path).write_text("".join(t + "\n" for t in text), encoding="utf-8")
    return len(lines)


def evaluate_split(run, split="test", model_path=None):
    """Transfer both test corpora, write outputs and the report, return the :class:`EvalReport`."""
    vocab = vocab_of(run)
    tm = model_of(run, model_path)
    eval_classifier = classifier_of(run, EVAL_CLASSIFIER)
    report = EvalReport()
    products = []
    for k, src in enumerate(run.styles):
        tgt = run.styles[1 - k]
        corpus = load_corpus(run.data_dir / f"{split}.{src}", src, vocab, split)
        sources = [s.ids for s in corpus]
        outputs = tm.transfer(sources, tgt)
        name = f"{split}.{src}2{tgt}.txt"
        run.path(name).write_text("".join(" ".join(vocab.decode(o)) + "\n" for o in outputs), encoding="utf-8")
        products.append(name)
        refs = load_references(run.data_dir, split, src, len(corpus))
        report.directions.append(score_direction(sources, outputs, refs, src, tgt, eval_classifier, vocab))
    run.path(REPORT).write_text(report.format(), encoding="utf-8")
    run.write_manifest("evaluate", [MODEL, EVAL_CLASSIFIER, REPORT, *products])
    return report


def run_all(run):
    prepare_vocab(run)
    train_classifiers(run)
    build_lexicon(run)
    result = train_model(run)
    return result, evaluate_split(run)
