"""``sedae`` command line."""

import argparse
import logging
import sys
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import pipeline as pl
from .config import RunConfig, describe
from .corpus import corpus_stats, format_stats, make_seq, tokenize
from .errors import ContractViolation, NumericError
from .refinement import CSScorer
from .toy import write_toy_corpus
from .wmd import WmdScorer, format_plan, wmd_plan

log = logging.getLogger("sedae")


def _kv(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected KEY=VALUE")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int, help="global seed")
    common.add_argument("--threads", type=int, help="BLAS threads (default 1)")
    common.add_argument("--data-dir", help="directory with <split>.<style> files")
    common.add_argument("--out-dir", help="run directory")
    common.add_argument("--set", type=_kv, action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sedae", description="Unsupervised text style transfer with a denoising autoencoder.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, description=help_text)

    t = add("make-toy", "write the synthetic two-style corpus to --data-dir")
    t.add_argument("--n-train", type=int, default=2000)
    t.add_argument("--n-eval", type=int, default=200)

    add("prepare-vocab", "build the vocabulary from the training split")
    add("train-classifier", "train the frozen scorer classifier and the evaluation classifier")
    add("extract-lexicon", "fit the word logistic regression and write the style lexicon")
    add("pretrain", "style-modelling warmup only")

    t = add("train", "full training: warmup, then refined back-translation")
    t.add_argument("--no-classifier", action="store_true", help="drop the style loss and the Sty score")
    t.add_argument("--no-refinement", action="store_true", help="pair with the newest candidate")
    t.add_argument("--no-style-noise", action="store_true", help="do not pollute pseudo-parallel sources")
    t.add_argument("--bt-epochs", type=int)
    t.add_argument("--warmup-epochs", type=int)
    t.add_argument("--pollute-mode", choices=("replace", "insert"))
    t.add_argument("--init", type=Path, help="pretrained checkpoint; skips the warmup")

    t = add("transfer", "transfer every line of a file to one style")
    t.add_argument("--to-style", required=True)
    t.add_argument("--input", "-i", type=Path, required=True)
    t.add_argument("--output", "-o", type=Path, required=True)
    t.add_argument("--model", type=Path)

    t = add("evaluate", "transfer a split in both directions and write the report")
    t.add_argument("--split", default="test")
    t.add_argument("--model", type=Path)

    t = add("score-pair", "print Con, Sty and CS of one candidate against its source")
    t.add_argument("--to-style", required=True)
    t.add_argument("source")
    t.add_argument("candidate")

    t = add("wmd", "print the optimal word-mover transport plan between two sentences")
    t.add_argument("first")
    t.add_argument("second")

    add("stats", "sentence counts per split and style")
    add("config", "list configuration keys and their defaults")
    return p


def resolve(args):
    overrides = dict(args.set)
    for flag, key in (("seed", "seed"), ("threads", "threads"), ("data_dir", "data_dir"), ("out_dir", "out_dir"),
                      ("bt_epochs", "train.bt_epochs"), ("warmup_epochs", "train.warmup_epochs"),
                      ("pollute_mode", "noise.pollute_mode")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    for flag, key in (("no_classifier", "train.use_classifier"), ("no_refinement", "train.use_refinement"),
                      ("no_style_noise", "train.use_style_noise")):
        if getattr(args, flag, False):
            overrides[key] = False
    return RunConfig.resolve(args.config, overrides=overrides)


def _ids(text, vocab, style):
    toks = tokenize(text)
    if not toks:
        raise ContractViolation("empty sentence")
    return make_seq(toks, style, vocab).ids


def dispatch(args, run, out=None):
    out = out or sys.stdout
    cmd = args.command
    if getattr(args, "to_style", None) is not None and args.to_style not in run.styles:
        raise ContractViolation(f"unknown style {args.to_style!r}; expected one of {run.styles}")
    if cmd == "make-toy":
        write_toy_corpus(run.data_dir, run.config["seed"], args.n_train, args.n_eval, args.n_eval)
        out.write(f"wrote toy corpus to {run.data_dir}\n")
    elif cmd == "prepare-vocab":
        out.write(f"{len(pl.prepare_vocab(run))} vocabulary entries\n")
    elif cmd == "train-classifier":
        for name, (_, acc) in pl.train_classifiers(run).items():
            out.write(f"{name} dev accuracy {100 * acc:.2f}\n")
    elif cmd == "extract-lexicon":
        lex = pl.build_lexicon(run)
        for s in run.styles:
            out.write(f"{s}: {len(lex.words[s])} words\n")
    elif cmd == "pretrain":
        pl.pretrain(run)
        out.write(f"wrote {run.path(pl.PRETRAINED)}\n")
    elif cmd == "train":
        result = pl.train_model(run, args.init)
        out.write(f"wrote {run.path(pl.MODEL)} (best back-translation epoch {result.best_epoch})\n")
    elif cmd == "transfer":
        n = pl.transfer_file(run, args.input, args.output, args.to_style, args.model)
        out.write(f"transferred {n} lines to {args.output}\n")
    elif cmd == "evaluate":
        out.write(pl.evaluate_split(run, args.split, args.model).format())
    elif cmd == "score-pair":
        vocab = pl.vocab_of(run)
        classifier = pl.classifier_of(run)
        scorer = CSScorer(WmdScorer(classifier.params["emb"]), classifier)
        sc = scorer.score(_ids(args.candidate, vocab, args.to_style), _ids(args.source, vocab, args.to_style),
                          args.to_style)
        out.write(f"con {sc.con:.6f}\nsty {sc.sty:.6f}\ncs {sc.cs:.6f}\n")
    elif cmd == "wmd":
        vocab = pl.vocab_of(run)
        w = WmdScorer(pl.classifier_of(run).params["emb"])
        s1 = w.signature(_ids(args.first, vocab, run.styles[0]))
        s2 = w.signature(_ids(args.second, vocab, run.styles[0]))
        out.write(format_plan(wmd_plan(s1, s2), s1, s2, vocab) + "\n")
    elif cmd == "stats":
        out.write(format_stats(corpus_stats(run.data_dir, run.styles), run.styles) + "\n")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    if args.command == "config":
        print(describe())
        return 0
    try:
        run = pl.Run(resolve(args))
        with threadpool_limits(limits=run.config["threads"]):
            return dispatch(args, run)
    except (ContractViolation, NumericError, FileNotFoundError) as exc:
        parser.print_usage(sys.stderr)
        print(f"sedae: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
