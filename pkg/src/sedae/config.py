"""Run configuration: ``key = value`` files, ``SEDAE_*`` environment variables, then flags.

Later sources win. Every key is declared in :data:`KEYS` with its type,
default and a one-line description; anything else is rejected.
"""

import os
from dataclasses import dataclass
from pathlib import Path

from .classifier import ClassifierHyper
from .errors import ContractViolation
from .noise import NoiseSpec
from .training import TrainConfig

ENV_PREFIX = "SEDAE_"


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text):
    return tuple(int(x) for x in str(text).replace(",", " ").split())


def _strs(text):
    return tuple(str(text).replace(",", " ").split())


# key: (parser, default, description)
KEYS = {
    "data_dir": (str, "data", "directory holding <split>.<style> files"),
    "out_dir": (str, "run", "directory for checkpoints, outputs and reports"),
    "styles": (_strs, ("pos", "neg"), "the two style names, in label order"),
    "seed": (int, 0, "global seed"),
    "threads": (int, 1, "BLAS worker threads"),
    "vocab.min_count": (int, 2, "minimum training-set frequency for a vocabulary entry"),
    "model.emb": (int, 512, "word and style embedding size"),
    "model.hidden": (int, 512, "LSTM hidden size per direction"),
    "model.layers": (int, 2, "encoder and decoder depth"),
    "train.lam": (float, 0.3, "weight of the MLE term against the style loss"),
    "train.warmup_epochs": (int, 5, "style-modelling epochs before back-translation"),
    "train.bt_epochs": (int, 10, "back-translation epochs"),
    "train.batch_size": (int, 32, "sentences per style per batch"),
    "train.lr": (float, 1e-4, "Adam learning rate"),
    "train.clip": (float, 5.0, "global gradient-norm clip"),
    "train.patience": (int, 5, "early-stopping patience on dev G2, in BT epochs"),
    "train.use_classifier": (_bool, True, "style loss and Sty score on"),
    "train.use_refinement": (_bool, True, "keep the best candidate instead of the newest"),
    "train.use_style_noise": (_bool, True, "pollute pseudo-parallel sources with style words"),
    "train.dae_noise_in_bt": (_bool, False, "also drop/shuffle sources during back-translation"),
    "train.style_modeling_in_bt": (_bool, False, "keep the style-modelling loss during back-translation"),
    "noise.drop_prob": (float, 0.1, "word-drop probability of the DAE noise"),
    "noise.shuffle_window": (int, 3, "maximum displacement of the local shuffle"),
    "noise.p_sn": (float, 0.2, "style-noise probability per position"),
    "noise.pollute_mode": (str, "replace", "style-noise mode: replace or insert"),
    "classifier.emb_dim": (int, 128, "Text-CNN embedding size"),
    "classifier.filters": (int, 100, "filters per width"),
    "classifier.widths": (_ints, (3, 4, 5), "filter widths"),
    "classifier.dropout": (float, 0.5, "dropout before the output layer"),
    "classifier.lr": (float, 1e-3, "Adam learning rate"),
    "classifier.batch_size": (int, 50, "batch size"),
    "classifier.epochs": (int, 5, "training epochs"),
    "classifier.eval_seed": (int, 1000, "seed offset of the separate evaluation classifier"),
    "lexicon.threshold": (float, 0.9, "minimum standardized-weight probability for a style word"),
    "lexicon.l2": (float, 1e-3, "L2 penalty of the word logistic regression"),
}


def env_name(key):
    return ENV_PREFIX + key.upper().replace(".", "_")


def parse_lines(text, source="<config>"):
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ContractViolation(f"{source}:{n}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key] = value
    return out


def _coerce(key, value):
    if key not in KEYS:
        raise ContractViolation(f"unknown configuration key {key!r}")
    parser = KEYS[key][0]
    if not isinstance(value, str):
        return value
    try:
        return parser(value)
    except ValueError as exc:
        raise ContractViolation(f"bad value for {key}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def resolve(cls, path=None, env=None, overrides=None):
        values = {k: spec[1] for k, spec in KEYS.items()}
        layers = []
        if path is not None:
            layers.append(parse_lines(Path(path).read_text(encoding="utf-8"), str(path)))
        env = os.environ if env is None else env
        layers.append({k: env[env_name(k)] for k in KEYS if env_name(k) in env})
        known_env = {env_name(k) for k in KEYS}
        stray = sorted(n for n in env if n.startswith(ENV_PREFIX) and n not in known_env)
        if stray:
            raise ContractViolation(f"unknown environment configuration {stray}")
        layers.append(overrides or {})
        for layer in layers:
            for k, v in layer.items():
                values[k] = _coerce(k, v)
        if len(values["styles"]) != 2 or values["styles"][0] == values["styles"][1]:
            raise ContractViolation("exactly two distinct styles are required")
        if values["threads"] < 1:
            raise ContractViolation("threads must be >= 1")
        return cls(values)

    def noise(self):
        v = self.values
        return NoiseSpec(v["noise.drop_prob"], v["noise.shuffle_window"], v["noise.p_sn"],
                         v["noise.pollute_mode"], v["seed"])

    def train_config(self):
        v = self.values
        return TrainConfig(
            lam=v["train.lam"], warmup_epochs=v["train.warmup_epochs"], bt_epochs=v["train.bt_epochs"],
            batch_size=v["train.batch_size"], lr=v["train.lr"], clip=v["train.clip"],
            emb=v["model.emb"], hidden=v["model.hidden"], layers=v["model.layers"],
            use_classifier=v["train.use_classifier"], use_refinement=v["train.use_refinement"],
            use_style_noise=v["train.use_style_noise"], dae_noise_in_bt=v["train.dae_noise_in_bt"],
            style_modeling_in_bt=v["train.style_modeling_in_bt"], patience=v["train.patience"],
            seed=v["seed"], noise=self.noise())

    def classifier_hyper(self):
        v = self.values
        return ClassifierHyper(v["classifier.emb_dim"], v["classifier.filters"], v["classifier.widths"],
                               v["classifier.dropout"], v["classifier.lr"], v["classifier.batch_size"],
                               v["classifier.epochs"])

    def dump(self):
        """Canonical ``key = value`` text, loadable by :meth:`resolve`."""
        lines = []
        for k in KEYS:
            v = self.values[k]
            if isinstance(v, tuple):
                v = " ".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


def describe():
    return "\n".join(f"{k:<28} {spec[2]} (default: {spec[1]})" for k, spec in KEYS.items())
