"""Two-phase training: style modelling warmup, then refined iterative back-translation."""

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import model as m
from .corpus import make_batches
from .errors import ContractViolation, NumericError
from .evaluation import EvalReport, score_direction
from .nn import AdamState, adam_step, clip_grad_norm, load_tensors, save_tensors, tensors_digest
from .noise import NoiseSpec, dae_corrupt, derive_rng, pollute
from .refinement import CSScorer, emit_pairs, init_sets, refinement_stats, update_sets
from .wmd import WmdScorer

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.3
    warmup_epochs: int = 5
    bt_epochs: int = 10
    batch_size: int = 32
    lr: float = 1e-4
    clip: float = 5.0
    emb: int = 512
    hidden: int = 512
    layers: int = 2
    use_classifier: bool = True
    use_refinement: bool = True
    use_style_noise: bool = True
    dae_noise_in_bt: bool = False
    style_modeling_in_bt: bool = False
    patience: int = 5
    seed: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ContractViolation("lambda must lie in [0, 1]")
        if self.warmup_epochs < 0 or self.bt_epochs < 0:
            raise ContractViolation("epoch counts must be >= 0")

    @property
    def effective_lam(self):
        return self.lam if self.use_classifier else 1.0


@dataclass
class StyleTransferModel:
    params: dict
    dims: m.ModelDims
    styles: tuple
    adam: AdamState | None = None

    @classmethod
    def create(cls, dims, styles, seed, lr=1e-4):
        params = m.init_params(dims, np.random.default_rng([seed, 1]))
        return cls(params, dims, tuple(styles), AdamState.for_params(params, lr=lr))

    def style_index(self, style):
        return self.styles.index(style)

    def encode(self, seq):
        ids = np.asarray([seq.ids], dtype=np.int64)
        enc_out, init_h, _ = m.encode(self.params, ids, np.ones_like(ids, dtype=bool), self.dims.layers)
        return enc_out, init_h

    def decode(self, seq, target_style, teacher_tokens=None):
        """One sentence: teacher-forced distributions, or greedy decoding when no tokens are given."""
        enc_out, init_h = self.encode(seq)
        mask = np.ones(enc_out.shape[:2], dtype=bool)
        k = np.array([self.style_index(target_style)])
        if teacher_tokens is not None:
            dec_in, _, _ = m.teacher_arrays([tuple(teacher_tokens)])
            logits, _ = m.decode_teacher(self.params, enc_out, mask, init_h, k, dec_in[:, :len(teacher_tokens)],
                                         self.dims.layers)
            probs = m.softmax(logits)[0]
            return m.DecodeOutput([tuple(teacher_tokens)], [probs], target_style)
        seqs, dists = m.greedy_decode(self.params, enc_out, mask, init_h, k, self.dims.layers,
                                      keep_dists=True)
        return m.DecodeOutput(seqs, dists, target_style)

    def transfer(self, sources, target_style, batch_size=128):
        ids, _ = m.translate(self.params, self.dims, sources, self.style_index(target_style), batch_size)
        return ids

    def digest(self):
        return tensors_digest(self.params)

    def to_tensors(self, with_optimizer=True):
        out = {f"model/{k}": v for k, v in self.params.items()}
        d = self.dims
        out["model/meta/dims"] = np.array([d.vocab, d.emb, d.hidden, d.layers], dtype=np.float64)
        if with_optimizer and self.adam is not None:
            a = self.adam
            out["optim/meta"] = np.array([a.lr, a.beta1, a.beta2, a.eps, a.step], dtype=np.float64)
            for k in self.params:
                out[f"optim/m/{k}"] = a.m[k]
                out[f"optim/v/{k}"] = a.v[k]
        return out

    def save(self, path, with_optimizer=True):
        save_tensors(path, self.to_tensors(with_optimizer))

    @classmethod
    def load(cls, path, styles):
        t = load_tensors(path)
        vocab, emb, hidden, layers = (int(x) for x in t["model/meta/dims"])
        params = {k[6:]: v for k, v in t.items() if k.startswith("model/") and not k.startswith("model/meta/")}
        adam = None
        if "optim/meta" in t:
            lr, b1, b2, eps, step = t["optim/meta"]
            adam = AdamState(lr, b1, b2, eps, int(step),
                             {k: t[f"optim/m/{k}"] for k in params}, {k: t[f"optim/v/{k}"] for k in params})
        return cls(params, m.ModelDims(vocab, emb, hidden, layers), tuple(styles), adam)


@dataclass
class EpochLog:
    epoch: int
    phase: str
    loss: float
    seconds: float
    parts: dict = field(default_factory=dict)
    report: EvalReport | None = None
    refinement: list = field(default_factory=list)

    def metrics_line(self):
        r = self.report
        return f"epoch {self.epoch} acc {r.acc:.2f} bleu {r.bleu:.2f} g2 {r.g2:.2f} h2 {r.h2:.2f}"


@dataclass
class TrainResult:
    model: StyleTransferModel
    history: list
    best_epoch: int
    candidate_sets: tuple = ()


def style_modeling_loss(tm, x_seqs, y_seqs, noise, rng):
    """Reconstruction NLL of x from (c(x), S_X) plus that of y from (c(y), S_Y)."""
    xs = [dae_corrupt(s, noise, rng).ids for s in x_seqs]
    ys = [dae_corrupt(s, noise, rng).ids for s in y_seqs]
    sources = xs + ys
    targets = [s.ids for s in x_seqs] + [s.ids for s in y_seqs]
    style_idx = [0] * len(x_seqs) + [1] * len(y_seqs)
    groups = style_idx
    return m.reconstruction_loss(tm.params, tm.dims, sources, targets, style_idx, groups)


def _step(tm, grads, config):
    clip_grad_norm(grads, config.clip)
    adam_step(tm.params, grads, tm.adam)


def evaluate(tm, corpora, references, eval_classifier, vocab):
    """Transfer each corpus to the other style and score it."""
    report = EvalReport()
    for k, corpus in enumerate(corpora):
        src = corpus.style
        tgt = tm.styles[1 - tm.style_index(src)]
        sources = [s.ids for s in corpus]
        outputs = tm.transfer(sources, tgt)
        refs = references[k] if references is not None else None
        report.directions.append(score_direction(sources, outputs, refs, src, tgt, eval_classifier, vocab))
    return report


def _paired_batches(a, b):
    n = max(len(a), len(b))
    return [(a[k % len(a)], b[k % len(b)]) for k in range(n)]


def warmup(tm, config, train, history, on_epoch=None):
    x_corpus, y_corpus = train
    for epoch in range(config.warmup_epochs):
        t0 = time.perf_counter()
        bx = make_batches(x_corpus, config.batch_size, [config.seed, 2, epoch, 0])
        by = make_batches(y_corpus, config.batch_size, [config.seed, 2, epoch, 1])
        losses = []
        for k, (b1, b2) in enumerate(_paired_batches(bx, by)):
            rng = derive_rng(config.seed, 3, epoch, k)
            loss, grads = style_modeling_loss(
                tm, [x_corpus[i] for i in b1.index], [y_corpus[i] for i in b2.index], config.noise, rng)
            _check_finite(loss, "warmup", epoch)
            _step(tm, grads, config)
            losses.append(loss)
        entry = EpochLog(epoch, "warmup", float(np.mean(losses)), time.perf_counter() - t0)
        history.append(entry)
        log.info("warmup epoch %d loss %.4f (%.1fs)", epoch, entry.loss, entry.seconds)
        if on_epoch:
            on_epoch(entry, tm)


def _check_finite(loss, phase, epoch):
    if not np.isfinite(loss):
        raise NumericError(f"loss diverged during {phase} epoch {epoch}: {loss}")


def back_translate(tm, corpus, source_style):
    """Greedy transfer of a whole corpus toward the opposite style with the current (frozen) parameters."""
    target = tm.styles[1 - tm.style_index(source_style)]
    return tm.transfer([s.ids for s in corpus], target), target


def transfer_epoch(tm, config, pairs, lexicon, vocab, classifier, epoch, train=None):
    """One pass of ``lam * L_MLE + (1 - lam) * L_style`` over refined pairs of both directions."""
    lam = config.effective_lam
    by_dir = [[p for p in pairs if p.target.style == s] for s in tm.styles]
    rng_order = np.random.default_rng([config.seed, 4, epoch])
    batches = []
    for group in by_dir:
        order = rng_order.permutation(len(group))
        batches.append([[group[i] for i in order[k:k + config.batch_size]]
                        for k in range(0, len(order), config.batch_size)])
    if not batches[0] or not batches[1]:
        raise ContractViolation("transfer epoch needs pseudo pairs in both directions")
    style_words = {s: lexicon.pairs(s, vocab) for s in tm.styles} if config.use_style_noise else None
    losses, mle, sty = [], [], []
    for k, (b1, b2) in enumerate(_paired_batches(*batches)):
        rng = derive_rng(config.seed, 5, epoch, k)
        sources, targets, style_idx, groups = [], [], [], []
        for g, batch in enumerate((b1, b2)):
            for p in batch:
                src = p.target.__class__(tuple(vocab.decode(p.source)), p.source, p.source_style)
                if config.dae_noise_in_bt:
                    src = dae_corrupt(src, config.noise, rng)
                if config.use_style_noise:
                    src = pollute(src, style_words[p.source_style], config.noise.p_sn, config.noise.pollute_mode, rng)
                sources.append(src.ids)
                targets.append(p.target.ids)
                style_idx.append(tm.style_index(p.target.style))
                groups.append(g)
        loss, parts, grads = m.transfer_loss(tm.params, tm.dims, sources, targets, style_idx, classifier, lam, groups)
        _check_finite(loss, "transfer", epoch)
        if config.style_modeling_in_bt and train is not None:
            xs = [train[0][int(i)] for i in rng.integers(len(train[0]), size=len(b1))]
            ys = [train[1][int(i)] for i in rng.integers(len(train[1]), size=len(b2))]
            sm_loss, sm_grads = style_modeling_loss(tm, xs, ys, config.noise, rng)
            for name, g in sm_grads.items():
                grads[name] += g
            loss += sm_loss
        _step(tm, grads, config)
        losses.append(loss)
        mle.append(parts["mle"])
        sty.append(parts["style"])
    return float(np.mean(losses)), {"mle": float(np.mean(mle)), "style": float(np.mean(sty))}


def train(config, train_corpora, vocab, lexicon, classifier, eval_classifier,
          dev_corpora=None, dev_references=None, on_epoch=None, init_model=None):
    """Run the full schedule and return the model with the best dev G2 (last epoch without dev data).

    ``train_corpora`` is (X corpus, Y corpus) in the style order shared with
    the classifiers. ``init_model`` resumes from a warmed-up model and skips
    phase 1.
    """
    styles = tuple(c.style for c in train_corpora)
    if classifier is not None and tuple(classifier.styles) != styles:
        raise ContractViolation("classifier style order differs from the corpora")
    dims = m.ModelDims(len(vocab), config.emb, config.hidden, config.layers)
    history = []
    if init_model is None:
        tm = StyleTransferModel.create(dims, styles, config.seed, config.lr)
        warmup(tm, config, train_corpora, history, on_epoch)
    else:
        tm = StyleTransferModel({k: v.copy() for k, v in init_model.params.items()}, init_model.dims, styles,
                                _copy_adam(init_model.adam, config.lr))

    if config.bt_epochs == 0:
        return TrainResult(tm, history, -1)

    scorer = CSScorer(WmdScorer(classifier.params["emb"]), classifier if config.use_classifier else None)
    sets = [init_sets(train_corpora[0], styles[1]), init_sets(train_corpora[1], styles[0])]
    best = (-np.inf, None, -1)
    stale = 0
    for epoch in range(config.bt_epochs):
        t0 = time.perf_counter()
        before = tm.digest()
        for k, corpus in enumerate(train_corpora):
            cands, _ = back_translate(tm, corpus, corpus.style)
            sets[k] = update_sets(sets[k], cands, epoch, scorer, keep_best=config.use_refinement)
        if tm.digest() != before:
            raise AssertionError("back-translation modified parameters")
        stats = [refinement_stats(s, epoch) for s in sets]
        pairs = emit_pairs(*sets)
        loss, parts = transfer_epoch(tm, config, pairs, lexicon, vocab, classifier, epoch, train_corpora)
        entry = EpochLog(epoch, "bt", loss, 0.0, parts, refinement=stats)
        if dev_corpora is not None and eval_classifier is not None:
            entry.report = evaluate(tm, dev_corpora, dev_references, eval_classifier, vocab)
        entry.seconds = time.perf_counter() - t0
        history.append(entry)
        log.info("bt epoch %d loss %.4f mle %.4f style %.4f (%.1fs)%s", epoch, loss, parts["mle"], parts["style"],
                 entry.seconds, "  " + entry.metrics_line() if entry.report else "")
        if on_epoch:
            on_epoch(entry, tm)
        score = entry.report.g2 if entry.report else epoch
        if score > best[0]:
            best = (score, {k: v.copy() for k, v in tm.params.items()}, epoch)
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                log.info("early stop after epoch %d (best %d)", epoch, best[2])
                break
    tm.params = best[1]
    return TrainResult(tm, history, best[2], tuple(sets))


def _copy_adam(adam, lr):
    if adam is None:
        return None
    return AdamState(lr, adam.beta1, adam.beta2, adam.eps, adam.step,
                     {k: v.copy() for k, v in adam.m.items()}, {k: v.copy() for k, v in adam.v.items()})


def config_dict(config):
    d = asdict(config)
    d["noise"] = asdict(config.noise)
    return d
