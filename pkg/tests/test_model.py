import numpy as np
import pytest

from sedae import model as m
from sedae.corpus import EOS, PAD, pad_ids
from sedae.nn import cross_entropy
from sedae.training import StyleTransferModel


def _params(seed=0, V=10, layers=2):
    dims = m.ModelDims(vocab=V, emb=4, hidden=3, layers=layers)
    rng = np.random.default_rng(seed)
    p = m.init_params(dims, rng)
    for k in p:
        p[k] = p[k] + rng.normal(0, 0.5, size=p[k].shape)
    return dims, p


def _encode(p, dims, seqs):
    ids, mask, _ = pad_ids(seqs)
    return m.encode(p, ids, mask, dims.layers)[:2] + (mask,)


def test_padding_does_not_leak_into_the_encoding():
    dims, p = _params()
    short = (4, 5, 6)
    out_b, h_b, _ = _encode(p, dims, [short, (7, 8, 9, 4, 5, 6)])
    out_a, h_a, _ = _encode(p, dims, [short])
    assert np.allclose(out_b[0, :3], out_a[0], atol=1e-12)
    for hb, ha in zip(h_b, h_a):
        assert np.allclose(hb[0], ha[0], atol=1e-12)


def test_style_embedding_drives_the_first_step():
    dims, p = _params()
    enc, init, mask = _encode(p, dims, [(4, 5, 6)] * 2)
    logits, _ = m.decode_teacher(p, enc, mask, init, np.array([0, 1]), np.array([[PAD, 7], [PAD, 7]]), dims.layers)
    assert not np.allclose(logits[0, 0], logits[1, 0])
    p2 = dict(p)
    p2["style"] = p["style"][::-1].copy()
    swapped, _ = m.decode_teacher(p2, enc, mask, init, np.array([1, 0]), np.array([[PAD, 7], [PAD, 7]]), dims.layers)
    assert np.allclose(swapped, logits)


def test_greedy_decode_replays_under_teacher_forcing():
    dims, p = _params(3)
    sources = [(4, 5, 6), (7, 8), (9,)]
    enc, init, mask = _encode(p, dims, sources)
    style = np.array([0, 1, 0])
    seqs, dists = m.greedy_decode(p, enc, mask, init, style, dims.layers, max_len=8, keep_dists=True)
    for b, s in enumerate(seqs):
        full = list(s) + ([EOS] if len(dists[b]) > len(s) else [])
        dec_in = np.array([[PAD] + full[:-1]]) if full else np.array([[PAD]])
        logits, _ = m.decode_teacher(p, enc[b:b + 1], mask[b:b + 1], [h[b:b + 1] for h in init],
                                     style[b:b + 1], dec_in, dims.layers)
        assert np.argmax(logits[0], axis=-1).tolist()[:len(full)] == full
        assert np.allclose(dists[b], m.softmax(logits[0])[:len(dists[b])])


def test_decode_limit():
    assert m.decode_limit([3, 5]) == 14
    assert m.decode_limit([60]) == 64


def test_grouped_cross_entropy_is_sum_of_group_means():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(4, 3, 5))
    targets = rng.integers(5, size=(4, 3))
    mask = np.ones((4, 3), dtype=bool)
    mask[0, 2] = False
    groups = [0, 1, 0, 1]
    total, _ = m.grouped_cross_entropy(logits, targets, mask, groups)
    a, _ = cross_entropy(logits[[0, 2]], targets[[0, 2]], mask[[0, 2]])
    b, _ = cross_entropy(logits[[1, 3]], targets[[1, 3]], mask[[1, 3]])
    assert total == pytest.approx(a + b)


def test_teacher_arrays():
    dec_in, dec_out, mask = m.teacher_arrays([(4, 5), (6,)])
    assert dec_out.tolist() == [[4, 5, EOS], [6, EOS, PAD]]
    assert dec_in[:, 1:].tolist() == [[4, 5], [6, PAD]]
    assert mask.tolist() == [[True, True, True], [True, True, False]]


def test_losses_leave_parameters_untouched():
    from sedae import classifier as cls
    dims, p = _params(4)
    before = m.params_digest(p)
    clf = cls.init_textcnn(dims.vocab, 3, np.random.default_rng(0), (1, 2), 2)
    m.transfer_loss(p, dims, [(4, 5)], [(6, 7)], [1], clf, 0.3)
    m.translate(p, dims, [(4, 5), (6,)], 0)
    assert m.params_digest(p) == before


def test_model_checkpoint_round_trip(tmp_path):
    tm = StyleTransferModel.create(m.ModelDims(12, 4, 3, 2), ("pos", "neg"), seed=1, lr=0.01)
    tm.adam.step = 3
    tm.save(tmp_path / "m.ckpt")
    back = StyleTransferModel.load(tmp_path / "m.ckpt", ("pos", "neg"))
    assert back.digest() == tm.digest()
    assert back.dims == tm.dims and back.adam.step == 3 and back.adam.lr == 0.01
    assert back.transfer([(4, 5, 6)], "neg") == tm.transfer([(4, 5, 6)], "neg")
