import numpy as np
import pytest

from finlex.adapt import (
    AdaptationConfig,
    FoldError,
    adapt_add,
    adapt_re,
    assign_folds,
    audit_fold_integrity,
    calibrate_theta,
    label_universe,
    threshold,
    union_lexicons,
)
from finlex.embeddings import EmbeddingModel, Vocab
from finlex.lexicon import SentimentLexicon
from finlex.wordclass import TrainingDataError

from conftest import make_doc


def gaussian_model(seed=0, n_pos=40, n_neg=160, d=6, sep=6.0, extra=()):
    """Two far-separated clusters; positives are pos###, negatives neg###."""
    rng = np.random.default_rng(seed)
    words = [f"pos{i:03d}" for i in range(n_pos)] + [f"neg{i:03d}" for i in range(n_neg)]
    X = rng.normal(size=(len(words), d))
    X[:n_pos, 0] += sep
    vecs = dict(zip(words, X))
    for w, v in extra:
        vecs[w] = np.asarray(v, float)
    vocab = Vocab.from_counts({w: 1 for w in vecs}, 1)
    return EmbeddingModel(vocab, np.array([vecs[w] for w in vocab.words])), words[:n_pos], words[n_pos:]


def lex(words, name="src", category="negative"):
    return SentimentLexicon(name, category, frozenset(words))


def test_config_validation():
    for bad in (dict(theta=0), dict(theta=1), dict(k_folds=1), dict(C=0)):
        with pytest.raises(ValueError):
            AdaptationConfig(**bad)


def test_label_universe():
    m, pos, neg = gaussian_model()
    d = label_universe({"pos000", "neg000"}, {"pos000"}, m)
    assert dict(zip(d.words, d.y)) == {"neg000": -1.0, "pos000": 1.0}
    with pytest.warns(RuntimeWarning):
        label_universe({"pos000", "neg000"}, {"pos000", "pos001"}, m)
    d = label_universe({"pos000", "neg000", "unseen"}, {"pos000"}, m)
    assert d.excluded == ["unseen"]
    with pytest.raises(TrainingDataError):
        label_universe({"neg000", "unseen"}, {"unseen"}, m)


def test_re_recovers_separated_clusters():
    m, pos, neg = gaussian_model()
    res = adapt_re(pos, pos + neg, m, AdaptationConfig(seed=4))
    agree = np.mean([(w in res.words) == (w in pos) for w in pos + neg])
    assert agree >= 0.95
    assert audit_fold_integrity(res) == []


def test_re_theta_extremes_and_monotonicity():
    m, pos, neg = gaussian_model(sep=1.5)
    base = AdaptationConfig(seed=2)
    folds = assign_folds(len(pos + neg), 5, 2)
    prev = None
    for theta in (0.3, 0.5, 0.8, 0.95):
        cfg = AdaptationConfig(theta=theta, seed=2)
        res = adapt_re(pos, pos + neg, m, cfg, folds=folds)
        if prev is not None:
            assert res.words <= prev
        prev = res.words
    full = adapt_re(pos, pos + neg, m, base, folds=folds)
    top = max(full.meta["probabilities"].values())
    assert threshold(full, top).words == frozenset()
    assert adapt_re(pos, pos + neg, m, AdaptationConfig(theta=min(top + 1e-9, 0.999999), seed=2),
                    folds=folds).words == frozenset()


def test_re_deterministic_and_meta():
    m, pos, neg = gaussian_model(sep=1.0)
    a = adapt_re(pos, pos + neg, m, AdaptationConfig(seed=7))
    b = adapt_re(pos, pos + neg, m, AdaptationConfig(seed=7))
    assert a.words == b.words and a.meta == b.meta
    sizes = a.meta["fold_sizes"]
    assert max(sizes) - min(sizes) <= 1 and sum(sizes) == len(pos + neg)


def test_re_threads_match_serial(monkeypatch):
    m, pos, neg = gaussian_model(sep=1.0)
    serial = adapt_re(pos, pos + neg, m, AdaptationConfig(seed=7))
    monkeypatch.setenv("FINLEX_THREADS", "3")
    assert adapt_re(pos, pos + neg, m, AdaptationConfig(seed=7)).meta == serial.meta


def test_refold_failure():
    m, pos, neg = gaussian_model(n_pos=1, n_neg=9)
    with pytest.raises(FoldError):
        adapt_re(pos, pos + neg, m, AdaptationConfig(k_folds=10))


def test_fold_integrity_audit_detects_tampering():
    m, pos, neg = gaussian_model()
    res = adapt_re(pos, pos + neg, m, AdaptationConfig(seed=1))
    w = pos[0]
    f = res.meta["audit"]["scored_by"][w]
    res.meta["audit"]["training_sets"][f].append(w)
    assert audit_fold_integrity(res) == [w]


def test_add_disjoint_and_strict_theta():
    # candidate "twin" sits exactly on a training positive
    m, pos, neg = gaussian_model(extra=[])
    twin_vec = m["pos000"].copy()
    m2, _, _ = gaussian_model(extra=[("twin", twin_vec), ("far", -10 * np.eye(6)[0])])
    source = lex(pos[:30])
    train = pos[:30] + neg[:100]
    cands = pos[30:] + neg[100:] + ["twin", "far"]
    res = adapt_add(source, train, cands, m2, AdaptationConfig())
    assert not (res.words & source.words)
    assert "twin" in res.words and "far" not in res.words
    assert len(set(pos[30:]) & res.words) >= 9
    probs = res.meta["probabilities"]
    top = max(probs.values())
    assert adapt_add(source, train, cands, m2, AdaptationConfig(theta=min(top + 1e-12, 0.9999999))).words == frozenset()
    with pytest.raises(ValueError):
        adapt_add(source, train, cands + [pos[0]], m2)


def test_union():
    a, b = lex({"a", "b", "c"}, "a"), lex({"d", "e", "f", "g"}, "b")
    u = union_lexicons(a, b)
    assert len(u) == 7 and u.name == "a+b"
    assert union_lexicons(a, a).words == a.words
    with pytest.raises(ValueError):
        union_lexicons(a, lex({"x"}, "u", "uncertain"))


def test_assign_folds_balanced():
    f = assign_folds(23, 5, 0)
    counts = np.bincount(f, minlength=5)
    assert counts.max() - counts.min() <= 1
    assert not np.array_equal(f, assign_folds(23, 5, 0, attempt=1))


def test_calibrate_theta():
    probs = {"a": 0.9, "b": 0.7, "c": 0.55}
    docs = [make_doc(["a", "b", "c", "x"] * 25, "d1")]
    assert calibrate_theta(probs, docs, 0.25) >= 0.7
    assert calibrate_theta(probs, docs, 0.75) < 0.55
