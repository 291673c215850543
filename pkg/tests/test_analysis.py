import numpy as np
import pytest

from finlex.analysis import neighbor_report, overlap_matrix, round_percent, size_table
from finlex.embeddings import EmbeddingModel, Vocab
from finlex.lexicon import SentimentLexicon


def lex(name, words):
    return SentimentLexicon(name, "negative", frozenset(words))


def test_sizes():
    t = size_table([lex("a", {"x", "y", "z"}), lex("e", set())])
    assert list(t["size"]) == [3, 0]


def test_overlap_basic():
    a, b, c = lex("a", {"x", "y"}), lex("b", {"x", "y"}), lex("c", {"z"})
    m = overlap_matrix([a, b, c])
    assert m.percent[0, 1] == 100 and m.percent[0, 2] == 0
    assert np.array_equal(m.counts, m.counts.T)
    assert all(m.percent[i, i] == 100 for i in range(3))
    with pytest.raises(ValueError):
        overlap_matrix([a, lex("e", set())])


def test_round_half_away():
    assert round_percent(1, 8) == 13  # 12.5
    assert round_percent(3, 8) == 38  # 37.5
    assert round_percent(1, 200) == 1  # 0.5
    assert round_percent(-1, 8) == -13


def test_published_size_consistency():
    # neg_lm 2355 and neg_RE 1205 words sharing 1150: 49% one way, 95% the other
    shared = {f"s{i}" for i in range(1150)}
    lm = lex("neg_lm", shared | {f"l{i}" for i in range(2355 - 1150)})
    re_ = lex("neg_RE", shared | {f"r{i}" for i in range(1205 - 1150)})
    m = overlap_matrix([lm, re_])
    assert (m.percent[0, 1], m.percent[1, 0]) == (49, 95)
    lo_a, hi_a = 2355 * 0.485, 2355 * 0.495
    lo_b, hi_b = 1205 * 0.945, 1205 * 0.955
    assert max(lo_a, lo_b) <= m.counts[0, 1] <= min(hi_a, hi_b)


def test_neighbor_report():
    m = EmbeddingModel(Vocab.from_counts({"a": 2, "b": 1}, 1), np.array([[1.0, 0.0], [0.5, 0.5]]))
    rep = neighbor_report(m, ["a", "zzz"], 1)
    assert rep.neighbors["a"][0][0] == "b" and rep.missing == ["zzz"]
    text = rep.to_text()
    assert "missing:\n  zzz" in text
