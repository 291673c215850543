import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finlex.lexicon import SentimentLexicon
from finlex.textvars import EmptyDocumentError, build_text_panel, text_variable, write_text_panel

from conftest import make_doc


def lex(words, name="L"):
    return SentimentLexicon(name, "negative", frozenset(words))


def test_worked_example():
    doc = make_doc(["loss"] * 50 + ["other"] * 4950)
    assert text_variable(doc, lex({"loss"})) == 0.01


def test_edges():
    doc = make_doc(["a", "b"])
    assert text_variable(doc, lex(set())) == 0.0
    assert text_variable(doc, lex({"a", "b"})) == 1.0
    with pytest.raises(EmptyDocumentError):
        text_variable(make_doc([]), lex({"a"}))


@given(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=50),
       st.sets(st.sampled_from("abcdef")), st.sets(st.sampled_from("abcdef")))
def test_monotone_and_scale_invariant(tokens, a, extra):
    doc = make_doc(tokens)
    small, big = lex(a), lex(a | extra)
    assert text_variable(doc, small) <= text_variable(doc, big)
    assert text_variable(make_doc(tokens * 2), small) == text_variable(doc, small)


def test_panel(tmp_path):
    docs = [make_doc(["a", "b", "c", "a"], "d1", "f1"), make_doc(["c"] * 3, "d2", "f2")]
    lexes = [lex({"a"}, "A"), lex({"c"}, "C")]
    panel = build_text_panel(docs, lexes)
    assert list(panel.columns) == ["doc_id", "firm_id", "filing_date", "A", "C"]
    assert panel.shape == (2, 5)
    for i, d in enumerate(docs):
        for lx in lexes:
            assert panel.loc[i, lx.name] == text_variable(d, lx)
    with pytest.raises(ValueError):
        build_text_panel(docs, [lex({"a"}, "A"), lex({"b"}, "A")])
    p = tmp_path / "p.csv"
    write_text_panel(build_text_panel([make_doc(["a", "b", "c"])], [lex({"a"}, "A")]), p)
    assert p.read_text().splitlines()[1].endswith(",0.3333333333")
    back = pd.read_csv(p)
    assert np.isclose(back.loc[0, "A"], 1 / 3, rtol=1e-9)
