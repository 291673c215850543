import datetime as dt
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finlex.corpus import (
    CorpusFormatError,
    RawFiling,
    corpus_stats,
    filter_corpus,
    iter_records,
    read_corpus,
    tokenize,
    tokenize_filings,
    write_corpus,
)

from conftest import make_doc


@pytest.mark.parametrize("text, expected", [
    ("Tax Costs!", ["tax", "costs"]),
    ("", []),
    ("held in abeyance.", ["held", "in", "abeyance"]),
    ("book-to-market isn't 2007 ...", ["book-to-market", "isn't"]),
    ("-- ' 12,000 A1", ["a1"]),
    ("ÉCLAIR déjà", ["éclair", "déjà"]),
])
def test_tokenize_examples(text, expected):
    assert tokenize(text) == expected


def test_tokenize_nfc():
    assert tokenize("café") == tokenize("café") == ["café"]


@given(st.text())
@settings(max_examples=300)
def test_tokenize_idempotent(text):
    toks = tokenize(text)
    assert tokenize(" ".join(toks)) == toks
    for t in toks:
        assert t and t == t.lower() and not any(c.isspace() for c in t)


def test_filter_boundary():
    docs = [make_doc(["w"] * 1999, "a"), make_doc(["w"] * 2000, "b"), make_doc(["w"] * 2500, "c")]
    assert [d.doc_id for d in filter_corpus(docs)] == ["b", "c"]
    assert filter_corpus(docs, min_tokens=0) == docs


def test_filter_predicate():
    docs = [make_doc(["w"] * 5, "a"), make_doc(["w"] * 5, "b")]
    assert [d.doc_id for d in filter_corpus(docs, 1, lambda d: d.doc_id == "b")] == ["b"]


@given(st.lists(st.integers(0, 30), max_size=12), st.integers(0, 30))
def test_filter_idempotent(lengths, m):
    docs = [make_doc(["x"] * n, str(i)) for i, n in enumerate(lengths)]
    once = filter_corpus(docs, m)
    assert filter_corpus(once, m) == once


def test_corpus_stats_examples():
    s = corpus_stats([["a", "a", "b"]])
    assert (s.freq["a"], s.freq["b"], s.docfreq["a"]) == (2, 1, 1)
    s = corpus_stats([["a"], ["a"]])
    assert (s.freq["a"], s.docfreq["a"]) == (2, 2)
    s = corpus_stats([])
    assert s.total_tokens == 0 and s.vocab_size == 0


@given(st.lists(st.lists(st.sampled_from("abcde"), max_size=20), max_size=8))
def test_corpus_stats_totals(docs):
    s = corpus_stats(docs)
    assert s.total_tokens == sum(len(d) for d in docs) == sum(s.freq.values())


def test_parallel_tokenize_preserves_order():
    filings = [RawFiling(f"d{i}", "f", dt.date(2001, 1, 1), f"word{i} Alpha") for i in range(40)]
    serial = tokenize_filings(filings, workers=1)
    assert tokenize_filings(filings, workers=2) == serial
    assert serial[7].tokens == ("word7", "alpha")


def test_jsonl_roundtrip(tmp_path):
    raw = tmp_path / "raw.jsonl"
    recs = [
        {"doc_id": "a", "firm_id": "10001", "filing_date": "2003-02-28", "text": "Loss, impairment."},
        {"doc_id": "b", "firm_id": "10002", "filing_date": "2004-03-01", "tokens": ["x", "y"]},
    ]
    raw.write_text("".join(json.dumps(r) + "\n" for r in recs))
    docs = read_corpus(raw)
    assert docs[0].tokens == ("loss", "impairment") and docs[0].filing_date == dt.date(2003, 2, 28)
    out = tmp_path / "tok.jsonl"
    write_corpus(docs, out)
    assert read_corpus(out) == docs


@pytest.mark.parametrize("rec", [
    {"doc_id": "a", "firm_id": "1", "filing_date": "2003-02-28"},
    {"doc_id": "a", "firm_id": "1", "filing_date": "2003-02-28", "text": "x", "tokens": ["x"]},
    {"doc_id": "a", "firm_id": "1", "filing_date": "2003-02-30", "text": "x"},
    {"firm_id": "1", "filing_date": "2003-02-28", "text": "x"},
])
def test_bad_records(tmp_path, rec):
    p = tmp_path / "bad.jsonl"
    p.write_text(json.dumps(rec) + "\n")
    with pytest.raises(CorpusFormatError):
        list(iter_records(p))


def test_duplicate_doc_id(tmp_path):
    p = tmp_path / "dup.jsonl"
    r = {"doc_id": "a", "firm_id": "1", "filing_date": "2003-02-28", "text": "x"}
    p.write_text(json.dumps(r) + "\n" + json.dumps(r) + "\n")
    with pytest.raises(CorpusFormatError):
        read_corpus(p)
