"""Filing ingestion, tokenization and corpus-level filters.

A corpus on disk is JSON-lines, one filing per line::

    {"doc_id": "...", "firm_id": "...", "filing_date": "2004-03-15", "text": "..."}

or, once tokenized, the same record with a ``tokens`` array instead of ``text``.
"""
from __future__ import annotations

import datetime as dt
import json
import re
import unicodedata
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

__all__ = [
    "RawFiling",
    "TokenizedDoc",
    "CorpusStats",
    "CorpusFormatError",
    "tokenize",
    "tokenize_filing",
    "tokenize_filings",
    "filter_corpus",
    "corpus_stats",
    "read_corpus",
    "iter_records",
    "write_corpus",
]

# letters/digits (no underscore), optionally joined by single internal
# apostrophes or hyphens: "book-to-market", "company's"
_TOKEN_RE = re.compile(r"[^\W_]+(?:['’\-][^\W_]+)*")
_JOINERS = "'’-"


class CorpusFormatError(ValueError):
    """A corpus record is malformed."""


@dataclass(frozen=True)
class RawFiling:
    doc_id: str
    firm_id: str
    filing_date: dt.date
    text: str


@dataclass(frozen=True)
class TokenizedDoc:
    doc_id: str
    firm_id: str
    filing_date: dt.date
    tokens: tuple[str, ...]

    @property
    def token_count(self) -> int:
        return len(self.tokens)


@dataclass
class CorpusStats:
    total_tokens: int = 0
    freq: Counter = field(default_factory=Counter)
    docfreq: Counter = field(default_factory=Counter)

    @property
    def vocab_size(self) -> int:
        return len(self.freq)


def _is_numeric(token: str) -> bool:
    stripped = token
    for ch in _JOINERS:
        stripped = stripped.replace(ch, "")
    return stripped.isdigit()


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens of ``text`` with punctuation and pure numbers dropped.

    >>> tokenize("Tax Costs!")
    ['tax', 'costs']
    """
    # lowercase before matching so the token boundaries are those of the
    # lowercased string; this keeps the function idempotent
    text = unicodedata.normalize("NFC", text.lower())
    return [tok for tok in _TOKEN_RE.findall(text) if not _is_numeric(tok)]


def tokenize_filing(filing: RawFiling) -> TokenizedDoc:
    return TokenizedDoc(filing.doc_id, filing.firm_id, filing.filing_date,
                        tuple(tokenize(filing.text)))


def tokenize_filings(filings: Sequence[RawFiling], workers: int = 1) -> list[TokenizedDoc]:
    """Tokenize many filings, optionally across processes; output order follows input."""
    if workers <= 1 or len(filings) < 2:
        return [tokenize_filing(f) for f in filings]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(tokenize_filing, filings, chunksize=16))


def filter_corpus(
    docs: Iterable[TokenizedDoc],
    min_tokens: int = 2000,
    predicate: Callable[[TokenizedDoc], bool] | None = None,
) -> list[TokenizedDoc]:
    """Keep documents with at least ``min_tokens`` tokens.

    ``predicate`` carries filters that need data this module does not own
    (price, book-to-market, exchange); a document must pass it as well.
    """
    kept = []
    for doc in docs:
        if doc.token_count < min_tokens:
            continue
        if predicate is not None and not predicate(doc):
            continue
        kept.append(doc)
    return kept


def corpus_stats(docs: Iterable[TokenizedDoc | Sequence[str]]) -> CorpusStats:
    stats = CorpusStats()
    for doc in docs:
        tokens = doc.tokens if isinstance(doc, TokenizedDoc) else doc
        stats.total_tokens += len(tokens)
        stats.freq.update(tokens)
        stats.docfreq.update(set(tokens))
    return stats


# -- persistence -------------------------------------------------------------

def _parse_date(value, lineno: int) -> dt.date:
    try:
        return dt.date.fromisoformat(str(value))
    except ValueError as exc:
        raise CorpusFormatError(f"line {lineno}: invalid filing_date {value!r}") from exc


def iter_records(path: str | Path) -> Iterator[RawFiling | TokenizedDoc]:
    """Yield raw or tokenized documents from a JSON-lines corpus file."""
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from exc
            missing = [k for k in ("doc_id", "firm_id", "filing_date") if k not in rec]
            if missing:
                raise CorpusFormatError(f"line {lineno}: missing fields {missing}")
            has_text, has_tokens = "text" in rec, "tokens" in rec
            if has_text == has_tokens:
                raise CorpusFormatError(f"line {lineno}: exactly one of text/tokens required")
            doc_id = str(rec["doc_id"])
            if doc_id in seen:
                raise CorpusFormatError(f"line {lineno}: duplicate doc_id {doc_id!r}")
            seen.add(doc_id)
            date = _parse_date(rec["filing_date"], lineno)
            if has_text:
                yield RawFiling(doc_id, str(rec["firm_id"]), date, rec["text"])
            else:
                tokens = rec["tokens"]
                if not isinstance(tokens, list) or not all(isinstance(t, str) and t for t in tokens):
                    raise CorpusFormatError(f"line {lineno}: tokens must be nonempty strings")
                yield TokenizedDoc(doc_id, str(rec["firm_id"]), date, tuple(tokens))


def read_corpus(path: str | Path, workers: int = 1) -> list[TokenizedDoc]:
    """Read a corpus, tokenizing any raw-text records."""
    records = list(iter_records(path))
    raw_idx = [i for i, r in enumerate(records) if isinstance(r, RawFiling)]
    if raw_idx:
        done = tokenize_filings([records[i] for i in raw_idx], workers=workers)
        for i, doc in zip(raw_idx, done):
            records[i] = doc
    return records


def write_corpus(docs: Iterable[TokenizedDoc], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            rec = {
                "doc_id": doc.doc_id,
                "firm_id": doc.firm_id,
                "filing_date": doc.filing_date.isoformat(),
                "tokens": list(doc.tokens),
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
