"""Per-document dictionary text variables."""
from __future__ import annotations

from typing import Sequence

import pandas as pd

from .corpus import TokenizedDoc
from .lexicon import SentimentLexicon

ID_COLUMNS = ["doc_id", "firm_id", "filing_date"]


class EmptyDocumentError(ValueError):
    pass


def text_variable(doc: TokenizedDoc, lexicon: SentimentLexicon) -> float:
    """Share of the document's token occurrences that belong to the lexicon."""
    if doc.token_count == 0:
        raise EmptyDocumentError(f"document {doc.doc_id!r} has no tokens")
    words = lexicon.words
    hits = sum(1 for t in doc.tokens if t in words)
    return hits / doc.token_count


def build_text_panel(docs: Sequence[TokenizedDoc], lexicons: Sequence[SentimentLexicon]) -> pd.DataFrame:
    names = [lex.name for lex in lexicons]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ValueError(f"duplicate lexicon names: {dupes}")
    rows = []
    for doc in docs:
        row = {"doc_id": doc.doc_id, "firm_id": doc.firm_id, "filing_date": doc.filing_date.isoformat()}
        for lex in lexicons:
            row[lex.name] = text_variable(doc, lex)
        rows.append(row)
    return pd.DataFrame(rows, columns=ID_COLUMNS + names)


def write_text_panel(panel: pd.DataFrame, path) -> None:
    panel.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
