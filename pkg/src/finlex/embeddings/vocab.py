from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..corpus import TokenizedDoc


class EmptyVocabularyError(ValueError):
    pass


@dataclass
class Vocab:
    """Words indexed by descending corpus frequency, ties broken lexicographically."""

    words: list[str]
    counts: np.ndarray
    min_count: int = 1
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.words) != len(self.counts):
            raise ValueError("words and counts differ in length")
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def count(self, word: str) -> int:
        return int(self.counts[self.index[word]])

    @classmethod
    def from_counts(cls, counts: dict[str, int] | Counter, min_count: int = 1) -> "Vocab":
        kept = [(w, c) for w, c in counts.items() if c >= min_count]
        if not kept:
            raise EmptyVocabularyError(f"no word reaches min_count={min_count}")
        kept.sort(key=lambda wc: (-wc[1], wc[0]))
        return cls([w for w, _ in kept], np.array([c for _, c in kept]), min_count)


def _tokens(doc) -> Sequence[str]:
    return doc.tokens if isinstance(doc, TokenizedDoc) else doc


def build_vocab(corpus: Iterable[TokenizedDoc | Sequence[str]], min_count: int = 5) -> Vocab:
    counts: Counter = Counter()
    for doc in corpus:
        counts.update(_tokens(doc))
    return Vocab.from_counts(counts, min_count)
