"""Dictionary comparison reports."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from .embeddings import EmbeddingModel, cosine_neighbors
from .lexicon import SentimentLexicon


def size_table(lexicons: Sequence[SentimentLexicon]) -> pd.DataFrame:
    return pd.DataFrame({"name": [lex.name for lex in lexicons],
                         "size": [len(lex) for lex in lexicons]}, columns=["name", "size"])


def round_percent(count: int, size: int) -> int:
    """``100 * count / size`` rounded half away from zero, in exact integer arithmetic."""
    if size <= 0:
        raise ValueError("size must be positive")
    if count < 0:
        return -round_percent(-count, size)
    return (200 * count + size) // (2 * size)


@dataclass
class OverlapMatrix:
    names: list[str]
    sizes: list[int]
    counts: np.ndarray  # |d_r ∩ d_c|, symmetric

    @property
    def percent(self) -> np.ndarray:
        """Display cells ``100 |d_r ∩ d_c| / |d_r|`` as integers."""
        n = len(self.names)
        out = np.empty((n, n), dtype=np.int64)
        for r in range(n):
            for c in range(n):
                out[r, c] = round_percent(int(self.counts[r, c]), self.sizes[r])
        return out

    def exact_percent(self) -> np.ndarray:
        return 100.0 * self.counts / np.asarray(self.sizes, dtype=np.float64)[:, None]

    def percent_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.percent, index=self.names, columns=self.names)

    def count_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.counts, index=self.names, columns=self.names)

    def to_tsv(self) -> str:
        """Percentage block followed by the raw intersection counts."""
        def block(title, frame):
            lines = [title, "\t".join(["row"] + self.names)]
            for name, row in frame.iterrows():
                lines.append("\t".join([name] + [str(int(v)) for v in row]))
            return lines
        lines = block("# percent of row dictionary", self.percent_frame())
        lines.append("")
        lines += block("# intersection counts", self.count_frame())
        return "\n".join(lines) + "\n"


def overlap_matrix(lexicons: Sequence[SentimentLexicon]) -> OverlapMatrix:
    empty = [lex.name for lex in lexicons if len(lex) == 0]
    if empty:
        raise ValueError(f"empty row dictionary: {empty}")
    n = len(lexicons)
    counts = np.zeros((n, n), dtype=np.int64)
    for r in range(n):
        for c in range(r, n):
            counts[r, c] = counts[c, r] = len(lexicons[r].words & lexicons[c].words)
    return OverlapMatrix([lex.name for lex in lexicons], [len(lex) for lex in lexicons], counts)


@dataclass
class NeighborReport:
    k: int
    neighbors: dict[str, list[tuple[str, float]]]
    missing: list[str]

    def to_text(self) -> str:
        lines = []
        for word, nbrs in self.neighbors.items():
            lines.append(f"{word}:")
            lines += [f"  {i}. {w}\t{s:.4f}" for i, (w, s) in enumerate(nbrs, 1)]
        lines.append("missing:")
        lines += [f"  {w}" for w in self.missing]
        return "\n".join(lines) + "\n"

    def to_tsv(self) -> str:
        lines = ["probe\trank\tneighbor\tcosine"]
        for word, nbrs in self.neighbors.items():
            lines += [f"{word}\t{i}\t{w}\t{s:.6f}" for i, (w, s) in enumerate(nbrs, 1)]
        lines += [f"{w}\t\t\t" for w in self.missing]
        return "\n".join(lines) + "\n"


def neighbor_report(model: EmbeddingModel, probe_words: Sequence[str], k: int = 10) -> NeighborReport:
    found, missing = {}, []
    for w in probe_words:
        if w in model:
            found[w] = cosine_neighbors(model, w, k)
        else:
            missing.append(w)
    return NeighborReport(k, found, missing)
