from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .huffman import HuffmanTree, build_huffman
from .vocab import Vocab


class OutOfVocabularyError(KeyError):
    pass


@dataclass
class EmbeddingModel:
    """Trained CBOW model: input (word) vectors plus Huffman inner-node vectors.

    ``node_vectors`` is ``None`` for models loaded from a plain word-vector file.
    """

    vocab: Vocab
    input_vectors: np.ndarray
    node_vectors: np.ndarray | None = None
    tree: HuffmanTree | None = None

    def __post_init__(self):
        if self.input_vectors.shape[0] != len(self.vocab):
            raise ValueError("input_vectors rows do not match vocabulary size")
        if self.node_vectors is not None and self.node_vectors.shape[0] != len(self.vocab) - 1:
            raise ValueError("node_vectors must have V-1 rows")

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def __getitem__(self, word: str) -> np.ndarray:
        try:
            return self.input_vectors[self.vocab.index[word]]
        except KeyError:
            raise OutOfVocabularyError(word) from None

    def vectors_for(self, words) -> np.ndarray:
        return np.stack([self[w] for w in words]) if len(words) else np.empty((0, self.dim))

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Full model (vocabulary counts, both weight matrices) as ``.npz``."""
        arrays = dict(
            words=np.array(self.vocab.words, dtype=object),
            counts=self.vocab.counts,
            min_count=np.array(self.vocab.min_count),
            input_vectors=self.input_vectors,
        )
        if self.node_vectors is not None:
            arrays["node_vectors"] = self.node_vectors
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingModel":
        with np.load(path, allow_pickle=True) as data:
            vocab = Vocab(list(data["words"]), data["counts"], int(data["min_count"]))
            node = data["node_vectors"] if "node_vectors" in data else None
            tree = build_huffman(vocab.counts) if node is not None else None
            return cls(vocab, data["input_vectors"], node, tree)

    def save_text(self, path: str | Path, header: bool = True) -> None:
        """Word vectors in the classic text layout: ``V D`` then ``word x1 ... xD``."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if header:
                fh.write(f"{len(self.vocab)} {self.dim}\n")
            for word, vec in zip(self.vocab.words, self.input_vectors):
                fh.write(word + " " + " ".join(repr(float(x)) for x in vec) + "\n")

    @classmethod
    def load_text(cls, path: str | Path) -> "EmbeddingModel":
        """Read a word-vector text file, with or without the ``V D`` header line."""
        with open(path, encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
        if not lines:
            raise ValueError(f"{path}: empty embedding file")
        first = lines[0].split()
        if len(first) == 2 and all(p.isdigit() for p in first):
            n_words, dim = int(first[0]), int(first[1])
            lines = lines[1:]
            if len(lines) != n_words:
                raise ValueError(f"{path}: header declares {n_words} words, found {len(lines)}")
        else:
            dim = len(first) - 1
        words, rows = [], []
        for i, line in enumerate(lines):
            parts = line.split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}: row {i} has {len(parts) - 1} values, expected {dim}")
            words.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
        vocab = Vocab(words, np.zeros(len(words), dtype=np.int64), min_count=0)
        return cls(vocab, np.array(rows, dtype=np.float64).reshape(len(words), dim))


def cosine_neighbors(model: EmbeddingModel, word: str, k: int = 10) -> list[tuple[str, float]]:
    """Top-``k`` words by cosine similarity to ``word``, excluding ``word`` itself.

    Equal similarities are ordered by vocabulary index.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if word not in model.vocab:
        raise OutOfVocabularyError(word)
    q = model.vocab.index[word]
    vecs = model.input_vectors
    norms = np.linalg.norm(vecs, axis=1)
    norms[norms == 0] = 1.0
    sims = vecs @ vecs[q] / (norms * norms[q])
    idx = np.arange(len(sims))
    mask = idx != q
    cand, cand_sims = idx[mask], sims[mask]
    order = np.lexsort((cand, -cand_sims))[:k]
    return [(model.vocab.words[cand[i]], float(cand_sims[i])) for i in order]
