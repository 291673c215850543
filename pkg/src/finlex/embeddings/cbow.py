"""CBOW word2vec with hierarchical softmax.

Each position contributes ``sum_j -log sigmoid((1 - 2 c_j) * h . n_j)`` where ``h``
is the mean of the context input vectors and ``(n_j, c_j)`` run over the inner
nodes and branch bits on the target word's Huffman path.
"""
from __future__ import annotations

import logging
import os
import warnings
from dataclasses import asdict, dataclass
from typing import Sequence

import numba
import numpy as np

from ..corpus import TokenizedDoc
from .huffman import HuffmanTree, build_huffman
from .model import EmbeddingModel
from .vocab import Vocab, build_vocab

log = logging.getLogger(__name__)

LR_FLOOR = 1e-4


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 400
    window: int = 5
    min_count: int = 5
    epochs: int = 1
    initial_lr: float = 0.05
    subsample_threshold: float = 1e-3
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.initial_lr > 0:
            raise ValueError("initial_lr must be > 0")
        if self.subsample_threshold < 0:
            raise ValueError("subsample_threshold must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


# -- reference loss and gradient (pure numpy) --------------------------------

def cbow_loss(syn0: np.ndarray, syn1: np.ndarray, context: Sequence[int],
              path: Sequence[int], code: Sequence[int]) -> float:
    h = syn0[np.asarray(context)].mean(axis=0)
    x = syn1[np.asarray(path)] @ h
    sign = 1.0 - 2.0 * np.asarray(code, dtype=np.float64)
    return float(np.logaddexp(0.0, -sign * x).sum())


def cbow_grad(syn0: np.ndarray, syn1: np.ndarray, context: Sequence[int],
              path: Sequence[int], code: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of :func:`cbow_loss` w.r.t. the input and node matrices."""
    context = np.asarray(context)
    path = np.asarray(path)
    h = syn0[context].mean(axis=0)
    x = syn1[path] @ h
    dx = -(1.0 - np.asarray(code, dtype=np.float64) - 1.0 / (1.0 + np.exp(-x)))
    g1 = np.zeros_like(syn1)
    np.add.at(g1, path, dx[:, None] * h[None, :])
    dh = dx @ syn1[path]
    g0 = np.zeros_like(syn0)
    np.add.at(g0, context, np.broadcast_to(dh / len(context), (len(context), len(h))))
    return g0, g1


# -- training kernels ---------------------------------------------------------

@numba.njit(cache=True)
def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@numba.njit(cache=True)
def _cbow_position(syn0, syn1, ctx, n_ctx, target, codes_flat, paths_flat, offsets, lr, neu1, neu1e):
    """One SGD step for one (context, target) example; exact sigmoid."""
    dim = syn0.shape[1]
    for d in range(dim):
        neu1[d] = 0.0
        neu1e[d] = 0.0
    for c in range(n_ctx):
        w = ctx[c]
        for d in range(dim):
            neu1[d] += syn0[w, d]
    inv = 1.0 / n_ctx
    for d in range(dim):
        neu1[d] *= inv
    for p in range(offsets[target], offsets[target + 1]):
        node = paths_flat[p]
        f = 0.0
        for d in range(dim):
            f += neu1[d] * syn1[node, d]
        g = (1.0 - codes_flat[p] - _sigmoid(f)) * lr
        for d in range(dim):
            neu1e[d] += g * syn1[node, d]
            syn1[node, d] += g * neu1[d]
    for c in range(n_ctx):
        w = ctx[c]
        for d in range(dim):
            syn0[w, d] += neu1e[d] * inv


@numba.njit(cache=True)
def _train_docs(syn0, syn1, words, doc_starts, doc_lo, doc_hi, shrink, lrs,
                codes_flat, paths_flat, offsets, window):
    dim = syn0.shape[1]
    neu1 = np.empty(dim)
    neu1e = np.empty(dim)
    ctx = np.empty(2 * window, dtype=np.int64)
    for di in range(doc_lo, doc_hi):
        start = doc_starts[di]
        end = doc_starts[di + 1]
        for pos in range(start, end):
            span = window - shrink[pos]
            n_ctx = 0
            lo = max(start, pos - span)
            hi = min(end, pos + span + 1)
            for c in range(lo, hi):
                if c != pos:
                    ctx[n_ctx] = words[c]
                    n_ctx += 1
            if n_ctx == 0:
                continue
            _cbow_position(syn0, syn1, ctx, n_ctx, words[pos], codes_flat, paths_flat,
                           offsets, lrs[pos], neu1, neu1e)


@numba.njit(parallel=True, cache=True)
def _train_docs_hogwild(syn0, syn1, words, doc_starts, chunk_bounds, shrink, lrs,
                        codes_flat, paths_flat, offsets, window):
    for t in numba.prange(len(chunk_bounds) - 1):
        _train_docs(syn0, syn1, words, doc_starts, chunk_bounds[t], chunk_bounds[t + 1],
                    shrink, lrs, codes_flat, paths_flat, offsets, window)


def train_position(model: EmbeddingModel, context: Sequence[str], target: str, lr: float) -> None:
    """Apply a single SGD update in place (the same kernel the trainer uses)."""
    idx = np.array([model.vocab.index[w] for w in context], dtype=np.int64)
    t = model.vocab.index[target]
    tree = model.tree
    dim = model.dim
    _cbow_position(model.input_vectors, model.node_vectors, idx, len(idx), t,
                   tree.codes_flat, tree.paths_flat, tree.offsets, lr, np.empty(dim), np.empty(dim))


# -- driver ------------------------------------------------------------------

def _keep_probability(counts: np.ndarray, threshold: float, total: int) -> np.ndarray:
    if threshold <= 0:
        return np.ones(len(counts))
    scaled = threshold * total
    return (np.sqrt(counts / scaled) + 1.0) * scaled / counts


def _worker_count(requested: int) -> int:
    cap = os.environ.get("FINLEX_THREADS")
    n = requested
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, min(n, numba.config.NUMBA_NUM_THREADS))


def train_cbow(
    corpus: Sequence[TokenizedDoc | Sequence[str]],
    config: TrainConfig = TrainConfig(),
    vocab: Vocab | None = None,
) -> EmbeddingModel:
    """Train CBOW/hierarchical-softmax embeddings.

    With ``config.workers == 1`` the result is a deterministic function of
    (corpus, config). More workers run unsynchronized updates on disjoint
    document chunks and give up bit-level reproducibility.
    """
    docs = [d.tokens if isinstance(d, TokenizedDoc) else d for d in corpus]
    doc_ids = [d.doc_id if isinstance(d, TokenizedDoc) else str(i) for i, d in enumerate(corpus)]
    if not docs:
        raise ValueError("empty corpus")
    if vocab is None:
        vocab = build_vocab(docs, config.min_count)
    tree = build_huffman(vocab.counts)
    V, D = len(vocab), config.dim

    rng = np.random.default_rng(config.seed)
    syn0 = (rng.random((V, D)) - 0.5) / D
    syn1 = np.zeros((V - 1, D))

    encoded = [np.array([vocab.index[t] for t in doc if t in vocab.index], dtype=np.int64)
               for doc in docs]
    train_words = int(sum(len(e) for e in encoded))
    if train_words == 0:
        raise ValueError("no in-vocabulary tokens in corpus")
    keep_p = _keep_probability(vocab.counts.astype(np.float64), config.subsample_threshold, train_words)
    total_steps = config.epochs * train_words + 1

    workers = _worker_count(config.workers)
    flat_all = np.concatenate(encoded)
    lens = np.array([len(e) for e in encoded], dtype=np.int64)
    doc_of_token = np.repeat(np.arange(len(lens)), lens)
    for epoch in range(config.epochs):
        u = rng.random(train_words)
        keep = keep_p[flat_all] >= u
        processed = epoch * train_words + np.arange(train_words)
        lr_all = config.initial_lr * np.maximum(1.0 - processed / total_steps, LR_FLOOR)

        kept_per_doc = np.bincount(doc_of_token[keep], minlength=len(lens)).astype(np.int64)
        empty = [doc_ids[i] for i in np.flatnonzero(kept_per_doc == 0)]
        if empty:
            msg = (f"epoch {epoch}: {len(empty)} document(s) have no in-vocabulary tokens "
                   f"after subsampling and are skipped (e.g. {empty[:3]})")
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            log.warning(msg)
        if not keep.any():
            raise ValueError("every token was removed by subsampling")

        words = flat_all[keep]
        lrs = lr_all[keep]
        doc_starts = np.concatenate([[0], np.cumsum(kept_per_doc)]).astype(np.int64)
        shrink = rng.integers(0, config.window, size=len(words)).astype(np.int64)
        log.info("epoch %d: %d of %d tokens kept after subsampling", epoch, len(words), train_words)

        n_docs = len(encoded)
        if workers == 1:
            _train_docs(syn0, syn1, words, doc_starts, 0, n_docs, shrink, lrs,
                        tree.codes_flat, tree.paths_flat, tree.offsets, config.window)
        else:
            numba.set_num_threads(workers)
            bounds = np.linspace(0, n_docs, workers + 1).round().astype(np.int64)
            _train_docs_hogwild(syn0, syn1, words, doc_starts, bounds, shrink, lrs,
                                tree.codes_flat, tree.paths_flat, tree.offsets, config.window)

    if not (np.isfinite(syn0).all() and np.isfinite(syn1).all()):
        raise FloatingPointError("training diverged: non-finite weights")
    return EmbeddingModel(vocab, syn0, syn1, tree)
