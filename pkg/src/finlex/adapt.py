"""Dictionary adaptation from embedding-space classifiers.

``adapt_add`` proposes new words for a manual lexicon; ``adapt_re`` relabels a
whole word universe with k-fold cross-validated classifiers so that each word
is judged by a model that never saw it.
"""
from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import TokenizedDoc
from .embeddings import EmbeddingModel
from .lexicon import SentimentLexicon, content_hash
from .wordclass import (
    LabeledWordSet,
    LinearClassifier,
    PlattCalibration,
    TrainingDataError,
    fit_platt,
    train_svm,
)

log = logging.getLogger(__name__)

MAX_REFOLD_ATTEMPTS = 10


class FoldError(RuntimeError):
    pass


@dataclass(frozen=True)
class AdaptationConfig:
    theta: float = 0.8
    k_folds: int = 5
    seed: int = 0
    C: float = 1.0
    normalize: bool = False

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie strictly between 0 and 1")
        if self.k_folds < 2:
            raise ValueError("k_folds must be >= 2")
        if not self.C > 0:
            raise ValueError("C must be positive")


def label_universe(universe: Iterable[str], positives: Iterable[str], model: EmbeddingModel) -> LabeledWordSet:
    """Label every embedded universe word +1 if it is a positive, else -1."""
    universe = set(universe)
    positives = set(positives)
    outside = positives - universe
    if outside:
        warnings.warn(f"{len(outside)} positive word(s) outside the universe are ignored",
                      RuntimeWarning, stacklevel=2)
    words, excluded = [], []
    for w in sorted(universe):
        (words if w in model else excluded).append(w)
    if excluded:
        log.info("%d universe word(s) have no embedding and are excluded", len(excluded))
    y = np.array([1.0 if w in positives else -1.0 for w in words])
    if not (y > 0).any() or not (y < 0).any():
        raise TrainingDataError(
            f"labeled set needs both classes after exclusions ({int((y > 0).sum())} positive, "
            f"{int((y < 0).sum())} negative)")
    return LabeledWordSet(words, model.vectors_for(words).reshape(len(words), model.dim), y, excluded)


def fit_calibrated(data: LabeledWordSet, config: AdaptationConfig) -> tuple[LinearClassifier, PlattCalibration]:
    """SVM plus a Platt sigmoid fitted on the SVM's own training scores."""
    clf = train_svm(data, C=config.C, normalize=config.normalize)
    calib = fit_platt(clf.decision_function(data.X), data.y)
    return clf, calib


def _config_meta(config: AdaptationConfig) -> dict:
    return {"config": asdict(config), "seed": config.seed}


def adapt_add(
    source: SentimentLexicon,
    training_universe: Iterable[str],
    candidate_words: Iterable[str],
    model: EmbeddingModel,
    config: AdaptationConfig = AdaptationConfig(),
    name: str | None = None,
) -> SentimentLexicon:
    """Words outside ``source`` whose calibrated probability exceeds ``theta``."""
    candidates = set(candidate_words)
    clash = candidates & source.words
    if clash:
        raise ValueError(f"candidates overlap the source lexicon: {sorted(clash)[:5]}")
    data = label_universe(training_universe, source.words, model)
    clf, calib = fit_calibrated(data, config)

    cand = sorted(w for w in candidates if w in model)
    n_missing = len(candidates) - len(cand)
    probs = calib.probability(clf.decision_function(model.vectors_for(cand).reshape(len(cand), model.dim))) \
        if cand else np.empty(0)
    chosen = frozenset(w for w, p in zip(cand, probs) if p > config.theta)
    meta = _config_meta(config)
    meta.update(
        method="ADD",
        source=source.name,
        source_sha256=content_hash(source.words),
        n_train=len(data), n_train_pos=data.n_pos, n_train_excluded=len(data.excluded),
        n_candidates=len(cand), n_candidates_missing=n_missing,
        platt_a=calib.A, platt_b=calib.B,
        probabilities={w: float(p) for w, p in zip(cand, probs)},
    )
    log.info("ADD %s: %d of %d candidates above theta=%g", source.name, len(chosen), len(cand), config.theta)
    return SentimentLexicon(name or f"{source.name}_ADD", source.category, chosen, meta)


def assign_folds(n: int, k: int, seed: int, attempt: int = 0) -> np.ndarray:
    """Fold index per item from a seeded uniform permutation; sizes differ by at most one."""
    rng = np.random.default_rng([seed, attempt])
    folds = np.empty(n, dtype=np.int64)
    folds[rng.permutation(n)] = np.arange(n) % k
    return folds


def _valid_folds(y: np.ndarray, folds: np.ndarray, k: int) -> bool:
    for f in range(k):
        train = y[folds != f]
        if not (train > 0).any() or not (train < 0).any():
            return False
    return True


def _thread_count() -> int:
    cap = os.environ.get("FINLEX_THREADS")
    return max(1, int(cap)) if cap else 1


def adapt_re(
    positives: Iterable[str],
    universe: Iterable[str],
    model: EmbeddingModel,
    config: AdaptationConfig = AdaptationConfig(),
    name: str = "RE",
    category: str = "negative",
    folds: Sequence[int] | None = None,
) -> SentimentLexicon:
    """Relabel ``universe`` by k-fold held-out calibrated probabilities.

    Pass ``folds`` (aligned with the sorted embedded universe) to hold the
    partition fixed across calls.
    """
    positives = set(positives)
    data = label_universe(universe, positives, model)
    n, k = len(data), config.k_folds
    if n < k:
        raise FoldError(f"universe of {n} words cannot be split into {k} folds")

    if folds is not None:
        folds = np.asarray(folds, dtype=np.int64)
        if len(folds) != n or not _valid_folds(data.y, folds, k):
            raise FoldError("supplied fold assignment is invalid for this universe")
        attempt = None
    else:
        for attempt in range(MAX_REFOLD_ATTEMPTS):
            folds = assign_folds(n, k, config.seed, attempt)
            if _valid_folds(data.y, folds, k):
                break
            log.warning("fold assignment %d leaves a single-class training set; refolding", attempt)
        else:
            raise FoldError(f"no valid {k}-fold split after {MAX_REFOLD_ATTEMPTS} attempts")

    def run_fold(f: int):
        train_idx = np.flatnonzero(folds != f)
        test_idx = np.flatnonzero(folds == f)
        clf, calib = fit_calibrated(data.subset(train_idx), config)
        probs = calib.probability(clf.decision_function(data.X[test_idx]))
        log.info("RE %s fold %d: trained on %d words, scored %d", name, f, len(train_idx), len(test_idx))
        return train_idx, test_idx, probs, calib

    threads = min(_thread_count(), k)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(run_fold, range(k)))
    else:
        outputs = [run_fold(f) for f in range(k)]

    prob = np.empty(n)
    scored_by = np.full(n, -1, dtype=np.int64)
    training_sets = {}
    platt = {}
    for f, (train_idx, test_idx, probs, calib) in enumerate(outputs):
        prob[test_idx] = probs
        scored_by[test_idx] = f
        training_sets[f] = [data.words[i] for i in train_idx]
        platt[f] = (calib.A, calib.B)

    chosen = frozenset(w for w, p in zip(data.words, prob) if p > config.theta)
    meta = _config_meta(config)
    meta.update(
        method="RE",
        positives_sha256=content_hash(positives),
        n_universe=n, n_positive=data.n_pos, n_excluded=len(data.excluded),
        fold_attempt=attempt,
        fold_sizes=[int((folds == f).sum()) for f in range(k)],
        platt={str(f): list(ab) for f, ab in platt.items()},
        probabilities={w: float(p) for w, p in zip(data.words, prob)},
        audit={
            "fold_of": {w: int(f) for w, f in zip(data.words, folds)},
            "scored_by": {w: int(f) for w, f in zip(data.words, scored_by)},
            "training_sets": training_sets,
        },
    )
    log.info("RE %s: %d of %d universe words above theta=%g (%d positives)",
             name, len(chosen), n, config.theta, data.n_pos)
    return SentimentLexicon(name, category, chosen, meta)


def audit_fold_integrity(lexicon: SentimentLexicon) -> list[str]:
    """Words whose scoring model was trained on them (empty list means sound)."""
    audit = lexicon.meta["audit"]
    train_sets = {int(f): set(ws) for f, ws in audit["training_sets"].items()}
    bad = []
    for w, f in audit["scored_by"].items():
        if f < 0 or w in train_sets[int(f)] or audit["fold_of"][w] != f:
            bad.append(w)
    return bad


def union_lexicons(a: SentimentLexicon, b: SentimentLexicon, name: str | None = None) -> SentimentLexicon:
    if a.category != b.category:
        raise ValueError(f"cannot merge {a.category!r} lexicon with {b.category!r}")
    meta = {"method": "union", "parts": [a.name, b.name]}
    return SentimentLexicon(name or f"{a.name}+{b.name}", a.category, a.words | b.words, meta)


def threshold(lexicon: SentimentLexicon, theta: float, name: str | None = None) -> SentimentLexicon:
    """Re-cut an adapted lexicon at a different theta using its stored probabilities."""
    probs = lexicon.meta["probabilities"]
    words = frozenset(w for w, p in probs.items() if p > theta)
    return SentimentLexicon(name or lexicon.name, lexicon.category, words, dict(lexicon.meta, theta=theta))


def calibrate_theta(
    probabilities: dict[str, float],
    docs: Sequence[TokenizedDoc],
    target_proportion: float,
    grid: Sequence[float] | None = None,
) -> float:
    """Theta whose lexicon covers a corpus token share closest to ``target_proportion``.

    The share is pooled over the whole corpus. Ties go to the larger theta.
    """
    if grid is None:
        grid = np.round(np.arange(0.5, 0.99, 0.01), 2)
    counts: dict[str, int] = {}
    total = 0
    for doc in docs:
        total += doc.token_count
        for t in doc.tokens:
            if t in probabilities:
                counts[t] = counts.get(t, 0) + 1
    if total == 0:
        raise ValueError("corpus has no tokens")
    best, best_err = None, np.inf
    for theta in sorted(grid):
        share = sum(c for w, c in counts.items() if probabilities[w] > theta) / total
        err = abs(share - target_proportion)
        if err <= best_err:
            best, best_err = float(theta), err
    return best
