"""Linear SVM word classifier with Platt-calibrated probabilities.

The SVM solves the standard soft-margin problem with an unregularized bias,

    min_{w,b}  1/2 ||w||^2 + C * sum_i max(0, 1 - y_i (w . x_i + b)),

through its dual by SMO with second-order working-set selection. Scores are
mapped to probabilities with Platt's sigmoid ``P(s) = 1 / (1 + exp(A s + B))``,
so a useful classifier has ``A < 0``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

log = logging.getLogger(__name__)

LABEL_CONVENTION = "score = w.x + b; probability = 1 / (1 + exp(platt_a * score + platt_b)); +1 = in category"
_TAU = 1e-12
GRAM_MAX_ROWS = 6000
_P_MAX = float(np.nextafter(1.0, 0.0))
_P_MIN = float(np.finfo(np.float64).tiny)


class TrainingDataError(ValueError):
    pass


@dataclass
class LabeledWordSet:
    words: list[str]
    X: np.ndarray
    y: np.ndarray
    excluded: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.shape[0] != len(self.y) or len(self.words) != len(self.y):
            raise TrainingDataError("words, X and y must have the same length")
        if not np.isin(self.y, (-1.0, 1.0)).all():
            raise TrainingDataError("labels must be +1 or -1")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def n_pos(self) -> int:
        return int((self.y > 0).sum())

    @property
    def n_neg(self) -> int:
        return int((self.y < 0).sum())

    def subset(self, idx) -> "LabeledWordSet":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledWordSet([self.words[i] for i in idx], self.X[idx], self.y[idx])


@dataclass
class LinearClassifier:
    weights: np.ndarray
    bias: float
    C: float
    normalize: bool = False
    dual_gap: float = field(default=float("nan"), compare=False)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {X.shape[1]}")
        if self.normalize:
            X = _l2_normalize(X)
        return X @ self.weights + self.bias


@dataclass(frozen=True)
class PlattCalibration:
    A: float
    B: float

    def probability(self, scores) -> np.ndarray:
        z = self.A * np.asarray(scores, dtype=np.float64) + self.B
        # 1/(1+exp(z)) evaluated without overflow
        p = np.exp(-np.logaddexp(0.0, z))
        return np.clip(p, _P_MIN, _P_MAX)


def _l2_normalize(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return X / norms


def svm_objective(X, y, w, b, C) -> float:
    margins = 1.0 - y * (X @ w + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(margins, 0.0).sum())


# -- SMO -----------------------------------------------------------------------

@numba.njit(cache=True)
def _pair_update(ai, aj, yi, yj, Gi, Gj, Kii, Kjj, Kij, C):
    """Analytic two-variable step with box clipping (libsvm's update rule)."""
    if yi != yj:
        quad = Kii + Kjj + 2.0 * yi * yj * Kij
        if quad <= 0:
            quad = _TAU
        delta = (-Gi - Gj) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj = 0.0
                ai = diff
        else:
            if ai < 0:
                ai = 0.0
                aj = -diff
        if diff > 0:
            if ai > C:
                ai = C
                aj = C - diff
        else:
            if aj > C:
                aj = C
                ai = C + diff
    else:
        quad = Kii + Kjj - 2.0 * yi * yj * Kij
        if quad <= 0:
            quad = _TAU
        delta = (Gi - Gj) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > C:
            if ai > C:
                ai = C
                aj = total - C
        else:
            if aj < 0:
                aj = 0.0
                ai = total
        if total > C:
            if aj > C:
                aj = C
                ai = total - C
        else:
            if ai < 0:
                ai = 0.0
                aj = total
    return ai, aj


@numba.njit(cache=True)
def _select_i(y, alpha, G, C):
    """Maximal violating index among the 'up' set."""
    n = len(y)
    gmax = -np.inf
    i = -1
    for t in range(n):
        if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
            v = -y[t] * G[t]
            if v >= gmax:
                gmax = v
                i = t
    return i, gmax


@numba.njit(cache=True)
def _select_j(y, alpha, G, Ki, diagK, C, i, gmax):
    """Second-order choice of ``j`` given ``i``; also returns the KKT violation."""
    n = len(y)
    gmin = np.inf
    j = -1
    obj_min = np.inf
    for t in range(n):
        if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
            v = -y[t] * G[t]
            if v < gmin:
                gmin = v
            bdiff = gmax - v
            if bdiff > 0:
                quad = diagK[i] + diagK[t] - 2.0 * Ki[t]
                if quad <= 0:
                    quad = _TAU
                o = -(bdiff * bdiff) / quad
                if o <= obj_min:
                    obj_min = o
                    j = t
    return j, gmax - gmin


@numba.njit(cache=True, nogil=True)
def _smo_gram(K, y, C, alpha, eps, max_iter):
    """SMO over a precomputed Gram matrix; the dual gradient is kept incrementally."""
    n = len(y)
    diagK = np.empty(n)
    for t in range(n):
        diagK[t] = K[t, t]
    G = np.empty(n)
    for t in range(n):
        s = 0.0
        for u in range(n):
            s += K[t, u] * alpha[u] * y[u]
        G[t] = y[t] * s - 1.0
    it = 0
    gap = np.inf
    while it < max_iter:
        i, gmax = _select_i(y, alpha, G, C)
        if i < 0:
            gap = 0.0
            break
        j, gap = _select_j(y, alpha, G, K[i], diagK, C, i, gmax)
        if gap < eps or j == -1:
            break
        it += 1
        ai, aj = _pair_update(alpha[i], alpha[j], y[i], y[j], G[i], G[j],
                              diagK[i], diagK[j], K[i, j], C)
        dai = (ai - alpha[i]) * y[i]
        daj = (aj - alpha[j]) * y[j]
        alpha[i] = ai
        alpha[j] = aj
        for t in range(n):
            G[t] += y[t] * (K[i, t] * dai + K[j, t] * daj)
    return it, gap


@numba.njit(cache=True, nogil=True)
def _smo_primal(X, y, C, alpha, w, eps, max_iter):
    """SMO for large ``n``: kernel rows computed on the fly from explicit ``w``."""
    n, dim = X.shape
    diagK = np.empty(n)
    for t in range(n):
        s = 0.0
        for d in range(dim):
            s += X[t, d] * X[t, d]
        diagK[t] = s
    G = np.empty(n)
    Ki = np.empty(n)
    it = 0
    gap = np.inf
    while it < max_iter:
        for t in range(n):
            s = 0.0
            for d in range(dim):
                s += X[t, d] * w[d]
            G[t] = y[t] * s - 1.0
        i, gmax = _select_i(y, alpha, G, C)
        if i < 0:
            gap = 0.0
            break
        for t in range(n):
            s = 0.0
            for d in range(dim):
                s += X[t, d] * X[i, d]
            Ki[t] = s
        j, gap = _select_j(y, alpha, G, Ki, diagK, C, i, gmax)
        if gap < eps or j == -1:
            break
        it += 1
        ai, aj = _pair_update(alpha[i], alpha[j], y[i], y[j], G[i], G[j],
                              diagK[i], diagK[j], Ki[j], C)
        dai = (ai - alpha[i]) * y[i]
        daj = (aj - alpha[j]) * y[j]
        alpha[i] = ai
        alpha[j] = aj
        for d in range(dim):
            w[d] += dai * X[i, d] + daj * X[j, d]
    return it, gap


def _bias_from_kkt(X, y, alpha, w, C) -> float:
    """Bias from the KKT conditions: mean over free vectors, else interval midpoint."""
    yG = y * (X @ w) - 1.0
    yG = y * yG  # y_t * G_t
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(-yG[free].mean())
    at_upper = alpha >= C
    at_lower = ~at_upper
    # rho bounds follow libsvm's convention, b = -rho
    ub_mask = ((at_upper) & (y < 0)) | ((at_lower) & (y > 0))
    lb_mask = ((at_upper) & (y > 0)) | ((at_lower) & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float(-(ub + lb) / 2.0)


def train_svm(data: LabeledWordSet, C: float = 1.0, tol: float = 1e-6,
              normalize: bool = False, max_iter: int = 10_000_000,
              kkt_eps: float = 1e-10) -> LinearClassifier:
    """Fit a linear SVM.

    Stops once the relative duality gap is at most ``tol`` and the maximal
    KKT violation is below ``kkt_eps``.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    if data.n_pos == 0 or data.n_neg == 0:
        raise TrainingDataError("training data must contain both labels")
    X = data.X
    if not np.isfinite(X).all():
        raise TrainingDataError("non-finite feature values")
    if normalize:
        X = _l2_normalize(X)
    y = data.y
    alpha = np.zeros(len(y))
    use_gram = len(y) <= GRAM_MAX_ROWS
    K = X @ X.T if use_gram else None
    eps = 1e-3
    for _ in range(12):
        if use_gram:
            it, viol = _smo_gram(K, y, float(C), alpha, eps, max_iter)
        else:
            it, viol = _smo_primal(X, y, float(C), alpha, X.T @ (alpha * y), eps, max_iter)
        # recompute w from alpha to shed accumulated rounding
        w = X.T @ (alpha * y)
        b = _bias_from_kkt(X, y, alpha, w, C)
        primal = svm_objective(X, y, w, b, C)
        dual = float(alpha.sum() - 0.5 * w @ w)
        gap = primal - dual
        rel = gap / max(1.0, abs(primal))
        log.debug("smo: eps=%g iters=%d violation=%g rel_gap=%g", eps, it, viol, rel)
        if rel <= tol and viol < kkt_eps:
            break
        eps = max(eps * 0.01, kkt_eps / 10)
    else:
        log.warning("SVM stopped early: relative duality gap %g, KKT violation %g", rel, viol)
    return LinearClassifier(w, b, float(C), normalize, dual_gap=rel)


# -- Platt scaling -------------------------------------------------------------

def _platt_objective(s, t, A, B) -> float:
    z = A * s + B
    # -sum t log p + (1-t) log(1-p), p = 1/(1+exp(z))
    return float((t * np.logaddexp(0.0, z) + (1.0 - t) * np.logaddexp(0.0, -z)).sum())


def fit_platt(scores: Sequence[float], labels: Sequence[float], max_iter: int = 200,
              gtol: float = 1e-10) -> PlattCalibration:
    """Maximum-likelihood sigmoid on Platt's smoothed targets, by damped Newton steps."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if not np.isfinite(s).all():
        raise ValueError("non-finite scores")
    n_pos, n_neg = int((y > 0).sum()), int((y <= 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise TrainingDataError("calibration needs both labels")
    t = np.where(y > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    A, B = 0.0, float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    fval = _platt_objective(s, t, A, B)
    for _ in range(max_iter):
        z = A * s + B
        p = np.exp(-np.logaddexp(0.0, z))  # 1/(1+exp(z))
        q = 1.0 - p
        d1 = t - p
        d2 = p * q
        g1, g2 = float(s @ d1), float(d1.sum())
        if max(abs(g1), abs(g2)) <= gtol:
            break
        h11 = float(s * s @ d2) + _TAU
        h22 = float(d2.sum()) + _TAU
        h21 = float(s @ d2)
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-12:
            nA, nB = A + step * dA, B + step * dB
            nf = _platt_objective(s, t, nA, nB)
            if nf <= fval + 1e-4 * step * gd:
                break
            step /= 2.0
        else:
            log.debug("Platt line search stalled at gradient (%g, %g)", g1, g2)
            break
        if nA == A and nB == B:
            break
        A, B, fval = nA, nB, nf
    return PlattCalibration(float(A), float(B))


def classify_proba(classifier: LinearClassifier, calibration: PlattCalibration, vectors) -> np.ndarray | float:
    """Calibrated probability of the positive class; scalar in, scalar out."""
    arr = np.asarray(vectors, dtype=np.float64)
    probs = calibration.probability(classifier.decision_function(arr))
    return float(probs[0]) if arr.ndim == 1 else probs


# -- persistence -----------------------------------------------------------------

def save_classifier(path: str | Path, classifier: LinearClassifier, calibration: PlattCalibration) -> None:
    rec = {
        "dim": classifier.dim,
        "weights": [float(x) for x in classifier.weights],
        "bias": classifier.bias,
        "platt_a": calibration.A,
        "platt_b": calibration.B,
        "c": classifier.C,
        "normalize": classifier.normalize,
        "label_convention": LABEL_CONVENTION,
    }
    Path(path).write_text(json.dumps(rec, indent=1) + "\n", encoding="utf-8")


def load_classifier(path: str | Path) -> tuple[LinearClassifier, PlattCalibration]:
    rec = json.loads(Path(path).read_text(encoding="utf-8"))
    weights = np.array(rec["weights"], dtype=np.float64)
    if len(weights) != rec["dim"]:
        raise ValueError("weights length does not match dim")
    clf = LinearClassifier(weights, float(rec["bias"]), float(rec["c"]), bool(rec.get("normalize", False)))
    return clf, PlattCalibration(float(rec["platt_a"]), float(rec["platt_b"]))
