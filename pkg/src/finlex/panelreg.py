"""OLS with two-way cluster-robust inference and table-style reporting."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import stats

RANK_TOL = 1e-10
STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))
REPORT_COLUMNS = ["var", "coeff", "std coeff", "t", "R2"]


class RankDeficientError(np.linalg.LinAlgError):
    pass


@dataclass
class OLSFit:
    beta: np.ndarray
    residuals: np.ndarray
    r2: float  # percent
    xtx_inv: np.ndarray


def ols_fit(X, y) -> OLSFit:
    """Least squares by column-pivoted QR; R² is centered and reported in percent."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, k = X.shape
    if len(y) != n:
        raise ValueError("X and y row counts differ")
    if n <= k:
        raise ValueError(f"need more observations than regressors (n={n}, k={k})")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite values in regression data")
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag[0] == 0 or diag.min() <= RANK_TOL * diag[0]:
        raise RankDeficientError("regressor matrix is rank deficient")
    beta = np.empty(k)
    beta[piv] = scipy.linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    ssr = float(resid @ resid)
    yc = y - y.mean()
    sst = float(yc @ yc)
    r2 = 100.0 * (1.0 - ssr / sst) if sst > 0 else float("nan")
    Rinv = scipy.linalg.solve_triangular(R, np.eye(k))
    inv_p = Rinv @ Rinv.T
    xtx_inv = np.empty((k, k))
    xtx_inv[np.ix_(piv, piv)] = inv_p
    return OLSFit(beta, resid, r2, xtx_inv)


def _xtx_inv(X: np.ndarray) -> np.ndarray:
    return ols_fit(X, np.zeros(len(X)) + np.arange(len(X))).xtx_inv


def _group_codes(ids) -> tuple[np.ndarray, int]:
    codes, uniques = pd.factorize(pd.Series(list(ids) if not isinstance(ids, (np.ndarray, pd.Series)) else ids),
                                  sort=True)
    return codes, len(uniques)


def cluster_vcov(X, residuals, cluster_ids, correction: bool = True, xtx_inv=None) -> np.ndarray:
    """One-way cluster sandwich ``c (X'X)^-1 (sum_g s_g s_g') (X'X)^-1``.

    ``c = G/(G-1) * (n-1)/(n-k)`` when ``correction`` is set.
    """
    X = np.asarray(X, dtype=np.float64)
    u = np.asarray(residuals, dtype=np.float64)
    n, k = X.shape
    codes, G = _group_codes(cluster_ids)
    if G < 2:
        raise ValueError("cluster-robust covariance needs at least 2 clusters")
    bread = _xtx_inv(X) if xtx_inv is None else xtx_inv
    scores = np.zeros((G, k))
    np.add.at(scores, codes, X * u[:, None])
    meat = scores.T @ scores
    V = bread @ meat @ bread
    if correction:
        V *= G / (G - 1) * (n - 1) / (n - k)
    return (V + V.T) / 2.0


def _pair_ids(a, b) -> np.ndarray:
    ca, _ = _group_codes(a)
    cb, nb = _group_codes(b)
    return ca.astype(np.int64) * nb + cb


def psd_repair(V: np.ndarray, rel_tol: float = 1e-12) -> tuple[np.ndarray, bool]:
    """Floor negative eigenvalues at zero; returns the matrix and whether it changed."""
    w, Q = np.linalg.eigh(V)
    scale = max(np.abs(w).max(), np.finfo(float).tiny)
    if w.min() >= -rel_tol * scale:
        return V, False
    V2 = (Q * np.maximum(w, 0.0)) @ Q.T
    return (V2 + V2.T) / 2.0, True


def twoway_vcov(X, residuals, firm_id, time_id, correction: bool = True,
                xtx_inv=None, repair: bool = True) -> tuple[np.ndarray, bool]:
    """Two-way clustered covariance ``V_firm + V_time - V_firm∩time``.

    Each term carries its own small-sample factor. Indefinite results are
    repaired by flooring eigenvalues at zero; the second return value flags it.
    ``repair=False`` returns the raw sum (flag always False).
    """
    X = np.asarray(X, dtype=np.float64)
    bread = _xtx_inv(X) if xtx_inv is None else xtx_inv
    vf = cluster_vcov(X, residuals, firm_id, correction, bread)
    vt = cluster_vcov(X, residuals, time_id, correction, bread)
    inter = _pair_ids(firm_id, time_id)
    if len(np.unique(inter)) < 2:
        raise ValueError("intersection clustering needs at least 2 clusters")
    vi = cluster_vcov(X, residuals, inter, correction, bread)
    raw = vf + vt - vi
    return psd_repair(raw) if repair else (raw, False)


def standardized_coefficient(beta, sd):
    return np.asarray(beta) * np.asarray(sd) if np.ndim(beta) else float(beta) * float(sd)


def stars(p: float) -> str:
    if not np.isfinite(p):
        return ""
    for level, mark in STAR_LEVELS:
        if p <= level:
            return mark
    return ""


@dataclass
class RegressionResult:
    dependent: str
    names: list[str]
    coef: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    std_coef: np.ndarray
    sd: np.ndarray
    r2: float
    n: int
    g_firm: int
    g_time: int
    df: int
    vcov: np.ndarray = field(repr=False)
    repaired: bool = False
    display: list[str] = field(default_factory=list)

    def stars(self, name: str) -> str:
        return stars(self.p[self.names.index(name)])

    def row(self, name: str) -> dict:
        i = self.names.index(name)
        return {"coef": float(self.coef[i]), "se": float(self.se[i]), "t": float(self.t[i]),
                "p": float(self.p[i]), "stars": stars(self.p[i]), "std_coef": float(self.std_coef[i]),
                "sd": float(self.sd[i])}

    def to_dict(self) -> dict:
        return {
            "dependent": self.dependent,
            "variables": {n: self.row(n) for n in self.names},
            "display": self.display,
            "r2_percent": self.r2,
            "n": self.n,
            "clusters": {"firm": self.g_firm, "time": self.g_time},
            "df": self.df,
            "vcov_repaired": self.repaired,
        }


def fit_twoway(X, y, names: Sequence[str], firm_id, time_id, dependent: str = "y",
               correction: bool = True, display: Sequence[str] | None = None) -> RegressionResult:
    """OLS with two-way clustered SEs; ``X`` must already include any intercept column."""
    X = np.asarray(X, dtype=np.float64)
    names = list(names)
    if X.shape[1] != len(names):
        raise ValueError("one name per column required")
    fit = ols_fit(X, y)
    V, repaired = twoway_vcov(X, fit.residuals, firm_id, time_id, correction, fit.xtx_inv)
    se = np.sqrt(np.diag(V))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = fit.beta / se
    _, gf = _group_codes(firm_id)
    _, gt = _group_codes(time_id)
    df = min(gf, gt) - 1
    p = 2.0 * stats.t.sf(np.abs(t), df)
    sd = X.std(axis=0, ddof=1)
    return RegressionResult(dependent, names, fit.beta, se, t, p, standardized_coefficient(fit.beta, sd), sd,
                            fit.r2, len(y), gf, gt, df, V, repaired,
                            list(display) if display is not None else [n for n in names if n != "const"])


def fit_panel(df: pd.DataFrame, dependent: str, regressors: Sequence[str], firm_col: str = "firm_id",
              time_col: str = "time_id", controls: pd.DataFrame | None = None,
              correction: bool = True) -> RegressionResult:
    """Regress ``dependent`` on ``regressors`` (+ control block) with an intercept.

    Only ``regressors`` are shown by :func:`report`; controls stay in the JSON record.
    """
    parts = [pd.DataFrame({"const": np.ones(len(df))}, index=df.index), df[list(regressors)]]
    if controls is not None:
        parts.append(controls)
    Xdf = pd.concat(parts, axis=1)
    return fit_twoway(Xdf.to_numpy(dtype=np.float64), df[dependent].to_numpy(dtype=np.float64),
                      list(Xdf.columns), df[firm_col].to_numpy(), df[time_col].to_numpy(),
                      dependent=dependent, correction=correction, display=list(regressors))


# -- reporting -------------------------------------------------------------------

def _num(x: float, spec: str) -> str:
    if not np.isfinite(x):
        return "nan"
    s = format(float(x), spec)
    return "0" if s.strip("-0.") == "" and spec != ".2f" else s


def report(results: Sequence[RegressionResult] | RegressionResult, sep: str = "\t") -> str:
    """Table rows ``var, coeff (starred), std coeff, t, R2``; R² on each block's first row."""
    if isinstance(results, RegressionResult):
        results = [results]
    lines = [sep.join(REPORT_COLUMNS)]
    for res in results:
        for j, name in enumerate(res.display):
            i = res.names.index(name)
            r2 = _num(res.r2, "#.3g") if j == 0 else ""
            lines.append(sep.join([
                name,
                _num(res.coef[i], "#.3g") + stars(res.p[i]),
                _num(res.std_coef[i], "#.3g"),
                _num(res.t[i], ".2f"),
                r2,
            ]))
    lines.append(sep.join(["*p <= 0.05, **p <= 0.01, ***p <= 0.001", "", "", "", ""]))
    return "\n".join(lines) + "\n"


def results_json(results: Sequence[RegressionResult]) -> str:
    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, list):
            return [clean(v) for v in o]
        return o
    return json.dumps([clean(r.to_dict()) for r in results], indent=1, sort_keys=True) + "\n"
