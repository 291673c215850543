"""Dependent variables and financial controls from prepared daily data.

Event windows are offsets in trading days on the firm's own return calendar;
day 0 is the first trading day on or after the filing date.
"""
from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

EVENT_WINDOW = (0, 3)
PRE_WINDOW = (-252, -6)
POST_WINDOW = (6, 252)
MIN_FF_OBS = 10
N_FF_INDUSTRIES = 48

MARKET_COLUMNS = ["firm_id", "date", "return", "volume", "shares_outstanding"]
FACTOR_COLUMNS = ["date", "mkt_excess", "smb", "hml", "rf"]
FUNDAMENTAL_COLUMNS = ["firm_id", "date", "total_assets", "book_equity", "market_equity",
                       "earnings_surprise", "industry_code"]
INDEX_COLUMNS = ["date", "return"]


class DataCoverageError(ValueError):
    """A window is not fully covered by the available data."""


@dataclass(frozen=True)
class EventWindow:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"window start {self.start} after end {self.end}")

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class FamaFrenchFit:
    alpha: float
    betas: tuple[float, float, float]
    rmse: float
    n: int


def _window(w) -> EventWindow:
    return w if isinstance(w, EventWindow) else EventWindow(*w)


def buy_and_hold(returns: Sequence[float]) -> float:
    r = np.asarray(returns, dtype=np.float64)
    if r.size == 0:
        raise ValueError("empty return window")
    if not np.isfinite(r).all():
        raise ValueError("non-finite return in window")
    if (r <= -1).any():
        raise ValueError("return <= -1 in window")
    return float(np.prod(1.0 + r) - 1.0)


def window_dates(calendar: Sequence, filing_date: dt.date, window) -> pd.DatetimeIndex:
    """Trading dates of ``window`` relative to the filing on the given calendar."""
    w = _window(window)
    cal = pd.DatetimeIndex(calendar)
    day0 = int(cal.searchsorted(pd.Timestamp(filing_date), side="left"))
    lo, hi = day0 + w.start, day0 + w.end
    if day0 >= len(cal) or lo < 0 or hi >= len(cal):
        raise DataCoverageError(f"window [{w.start}, {w.end}] around {filing_date} not covered by data")
    return cal[lo:hi + 1]


def _aligned(series: pd.Series, dates: pd.DatetimeIndex, what: str) -> np.ndarray:
    vals = series.reindex(dates)
    if vals.isna().any():
        missing = dates[vals.isna().to_numpy()]
        raise DataCoverageError(f"{what}: {len(missing)} day(s) missing in window, first {missing[0].date()}")
    return vals.to_numpy(dtype=np.float64)


def excess_return(firm_returns: pd.Series, market_returns: pd.Series, filing_date: dt.date,
                  window=EVENT_WINDOW) -> float:
    """Firm minus market buy-and-hold return over the window, in percent."""
    dates = window_dates(firm_returns.index, filing_date, window)
    firm = _aligned(firm_returns, dates, "firm returns")
    mkt = _aligned(market_returns, dates, "market index returns")
    return 100.0 * (buy_and_hold(firm) - buy_and_hold(mkt))


def fama_french_regression(excess: np.ndarray, factors: np.ndarray) -> FamaFrenchFit:
    """OLS of excess returns on three factors plus intercept; RMSE uses denominator n."""
    y = np.asarray(excess, dtype=np.float64)
    F = np.asarray(factors, dtype=np.float64)
    n = len(y)
    if n < MIN_FF_OBS:
        raise DataCoverageError(f"Fama-French regression needs >= {MIN_FF_OBS} observations, got {n}")
    X = np.column_stack([np.ones(n), F])
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * diag.max():
        raise np.linalg.LinAlgError("rank-deficient factor matrix")
    beta = np.linalg.solve(R, Q.T @ y)
    resid = y - X @ beta
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    return FamaFrenchFit(float(beta[0]), tuple(float(b) for b in beta[1:]), rmse, n)


def fama_french_fit(firm_returns: pd.Series, factors: pd.DataFrame, filing_date: dt.date, window) -> FamaFrenchFit:
    """Fama-French fit over a filing-relative window; firm returns are raw, ``rf`` is subtracted."""
    dates = window_dates(firm_returns.index, filing_date, window)
    r = _aligned(firm_returns, dates, "firm returns")
    fac = factors.reindex(dates)
    if fac[["mkt_excess", "smb", "hml", "rf"]].isna().any().any():
        raise DataCoverageError("factor data missing inside window")
    return fama_french_regression(r - fac["rf"].to_numpy(), fac[["mkt_excess", "smb", "hml"]].to_numpy())


def share_turnover(volume: pd.Series, shares_outstanding: float, filing_date: dt.date, window=PRE_WINDOW) -> float:
    if not shares_outstanding > 0:
        raise ValueError("shares outstanding must be positive")
    dates = window_dates(volume.index, filing_date, window)
    return float(_aligned(volume, dates, "volume").sum() / shares_outstanding)


def _log_positive(values, what: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if not (v > 0).all():
        raise ValueError(f"{what} must be positive to take logs")
    return np.log(v)


def firm_size(total_assets) -> np.ndarray:
    return _log_positive(total_assets, "total assets")


def book_to_market(book_equity, market_equity) -> np.ndarray:
    be = np.asarray(book_equity, dtype=np.float64)
    me = np.asarray(market_equity, dtype=np.float64)
    if not (me > 0).all():
        raise ValueError("market equity must be positive")
    return _log_positive(be / me, "book-to-market")


def dummies(values: pd.Series, prefix: str) -> pd.DataFrame:
    """One-hot columns over sorted levels with the first level dropped."""
    levels = sorted(pd.unique(values))
    out = pd.DataFrame(index=values.index)
    for lev in levels[1:]:
        out[f"{prefix}_{lev}"] = (values == lev).astype(np.float64)
    return out


EXCESS_RETURN_CONTROLS = ["firm_size", "alpha", "book_to_market", "share_turnover", "earnings_surprise"]
VOLATILITY_CONTROLS = ["pre_rmse", "pre_alpha", "filing_abnormal_return", "firm_size", "book_to_market"]


def build_controls(kind: str, panel: pd.DataFrame) -> pd.DataFrame:
    """Named control columns for the ``excess_return`` or ``volatility`` regression.

    ``panel`` holds one row per filing with the raw fields produced by
    :func:`build_finvars_panel`.
    """
    out = pd.DataFrame(index=panel.index)
    if kind == "excess_return":
        out["firm_size"] = firm_size(panel["total_assets"])
        out["alpha"] = panel["pre_alpha"].to_numpy(dtype=np.float64)
        out["book_to_market"] = book_to_market(panel["book_equity"], panel["market_equity"])
        out["share_turnover"] = panel["share_turnover"].to_numpy(dtype=np.float64)
        out["earnings_surprise"] = panel["earnings_surprise"].to_numpy(dtype=np.float64)
        return out
    if kind == "volatility":
        codes = panel["industry_code"]
        ok = codes.apply(lambda c: float(c).is_integer() and 1 <= int(c) <= N_FF_INDUSTRIES)
        if not ok.all():
            raise ValueError(f"unknown industry code(s): {sorted(set(codes[~ok]))[:5]}")
        out["pre_rmse"] = panel["pre_rmse"].to_numpy(dtype=np.float64)
        out["pre_alpha"] = panel["pre_alpha"].to_numpy(dtype=np.float64)
        out["filing_abnormal_return"] = panel["excess_return"].to_numpy(dtype=np.float64)
        out["firm_size"] = firm_size(panel["total_assets"])
        out["book_to_market"] = book_to_market(panel["book_equity"], panel["market_equity"])
        years = pd.to_datetime(panel["filing_date"]).dt.year
        out = pd.concat([out, dummies(years, "year"), dummies(codes.astype(int), "ind")], axis=1)
        return out
    raise ValueError(f"unknown regression kind {kind!r}")


# -- panel assembly ------------------------------------------------------------

def read_dated_csv(path, required: Sequence[str]) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"firm_id": str})
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    df["date"] = pd.to_datetime(df["date"], format="ISO8601")
    return df


def build_finvars_panel(
    filings: pd.DataFrame,
    market: pd.DataFrame,
    index_returns: pd.DataFrame,
    factors: pd.DataFrame,
    fundamentals: pd.DataFrame,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Per-filing dependent variables and raw control inputs.

    Returns ``(panel, dropped)``; filings whose windows are not covered are
    listed in ``dropped`` with the reason rather than silently gap-filled.
    """
    idx = index_returns.set_index("date")["return"].sort_index()
    fac = factors.set_index("date").sort_index()
    by_firm = {f: g.set_index("date").sort_index() for f, g in market.groupby("firm_id")}
    fund = {f: g.sort_values("date") for f, g in fundamentals.groupby("firm_id")}

    rows, dropped = [], []
    for rec in filings.itertuples(index=False):
        date = pd.Timestamp(rec.filing_date).date()
        try:
            if rec.firm_id not in by_firm:
                raise DataCoverageError("no market data for firm")
            mk = by_firm[rec.firm_id]
            if not mk.index.is_monotonic_increasing or mk.index.has_duplicates:
                raise ValueError("firm trading dates must be strictly increasing")
            ret = mk["return"]
            pre = fama_french_fit(ret, fac, date, PRE_WINDOW)
            post = fama_french_fit(ret, fac, date, POST_WINDOW)
            er = excess_return(ret, idx, date, EVENT_WINDOW)
            day0 = window_dates(mk.index, date, (0, 0))[0]
            turnover = share_turnover(mk["volume"], float(mk.loc[day0, "shares_outstanding"]), date)
            f = fund.get(rec.firm_id)
            if f is None:
                raise DataCoverageError("no fundamentals for firm")
            f = f[f["date"] <= pd.Timestamp(date)]
            if f.empty:
                raise DataCoverageError("no fundamentals on or before filing date")
            latest = f.iloc[-1]
        except (DataCoverageError, ValueError, np.linalg.LinAlgError) as exc:
            dropped.append({"doc_id": rec.doc_id, "firm_id": rec.firm_id, "reason": str(exc)})
            continue
        rows.append({
            "doc_id": rec.doc_id,
            "firm_id": rec.firm_id,
            "filing_date": date.isoformat(),
            "excess_return": er,
            "volatility": post.rmse,
            "pre_alpha": pre.alpha,
            "pre_rmse": pre.rmse,
            "share_turnover": turnover,
            "total_assets": float(latest["total_assets"]),
            "book_equity": float(latest["book_equity"]),
            "market_equity": float(latest["market_equity"]),
            "earnings_surprise": float(latest["earnings_surprise"]),
            "industry_code": int(latest["industry_code"]),
        })
    if dropped:
        log.warning("%d filing(s) dropped for missing market data", len(dropped))
    return pd.DataFrame(rows), pd.DataFrame(dropped, columns=["doc_id", "firm_id", "reason"])
