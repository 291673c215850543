"""Seeded synthetic corpora and market data for tests, demos and the acceptance suite."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .corpus import TokenizedDoc


@dataclass
class PlantedCorpus:
    docs: list[TokenizedDoc]
    seeds: list[str]
    planted: list[str]
    distractors: list[str]
    context_words: list[str]

    @property
    def universe(self) -> list[str]:
        return self.seeds + self.planted + self.distractors

    @property
    def n_tokens(self) -> int:
        return sum(d.token_count for d in self.docs)


def _names(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i:03d}" for i in range(n)]


def planted_corpus(
    seed: int = 0,
    n_seeds: int = 60,
    n_planted: int = 40,
    n_distractors: int = 400,
    n_topics: int = 8,
    n_context: int = 24,
    n_filler: int = 60,
    target_tokens: int = 1_000_000,
    doc_tokens: int = 2500,
    n_firms: int = 40,
    n_private: int = 0,
    private_rate: float = 0.5,
) -> PlantedCorpus:
    """Corpus in which seed and planted words occur in the same ("negative") contexts.

    Every occurrence of a target word sits in a short phrase whose other slots
    are drawn from its group's context vocabulary, plus shared filler. Seeds and
    planted words share one context group; distractors are spread over
    ``n_topics`` neutral groups. Each target word also has ``n_private``
    collocates of its own that fill one phrase slot at rate ``private_rate``.
    """
    rng = np.random.default_rng(seed)
    seeds = _names("neg", n_seeds)
    planted = _names("pln", n_planted)
    distractors = _names("neu", n_distractors)
    filler = _names("fil", n_filler)
    neg_ctx = _names("cng", n_context)
    topic_ctx = [_names(f"ct{t}", n_context) for t in range(n_topics)]

    targets = seeds + planted + distractors
    # group 0 = negative contexts, 1..n_topics = neutral topics
    group = [0] * (n_seeds + n_planted) + [1 + (i % n_topics) for i in range(n_distractors)]
    ctx_by_group = [neg_ctx] + topic_ctx

    private = [[f"{w}c{j}" for j in range(n_private)] for w in targets]

    phrases_needed = target_tokens // 5
    docs: list[TokenizedDoc] = []
    base = dt.date(1995, 1, 1)
    made = 0
    d = 0
    while made < phrases_needed:
        tokens: list[str] = []
        while len(tokens) < doc_tokens:
            t = int(rng.integers(len(targets)))
            ctx = ctx_by_group[group[t]]
            phrase = [ctx[int(rng.integers(len(ctx)))] for _ in range(3)]
            if n_private and rng.random() < private_rate:
                phrase[0] = private[t][int(rng.integers(n_private))]
            phrase.insert(int(rng.integers(4)), targets[t])
            phrase.append(filler[int(rng.integers(len(filler)))])
            tokens.extend(phrase)
            made += 1
        firm = d % n_firms
        year = d // n_firms
        date = base.replace(year=base.year + year % 20) + dt.timedelta(days=int(rng.integers(0, 300)))
        docs.append(TokenizedDoc(f"doc{d:05d}", f"firm{firm:03d}", date, tuple(tokens)))
        d += 1
    context = neg_ctx + [w for g in topic_ctx for w in g] + filler + [w for p in private for w in p]
    return PlantedCorpus(docs, seeds, planted, distractors, context)


# -- market side ---------------------------------------------------------------

def synthetic_market(
    docs: list[TokenizedDoc],
    signal_words: set[str],
    seed: int = 0,
    effect: float = 0.004,
    vol_effect: float = 0.25,
) -> dict[str, "pd.DataFrame"]:
    """Daily returns, index, factors and fundamentals covering every filing's windows.

    Filings whose share of ``signal_words`` is high get a negative shock over
    days 0..3 and raised idiosyncratic volatility afterwards, so the demo
    regressions have something to find.
    """
    import pandas as pd

    rng = np.random.default_rng(seed)
    dates = sorted(d.filing_date for d in docs)
    cal = pd.bdate_range(pd.Timestamp(dates[0]) - pd.Timedelta(days=400),
                         pd.Timestamp(dates[-1]) + pd.Timedelta(days=400))
    T = len(cal)
    factors = pd.DataFrame({
        "date": cal,
        "mkt_excess": rng.normal(3e-4, 0.010, T),
        "smb": rng.normal(0.0, 0.005, T),
        "hml": rng.normal(0.0, 0.005, T),
        "rf": np.full(T, 1e-4),
    })
    index = pd.DataFrame({"date": cal, "return": factors["mkt_excess"] + factors["rf"]})

    firms = sorted({d.firm_id for d in docs})
    share = {d.doc_id: sum(t in signal_words for t in d.tokens) / d.token_count for d in docs}
    vals = np.array(list(share.values()))
    mu, sd = vals.mean(), vals.std() or 1.0

    F = factors[["mkt_excess", "smb", "hml"]].to_numpy()
    market, fundamentals = [], []
    for firm in firms:
        b = np.array([rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)])
        sigma = np.full(T, rng.uniform(0.01, 0.03))
        shock = np.zeros(T)
        for d in (d for d in docs if d.firm_id == firm):
            z = (share[d.doc_id] - mu) / sd
            day0 = int(cal.searchsorted(pd.Timestamp(d.filing_date)))
            shock[day0:day0 + 4] -= effect * z
            sigma[day0 + 6:day0 + 253] *= max(0.2, 1.0 + vol_effect * z)
        r = factors["rf"].to_numpy() + F @ b + sigma * rng.standard_normal(T) + shock
        shares = float(rng.integers(10, 100)) * 1e6
        market.append(pd.DataFrame({
            "firm_id": firm, "date": cal, "return": r,
            "volume": np.round(shares * rng.uniform(0.002, 0.01, T)),
            "shares_outstanding": shares,
        }))
        industry = int(rng.integers(1, 49))
        for year in range(cal[0].year - 1, cal[-1].year + 1):
            assets = float(np.exp(rng.normal(7.0, 1.0)))
            me = assets * rng.uniform(0.3, 2.0)
            fundamentals.append({
                "firm_id": firm, "date": pd.Timestamp(year, 12, 31), "total_assets": assets,
                "book_equity": assets * rng.uniform(0.2, 0.6), "market_equity": me,
                "earnings_surprise": rng.normal(0.0, 0.01), "industry_code": industry,
            })
    return {
        "market": pd.concat(market, ignore_index=True),
        "index": index,
        "factors": factors,
        "fundamentals": pd.DataFrame(fundamentals),
    }


def synthetic_panel(seed: int = 7, n_firms: int = 30, n_years: int = 8,
                    beta=(0.5, -1.0, 0.0)) -> "pd.DataFrame":
    """Firm-year panel with firm and year effects in both regressors and errors."""
    import pandas as pd

    rng = np.random.default_rng(seed)
    firm_eff = rng.normal(size=(n_firms, 1))
    year_eff = rng.normal(size=(n_years, 1))
    rows = []
    for f in range(n_firms):
        for t in range(n_years):
            x = rng.normal(size=len(beta)) + 0.5 * firm_eff[f] + 0.5 * year_eff[t]
            e = rng.normal() + firm_eff[f, 0] + 0.5 * year_eff[t, 0]
            rows.append({"firm_id": f"firm{f:03d}", "time_id": 2000 + t,
                         **{f"x{j + 1}": x[j] for j in range(len(beta))},
                         "y": 1.0 + float(np.dot(beta, x)) + e})
    return pd.DataFrame(rows)
