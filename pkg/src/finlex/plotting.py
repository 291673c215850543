"""Figures saved alongside the TSV reports."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import OverlapMatrix  # noqa: E402
from .panelreg import RegressionResult  # noqa: E402

# fixed metadata keeps PNG bytes stable across runs
_SAVE_KW = dict(dpi=120, metadata={"Software": None})

plt.rcParams.update({
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "finlex",
})


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def plot_overlap(matrix: OverlapMatrix, path) -> Path:
    pct = matrix.percent
    n = len(matrix.names)
    fig, ax = plt.subplots(figsize=(1.2 + 0.7 * n, 1.0 + 0.6 * n))
    im = ax.imshow(pct, vmin=0, vmax=100, cmap="Blues")
    ax.set_xticks(range(n), matrix.names, rotation=45, ha="right")
    ax.set_yticks(range(n), matrix.names)
    for r in range(n):
        for c in range(n):
            ax.text(c, r, str(pct[r, c]), ha="center", va="center",
                    color="white" if pct[r, c] > 60 else "black", fontsize=8)
    ax.set_title("|row ∩ col| / |row| (%)")
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _finish(fig, path)


def plot_sizes(names: Sequence[str], sizes: Sequence[int], path) -> Path:
    fig, ax = plt.subplots(figsize=(max(3.0, 0.6 * len(names) + 1.5), 3.0))
    ax.bar(range(len(names)), sizes, color="0.4")
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right")
    ax.set_ylabel("words")
    return _finish(fig, path)


def plot_coefficients(results: Sequence[RegressionResult], path) -> Path:
    """Standardized coefficients with ±1.96 SE bars, one row per displayed regressor."""
    labels, vals, errs = [], [], []
    for res in results:
        for name in res.display:
            i = res.names.index(name)
            labels.append(f"{res.dependent}: {name}")
            vals.append(res.std_coef[i])
            errs.append(1.96 * res.se[i] * res.sd[i])
    y = np.arange(len(labels))[::-1]
    fig, ax = plt.subplots(figsize=(5.0, 0.9 + 0.35 * max(len(labels), 1)))
    ax.errorbar(vals, y, xerr=errs, fmt="o", color="k", capsize=2)
    ax.axvline(0.0, color="0.6", lw=0.8)
    ax.set_yticks(y, labels)
    ax.set_xlabel("standardized coefficient")
    return _finish(fig, path)
