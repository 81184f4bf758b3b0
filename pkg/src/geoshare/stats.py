"""Rater-by-item reliability and scale statistics.

Scores arrive as a matrix with one rater per row and one item per column
(CSV with a header row of item names). All variances are sample variances
(n-1 denominator), matching the convention of standard statistics packages.
"""
from __future__ import annotations

import csv
import io

import numpy as np

from .errors import GeoshareError


class ScoreMatrixError(GeoshareError):
    pass


class TooFewRaters(ScoreMatrixError):
    pass


class TooFewItems(ScoreMatrixError):
    pass


class ZeroTotalVariance(ScoreMatrixError):
    pass


class ConstantItem(ScoreMatrixError):
    pass


def _as_score_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ScoreMatrixError(f"score matrix must be 2-D, got shape {a.shape}")
    if np.isnan(a).any():
        raise ScoreMatrixError("score matrix has missing entries")
    n, k = a.shape
    if n < 2:
        raise TooFewRaters(f"need >= 2 raters, got {n}")
    if k < 2:
        raise TooFewItems(f"need >= 2 items, got {k}")
    return a


def cronbach_alpha(m) -> float:
    """Internal-consistency coefficient k/(k-1) * (1 - sum(item var)/var(total)).

    Negative values are returned as-is; they are diagnostically meaningful.
    """
    a = _as_score_matrix(m)
    k = a.shape[1]
    item_vars = a.var(axis=0, ddof=1)
    total_var = a.sum(axis=1).var(ddof=1)
    if total_var == 0.0:
        raise ZeroTotalVariance("per-rater total scores are constant")
    return k / (k - 1.0) * (1.0 - item_vars.sum() / total_var)


def standardized_alpha(m) -> float:
    """Alpha over standardized items: k*rbar / (1 + (k-1)*rbar).

    rbar is the mean pairwise Pearson correlation between items.
    """
    a = _as_score_matrix(m)
    k = a.shape[1]
    if (a.std(axis=0, ddof=1) == 0.0).any():
        bad = int(np.flatnonzero(a.std(axis=0, ddof=1) == 0.0)[0])
        raise ConstantItem(f"item {bad} has zero variance")
    corr = np.corrcoef(a, rowvar=False)
    iu = np.triu_indices(k, 1)
    rbar = corr[iu].mean()
    return k * rbar / (1.0 + (k - 1.0) * rbar)


def scale_stats(m) -> dict:
    """Sample mean/variance/std of the per-rater total score."""
    a = _as_score_matrix(m)
    totals = a.sum(axis=1)
    return {
        "mean": float(totals.mean()),
        "variance": float(totals.var(ddof=1)),
        "std": float(totals.std(ddof=1)),
    }


def load_scores_csv(text: str) -> tuple[list[str], np.ndarray]:
    """Parse a scores CSV (header of item names, one rater per row)."""
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r]
    if len(rows) < 2:
        raise ScoreMatrixError("CSV needs a header row and at least one rater row")
    header = [c.strip() for c in rows[0]]
    try:
        data = np.array([[float(c) for c in row] for row in rows[1:]], dtype=float)
    except ValueError as e:
        raise ScoreMatrixError(f"non-numeric score entry: {e}") from None
    if data.shape[1] != len(header):
        raise ScoreMatrixError("row length does not match header length")
    return header, data


def reliability_report(m) -> dict:
    """Full report: alpha, standardized alpha, shape, and total-score stats."""
    a = _as_score_matrix(m)
    alpha = cronbach_alpha(a)
    report = {
        "alpha": alpha,
        "alpha_std": standardized_alpha(a),
        "k": int(a.shape[1]),
        "n": int(a.shape[0]),
    }
    report.update(scale_stats(a))
    if alpha < 0.0:
        report["warning"] = "negative alpha: items may be inversely scored"
    return report
