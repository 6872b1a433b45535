from typing import Sequence

import numpy as np
from scipy import stats

from app.modules.errors import DataError, DegenerateDataError


def auc_from_scores(good_scores: Sequence[float], bad_scores: Sequence[float]) -> float:
    """
    Mann-Whitney AUC: P(good score > bad score), ties counted 1/2.
    Uses the rank-sum form with average ranks, which equals the pair count exactly.
    """
    good = np.asarray(good_scores, dtype=np.float64)
    bad = np.asarray(bad_scores, dtype=np.float64)
    n_good, n_bad = good.size, bad.size
    if n_good == 0 or n_bad == 0:
        raise DegenerateDataError(f"AUC needs good and bad pairs, got {n_good} good / {n_bad} bad")
    if not (np.all(np.isfinite(good)) and np.all(np.isfinite(bad))):
        raise DataError("AUC scores must be finite")

    ranks = stats.rankdata(np.concatenate([good, bad]), method="average")
    u_statistic = ranks[:n_good].sum() - n_good * (n_good + 1) / 2.0
    return float(u_statistic / (n_good * n_bad))


def auc(scored) -> float:
    """AUC over ScoredPairs."""
    good = [s.score.value for s in scored if s.pair.is_good]
    bad = [s.score.value for s in scored if not s.pair.is_good]
    return auc_from_scores(good, bad)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise DataError(f"Pearson needs two equal-length sequences, got {xa.shape} and {ya.shape}")
    if xa.size < 2:
        raise DegenerateDataError("Pearson needs at least 2 observations")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise DegenerateDataError("Degenerate correlation: one variable has zero variance")
    r, _ = stats.pearsonr(xa, ya)
    return float(np.clip(r, -1.0, 1.0))
