"""Pearson/Spearman correlation and median with explicit failure modes."""
from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from ..errors import InsufficientDataError, UndefinedCorrelationError


def _pairwise(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    keep = np.isfinite(a) & np.isfinite(b)
    a, b = a[keep], b[keep]
    if a.size < 3:
        raise InsufficientDataError(f"need at least 3 complete pairs, got {a.size}")
    return a, b


def _r(a, b) -> float:
    da, db = a - a.mean(), b - b.mean()
    na, nb = np.sqrt(da @ da), np.sqrt(db @ db)
    if na == 0 or nb == 0:
        raise UndefinedCorrelationError("correlation undefined: a vector has zero variance")
    return float(np.clip((da @ db) / (na * nb), -1.0, 1.0))


def pearson_r(a, b) -> float:
    """Pearson r over pairs where both entries are finite."""
    return _r(*_pairwise(a, b))


def spearman_rho(a, b) -> float:
    """Pearson r of average ranks (ties share their mean rank)."""
    a, b = _pairwise(a, b)
    return _r(rankdata(a), rankdata(b))


def median(xs) -> float:
    """Median of the finite entries; even counts average the two central values."""
    x = np.asarray(xs, dtype=np.float64).ravel()
    x = x[np.isfinite(x)]
    if x.size == 0:
        raise InsufficientDataError("median of an empty set")
    return float(np.median(x))


def columnwise_pearson(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pearson r between matching columns of A and B; NaN where a column is constant."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    da, db = A - A.mean(axis=0), B - B.mean(axis=0)
    num = (da * db).sum(axis=0)
    den = np.sqrt((da * da).sum(axis=0) * (db * db).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = num / den
    r[den == 0] = np.nan
    return np.clip(r, -1.0, 1.0)
