"""Residual-moment statistics for detecting normal-mixture features.

Four statistics are computed from a demeaned series: a standardized mean
split (M), a variance-partition ratio (V), and the absolute coefficients of
skewness (S) and excess kurtosis (K).  All four are location-scale invariant,
which is what makes their null distribution simulable without unknowns.

Partition boundaries use strict inequalities: residuals exactly equal to zero
(for M) or with squared value exactly equal to the sample variance (for V)
belong to neither partition.  Sample variances use the 1/T divisor.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class DegenerateSampleError(ValueError):
    """A statistic is undefined for the sample (empty partition or zero
    dispersion).  ``statistic`` names the offender."""

    def __init__(self, statistic: str, message: str):
        super().__init__(f"{statistic}: {message}")
        self.statistic = statistic


class StatQuartet(NamedTuple):
    """The four statistic values (M, V, S, K); all non-negative."""

    m: float
    v: float
    s: float
    k: float


def _dispersion_floor(max_abs) -> float:
    """Partition dispersions at or below this level are rounding residue of a
    mathematically zero dispersion and must count as degenerate."""
    return (16.0 * np.finfo(float).eps * max_abs) ** 2


def demean(y: np.ndarray) -> np.ndarray:
    """Deviations from the sample mean."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) < 2:
        raise ValueError("need a one-dimensional series of length >= 2")
    return y - y.mean()


def stat_m(e: np.ndarray) -> float:
    """Standardized gap between the means of positive and negative residuals.

    ``M = |m2 - m1| / sqrt(s2^2 + s1^2)`` where (m2, s2^2) are the mean and
    variance of the residuals above zero and (m1, s1^2) of those below.
    """
    e = np.asarray(e, dtype=float)
    pos = e > 0
    neg = e < 0
    n2, n1 = int(pos.sum()), int(neg.sum())
    if n2 == 0:
        raise DegenerateSampleError("M", "no residuals above the mean")
    if n1 == 0:
        raise DegenerateSampleError("M", "no residuals below the mean")
    m2 = e[pos].mean()
    m1 = e[neg].mean()
    s22 = ((e[pos] - m2) ** 2).mean()
    s12 = ((e[neg] - m1) ** 2).mean()
    if s22 + s12 <= _dispersion_floor(np.abs(e).max()):
        raise DegenerateSampleError("M", "both partitions have zero dispersion")
    return abs(m2 - m1) / np.sqrt(s22 + s12)


def stat_v(e: np.ndarray) -> float:
    """Ratio of the average squared residual above the sample variance to the
    average below it; exceeds one on any non-degenerate sample."""
    e = np.asarray(e, dtype=float)
    e2 = e**2
    sig2 = e2.mean()
    big = e2 > sig2
    small = e2 < sig2
    if not big.any():
        raise DegenerateSampleError("V", "no squared residuals above the sample variance")
    if not small.any():
        raise DegenerateSampleError("V", "no squared residuals below the sample variance")
    v2 = e2[big].mean()
    v1 = e2[small].mean()
    if v1 <= _dispersion_floor(np.abs(e).max()):
        raise DegenerateSampleError("V", "lower partition has zero average square")
    return v2 / v1


def stat_s(e: np.ndarray) -> float:
    """Absolute skewness coefficient |sum e^3 / (T sigma^3)|."""
    e = np.asarray(e, dtype=float)
    sig2 = (e**2).mean()
    if sig2 <= 0.0:
        raise DegenerateSampleError("S", "zero sample variance")
    return abs((e**3).mean() / sig2**1.5)


def stat_k(e: np.ndarray) -> float:
    """Absolute excess-kurtosis coefficient |sum e^4 / (T sigma^4) - 3|."""
    e = np.asarray(e, dtype=float)
    sig2 = (e**2).mean()
    if sig2 <= 0.0:
        raise DegenerateSampleError("K", "zero sample variance")
    return abs((e**4).mean() / sig2**2 - 3.0)


def compute_quartet(e: np.ndarray) -> StatQuartet:
    """All four statistics of a demeaned series of length >= 4."""
    e = np.asarray(e, dtype=float)
    if len(e) < 4:
        raise ValueError("need at least 4 observations for the statistic quartet")
    return StatQuartet(stat_m(e), stat_v(e), stat_s(e), stat_k(e))


def quartet_matrix(X: np.ndarray) -> np.ndarray:
    """Row-wise quartets of a batch of series.

    Each row of ``X`` is demeaned and reduced to its (M, V, S, K) values.
    Degenerate rows yield NaN entries instead of raising, so batch callers
    can detect and resample them.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = X.shape[1]
    E = X - X.mean(axis=1, keepdims=True)
    pos = E > 0
    neg = E < 0
    n2 = pos.sum(axis=1)
    n1 = neg.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        floor = _dispersion_floor(np.abs(E).max(axis=1))
        m2 = np.where(n2 > 0, (E * pos).sum(axis=1) / n2, np.nan)
        m1 = np.where(n1 > 0, (E * neg).sum(axis=1) / n1, np.nan)
        s22 = np.where(n2 > 0, ((E - m2[:, None]) ** 2 * pos).sum(axis=1) / n2, np.nan)
        s12 = np.where(n1 > 0, ((E - m1[:, None]) ** 2 * neg).sum(axis=1) / n1, np.nan)
        pooled = np.where(s22 + s12 > floor, s22 + s12, np.nan)
        m = np.abs(m2 - m1) / np.sqrt(pooled)

        E2 = E**2
        sig2 = E2.mean(axis=1)
        big = E2 > sig2[:, None]
        small = E2 < sig2[:, None]
        nb = big.sum(axis=1)
        ns = small.sum(axis=1)
        v2 = np.where(nb > 0, (E2 * big).sum(axis=1) / nb, np.nan)
        v1 = np.where(ns > 0, (E2 * small).sum(axis=1) / ns, np.nan)
        v = v2 / np.where(v1 > floor, v1, np.nan)

        s = np.abs((E**3).sum(axis=1) / (T * sig2**1.5))
        k = np.abs((E**4).sum(axis=1) / (T * sig2**2) - 3.0)

    Q = np.column_stack([m, v, s, k])
    Q[~np.isfinite(Q)] = np.nan
    return Q
