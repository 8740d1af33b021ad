"""Monte Carlo test engine.

Provides the rank-based exact MC p-value with uniform tie-breaking, critical
ranks, Bonferroni-style induced decisions, the two p-value combination rules
(minimum and product), and the logistic approximate distribution functions of
the four moment statistics together with their regeneration by non-linear
least squares.

The combination rules operate on *approximate* marginal p-values; the MC
rank step makes the combined test exact regardless of how crude those
approximations are, since data and replicate statistics share them.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from importlib.resources import files
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.optimize import least_squares

from ._seeding import DOMAIN_REPLICATE, DOMAIN_TIEBREAK, substream
from .moments import quartet_matrix

logger = logging.getLogger(__name__)

STATISTICS = ("M", "V", "S", "K")

_QUANTILE_GRID = np.arange(1, 1000) / 1000.0  # 0.001 ... 0.999


@dataclass(frozen=True)
class LogisticCoeffs:
    """Coefficients (gamma0, gamma1) of a logistic CDF approximation
    ``F(x) = exp(g0 + g1 x) / (1 + exp(g0 + g1 x))`` for one statistic at one
    sample size."""

    gamma0: float
    gamma1: float
    statistic: str = "?"
    T: int = 0

    def __post_init__(self) -> None:
        if not self.gamma1 > 0:
            raise ValueError(f"gamma1 must be positive, got {self.gamma1}")


class LogisticCoeffTable:
    """Per-statistic, per-sample-size logistic coefficients.

    The packaged default carries the four statistics at T in
    {50, 100, 150, 200, 250}.  Lookups at other sample sizes interpolate
    (gamma0, gamma1) linearly in T between the bracketing entries, or
    extrapolate from the two nearest entries outside the supported range.
    """

    def __init__(self, entries: Mapping[tuple[str, int], LogisticCoeffs]):
        self._entries = dict(entries)
        if not self._entries:
            raise ValueError("coefficient table is empty")

    def supported_sizes(self, statistic: str) -> list[int]:
        return sorted(T for (s, T) in self._entries if s == statistic)

    def lookup(self, statistic: str, T: int) -> LogisticCoeffs:
        """Exact entry; KeyError if (statistic, T) is not in the table."""
        return self._entries[(statistic, int(T))]

    def coeffs_for(self, statistic: str, T: int, interpolate: bool = True) -> LogisticCoeffs:
        """Entry at sample size ``T``, interpolated in T if necessary."""
        key = (statistic, int(T))
        if key in self._entries:
            return self._entries[key]
        if not interpolate:
            raise ValueError(
                f"no coefficients for statistic {statistic} at T={T}; "
                f"supported sizes are {self.supported_sizes(statistic)}"
            )
        sizes = self.supported_sizes(statistic)
        if len(sizes) < 2:
            raise ValueError(f"cannot interpolate {statistic}: table has fewer than two sizes")
        lo = max((s for s in sizes if s < T), default=None)
        hi = min((s for s in sizes if s > T), default=None)
        if lo is None:  # below the table: extrapolate from the two smallest
            lo, hi = sizes[0], sizes[1]
        elif hi is None:  # above the table: extrapolate from the two largest
            lo, hi = sizes[-2], sizes[-1]
        w = (T - lo) / (hi - lo)
        a = self._entries[(statistic, lo)]
        b = self._entries[(statistic, hi)]
        return LogisticCoeffs(
            gamma0=(1 - w) * a.gamma0 + w * b.gamma0,
            gamma1=(1 - w) * a.gamma1 + w * b.gamma1,
            statistic=statistic,
            T=int(T),
        )

    @classmethod
    def from_csv(cls, path: str | Path) -> "LogisticCoeffTable":
        entries: dict[tuple[str, int], LogisticCoeffs] = {}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                stat = row["statistic"].strip()
                T = int(row["T"])
                entries[(stat, T)] = LogisticCoeffs(
                    gamma0=float(row["gamma0"]),
                    gamma1=float(row["gamma1"]),
                    statistic=stat,
                    T=T,
                )
        return cls(entries)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["statistic", "T", "gamma0", "gamma1"])
            for (stat, T) in sorted(self._entries, key=lambda k: (STATISTICS.index(k[0]), k[1])):
                c = self._entries[(stat, T)]
                writer.writerow([stat, T, repr(c.gamma0), repr(c.gamma1)])

    _default: "LogisticCoeffTable | None" = None

    @classmethod
    def default(cls) -> "LogisticCoeffTable":
        """The packaged coefficient table (cached)."""
        if cls._default is None:
            resource = files("regimetest").joinpath("data/logistic_coeffs.csv")
            entries: dict[tuple[str, int], LogisticCoeffs] = {}
            with resource.open(newline="") as fh:
                for row in csv.DictReader(fh):
                    stat = row["statistic"].strip()
                    T = int(row["T"])
                    entries[(stat, T)] = LogisticCoeffs(
                        float(row["gamma0"]), float(row["gamma1"]), stat, T
                    )
            cls._default = cls(entries)
        return cls._default


def logistic_cdf(x, c: LogisticCoeffs):
    """Evaluate the logistic approximation, safely for large |g0 + g1 x|."""
    z = c.gamma0 + c.gamma1 * np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.where(z >= 0.0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
    return out if out.ndim else float(out)


def _survival(z):
    """1 - logistic(z) without cancellation for large positive z."""
    with np.errstate(over="ignore", invalid="ignore"):
        return np.where(z >= 0.0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))


def approx_pvalues(quartet, table: LogisticCoeffTable, T: int) -> np.ndarray:
    """Approximate marginal p-values (G_M, G_V, G_S, G_K) = 1 - F(statistic)."""
    q = np.asarray(quartet, dtype=float)
    out = np.empty(4)
    for j, stat in enumerate(STATISTICS):
        c = table.coeffs_for(stat, T)
        out[j] = _survival(c.gamma0 + c.gamma1 * q[j])
    return out


def approx_pvalue_matrix(Q: np.ndarray, table: LogisticCoeffTable, T: int) -> np.ndarray:
    """Column-wise approximate p-values for a batch of quartets (n, 4)."""
    Q = np.asarray(Q, dtype=float)
    G = np.empty_like(Q)
    for j, stat in enumerate(STATISTICS):
        c = table.coeffs_for(stat, T)
        G[:, j] = _survival(c.gamma0 + c.gamma1 * Q[:, j])
    return G


def combine_min(pvals) -> float:
    """Combined statistic 1 - min(p): large when any p-value is small."""
    p = np.asarray(pvals, dtype=float)
    _check_unit_interval(p)
    return float(1.0 - p.min())


def combine_prod(pvals) -> float:
    """Combined statistic 1 - prod(p): large when p-values are jointly small."""
    p = np.asarray(pvals, dtype=float)
    _check_unit_interval(p)
    return float(1.0 - p.prod())


def _check_unit_interval(p: np.ndarray) -> None:
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("p-values must lie in [0, 1]")


def combine_matrix(G: np.ndarray, method: str) -> np.ndarray:
    """Row-wise combination of a (n, 4) matrix of marginal p-values."""
    if method == "min":
        return 1.0 - G.min(axis=1)
    if method == "prod":
        return 1.0 - G.prod(axis=1)
    raise ValueError(f"unknown combination method {method!r}; use 'min' or 'prod'")


@dataclass(frozen=True)
class MCEnsemble:
    """A data statistic together with its simulated null counterparts."""

    xi0: float
    xi_sim: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "xi_sim", np.asarray(self.xi_sim, dtype=float))
        if self.N < 2:
            raise ValueError("ensemble needs at least one simulated statistic")

    @property
    def N(self) -> int:
        return len(self.xi_sim) + 1


@dataclass(frozen=True)
class MCTestReport:
    """Outcome of one exact MC test: p = (N + 1 - rank) / N."""

    statistic_value: float
    rank: int
    p_value: float
    N: int
    seed: int | None = None
    tie_breaker_used: bool = False
    degenerate_resamples: int = 0


def mc_pvalue(ens: MCEnsemble, rng: np.random.Generator, seed: int | None = None) -> MCTestReport:
    """Exact MC p-value of the data statistic within its ensemble.

    The rank of ``xi0`` among all N values in increasing order determines
    ``p = (N + 1 - rank) / N``.  Ties are broken by independent uniforms
    attached to every ensemble member (lexicographic comparison on
    (value, tie-breaker)), which preserves exactness for discrete statistics.
    """
    N = ens.N
    u = rng.uniform(size=N)
    u0, us = u[0], u[1:]
    below = (ens.xi_sim < ens.xi0) | ((ens.xi_sim == ens.xi0) & (us < u0))
    rank = 1 + int(below.sum())
    p = (N + 1 - rank) / N
    return MCTestReport(
        statistic_value=float(ens.xi0),
        rank=rank,
        p_value=p,
        N=N,
        seed=seed,
        tie_breaker_used=bool(np.any(ens.xi_sim == ens.xi0)),
    )


def rank_pvalues(xi0: np.ndarray, xi_sim: np.ndarray, u0: float, us: np.ndarray) -> np.ndarray:
    """MC p-values for many data statistics against one replicate set.

    Vectorized version of :func:`mc_pvalue` used by the maximized procedure:
    the replicate values ``xi_sim`` and all tie-breakers stay fixed while the
    data statistic varies.
    """
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    N = len(xi_sim) + 1
    below = (xi_sim[None, :] < xi0[:, None]) | (
        (xi_sim[None, :] == xi0[:, None]) & (us[None, :] < u0)
    )
    ranks = 1 + below.sum(axis=1)
    return (N + 1 - ranks) / N


def critical_rank(N: int, alpha: float) -> int:
    """Critical rank c_N(alpha) = N - floor(N alpha) + 1.

    Rejecting when the data rank is at least this value is equivalent to
    ``p <= alpha`` whenever ``N alpha`` is an integer.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    # guard against float representations like 100 * 0.29 = 28.999999...
    return N - math.floor(N * alpha + 1e-9) + 1


def bonferroni_decision(pvals, alphas) -> bool:
    """Induced test: reject iff any individual p-value is at or below its
    allotted level.  The overall level is the sum of the individual levels."""
    p = np.asarray(pvals, dtype=float)
    a = np.asarray(alphas, dtype=float)
    if p.shape != a.shape:
        raise ValueError("pvals and alphas must have matching shapes")
    return bool(np.any(p <= a))


def fit_logistic_cdf(
    samples: np.ndarray,
    statistic: str = "?",
    T: int = 0,
    quantile_grid: np.ndarray | None = None,
) -> LogisticCoeffs:
    """Fit (gamma0, gamma1) to the empirical distribution of statistic draws.

    Non-linear least squares on the empirical quantile function: minimizes
    ``sum_q (F(x_q) - q)^2`` over the 999 quantile levels 0.001 ... 0.999,
    starting from a logit-linear regression.

    Raises
    ------
    ValueError
        On fewer than 10^4 samples, or if the optimizer fails to converge or
        produces a non-increasing fit.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 10_000:
        raise ValueError(f"need at least 10^4 samples to fit, got {len(samples)}")
    grid = _QUANTILE_GRID if quantile_grid is None else np.asarray(quantile_grid)
    xq = np.quantile(samples, grid)

    # logit-linear start: log(q / (1 - q)) ~ g0 + g1 x_q
    A = np.column_stack([np.ones_like(xq), xq])
    start, *_ = np.linalg.lstsq(A, np.log(grid / (1.0 - grid)), rcond=None)

    def residuals(g):
        z = g[0] + g[1] * xq
        with np.errstate(over="ignore"):
            F = np.where(z >= 0.0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
        return F - grid

    sol = least_squares(residuals, x0=start, method="lm")
    if not sol.success:
        raise ValueError(
            f"logistic fit did not converge: status={sol.status}, "
            f"message={sol.message!r}, cost={sol.cost:.3e}"
        )
    g0, g1 = float(sol.x[0]), float(sol.x[1])
    if g1 <= 0.0:
        raise ValueError(f"fitted slope must be positive, got gamma1={g1}")
    return LogisticCoeffs(g0, g1, statistic=statistic, T=int(T))


def simulate_null_quartets(
    T: int,
    N: int,
    master_seed: int,
    max_attempts: int = 100,
) -> tuple[np.ndarray, int]:
    """Quartets of N - 1 demeaned standard-normal vectors of length ``T``.

    Replicate ``i`` is generated from the stream derived from
    ``(master_seed, replicate-domain, i)``; a degenerate replicate (an event
    of probability zero for continuous data) is resampled from the next
    sub-stream ``(master_seed, replicate-domain, i, attempt)``.

    Returns the (N - 1, 4) quartet matrix and the resample count.
    """
    eta = np.empty((N - 1, T))
    for i in range(N - 1):
        eta[i] = substream(master_seed, DOMAIN_REPLICATE, i).standard_normal(T)
    Q = quartet_matrix(eta)
    resampled = 0
    bad = np.isnan(Q).any(axis=1)
    attempt = 0
    while bad.any():
        attempt += 1
        if attempt > max_attempts:
            raise RuntimeError("could not draw a non-degenerate replicate")
        idx = np.nonzero(bad)[0]
        resampled += len(idx)
        logger.warning("resampling %d degenerate MC replicate(s)", len(idx))
        for i in idx:
            eta[i] = substream(master_seed, DOMAIN_REPLICATE, int(i), attempt).standard_normal(T)
        Q[idx] = quartet_matrix(eta[idx])
        bad = np.isnan(Q).any(axis=1)
    return Q, resampled


def tie_breaker_uniforms(N: int, master_seed: int) -> np.ndarray:
    """The N tie-breaking uniforms of an ensemble; index 0 belongs to the
    data statistic."""
    return substream(master_seed, DOMAIN_TIEBREAK).uniform(size=N)
