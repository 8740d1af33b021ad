"""Information-matrix benchmark tests for Markov-switching parameters.

For the AR(1) null fitted by OLS (conditional ML), the per-observation
Gaussian log density

    l_t = -1/2 log(2 pi s2) - (y_t - c - phi y_{t-1})^2 / (2 s2)

has closed-form first and second derivatives in theta = (c, phi, s2).  A
nuisance direction ``h`` (unit vector, middle component zero) and a chain
serial-correlation parameter ``rho`` define the second-order expansion term

    mu2_t(h, rho) = 1/2 h' [ l2_t + l1_t l1_t' + 2 sum_{s<t} rho^{t-s} l1_t l1_s' ] h

whose scaled sum Gamma = sum_t mu2_t / sqrt(T), standardized by the residual
norm of an OLS projection of mu2_t on the scores, yields a supremum-type and
an exponential-type statistic over sampled (h, rho).  Their null
distributions depend on nuisance parameters, so significance is assessed by
a parametric bootstrap from the fitted linear model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from ._seeding import DOMAIN_BOOTSTRAP, DOMAIN_NUISANCE, substream

logger = logging.getLogger(__name__)

RHO_BOUND = 0.7


@dataclass(frozen=True)
class NullScorePanel:
    """Per-observation gradients (n, 3) and Hessians (n, 3, 3) of the null
    log density at the OLS fit, for t = 2 ... T."""

    scores: np.ndarray
    hessians: np.ndarray
    theta0_hat: tuple[float, float, float]
    T: int


@dataclass(frozen=True)
class NuisanceDraw:
    """One nuisance point: unit direction ``h`` with h[1] = 0 and serial
    correlation ``rho`` in [-0.7, 0.7]."""

    h: np.ndarray
    rho: float

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=float)
        object.__setattr__(self, "h", h)
        if h.shape != (3,):
            raise ValueError("h must be a 3-vector")
        if abs(np.linalg.norm(h) - 1.0) > 1e-12:
            raise ValueError("h must have unit norm")
        if h[1] != 0.0:
            raise ValueError("second component of h must be zero")
        if not -RHO_BOUND <= self.rho <= RHO_BOUND:
            raise ValueError(f"rho must lie in [-{RHO_BOUND}, {RHO_BOUND}]")


@dataclass(frozen=True)
class CHPReport:
    """Benchmark test outcome with bootstrap p-values."""

    supTS: float
    expTS: float
    bootstrap_p_sup: float
    bootstrap_p_exp: float
    B: int
    draws: int
    seed: int


def standardize_series(y: np.ndarray) -> np.ndarray:
    """Center and scale a series by its own mean and standard deviation.

    The statistic pipeline applies this to the data and to every bootstrap
    sample, which makes the reported statistics exactly invariant to affine
    transformations of the observations.
    """
    y = np.asarray(y, dtype=float)
    sd = y.std()
    if sd <= 0.0:
        raise ValueError("cannot standardize a constant series")
    return (y - y.mean()) / sd


def _ols_ar1_ml(y: np.ndarray) -> tuple[float, float, float, np.ndarray]:
    """OLS intercept/slope with the 1/n residual-variance divisor, which
    zeroes all three score sums at the fitted point."""
    n = len(y) - 1
    X = np.column_stack([np.ones(n), y[:-1]])
    beta, *_ = np.linalg.lstsq(X, y[1:], rcond=None)
    resid = y[1:] - X @ beta
    sigma2 = float(resid @ resid / n)
    return float(beta[0]), float(beta[1]), sigma2, resid


def null_score_panel(y: np.ndarray, r: int = 1) -> NullScorePanel:
    """Scores and Hessians of the AR(1) null log density at the OLS fit.

    Only the first-order model is supported; higher lag orders are outside
    this module's scope.
    """
    if r != 1:
        raise ValueError("the benchmark tests are implemented for the AR(1) null only")
    y = np.asarray(y, dtype=float)
    if len(y) < 10:
        raise ValueError("need at least 10 observations")
    c, phi, s2, eps = _ols_ar1_ml(y)
    if s2 <= 0.0 or not np.isfinite(s2):
        raise ValueError("degenerate regression: zero residual variance")
    ylag = y[:-1]
    n = len(eps)

    scores = np.column_stack(
        [eps / s2, eps * ylag / s2, -0.5 / s2 + eps**2 / (2.0 * s2**2)]
    )
    hess = np.empty((n, 3, 3))
    hess[:, 0, 0] = -1.0 / s2
    hess[:, 0, 1] = hess[:, 1, 0] = -ylag / s2
    hess[:, 0, 2] = hess[:, 2, 0] = -eps / s2**2
    hess[:, 1, 1] = -(ylag**2) / s2
    hess[:, 1, 2] = hess[:, 2, 1] = -eps * ylag / s2**2
    hess[:, 2, 2] = 0.5 / s2**2 - eps**2 / s2**3
    return NullScorePanel(scores=scores, hessians=hess, theta0_hat=(c, phi, s2), T=len(y))


def _mu2_paths(panel: NullScorePanel, H: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    """mu2_t for a batch of draws; shape (n, d).

    The rho-weighted cross term uses the running accumulator
    ``a_t = rho (a_{t-1} + g_{t-1})`` with ``g_t = h' l1_t``, so the cost is
    linear in the sample size.
    """
    g = panel.scores @ H.T                                   # (n, d)
    quad = np.einsum("tij,di,dj->td", panel.hessians, H, H)  # h' l2_t h
    n, d = g.shape
    a = np.zeros((n, d))
    for t in range(1, n):
        a[t] = rhos * (a[t - 1] + g[t - 1])
    return 0.5 * (quad + g**2 + 2.0 * g * a)


def gamma_star(panel: NullScorePanel, d: NuisanceDraw) -> tuple[float, np.ndarray]:
    """Gamma = sum_t mu2_t / sqrt(T) and the mu2 path for one draw."""
    mu2 = _mu2_paths(panel, d.h[None, :], np.array([d.rho]))[:, 0]
    return float(mu2.sum() / np.sqrt(panel.T)), mu2


def projection_residuals(mu2_path: np.ndarray, panel: NullScorePanel) -> np.ndarray:
    """Residuals of an OLS regression of the mu2 path on the three scores.

    The scores each sum to zero at the fitted point, so no intercept is
    added.  Collinear score columns are dropped (and logged); the residuals
    are unaffected by which basis of the column space survives.
    """
    X = panel.scores
    rank = np.linalg.matrix_rank(X)
    if rank < X.shape[1]:
        # greedy column selection to an independent subset
        keep: list[int] = []
        for j in range(X.shape[1]):
            trial = keep + [j]
            if np.linalg.matrix_rank(X[:, trial]) == len(trial):
                keep.append(j)
        dropped = sorted(set(range(X.shape[1])) - set(keep))
        logger.warning("projection regressors rank deficient; dropped columns %s", dropped)
        X = X[:, keep]
    coef, *_ = np.linalg.lstsq(X, mu2_path, rcond=None)
    return mu2_path - X @ coef


def _criteria_for_draws(
    panel: NullScorePanel, H: np.ndarray, rhos: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-draw supremum criterion and exponential weight Psi."""
    mu2 = _mu2_paths(panel, H, rhos)
    Gam = mu2.sum(axis=0) / np.sqrt(panel.T)
    # project all mu2 columns on the scores at once
    Q, _ = np.linalg.qr(panel.scores)
    resid = mu2 - Q @ (Q.T @ mu2)
    ss = np.einsum("td,td->d", resid, resid)
    # a path (numerically) inside the score span has no residual variation to
    # standardize by; such draws contribute 0 to the sup and weight 1
    total = np.einsum("td,td->d", mu2, mu2)
    nonzero = ss > 1.0e-24 * total
    gnorm = np.zeros_like(Gam)
    gnorm[nonzero] = Gam[nonzero] / np.sqrt(ss[nonzero])
    sup_criteria = 0.5 * np.maximum(0.0, gnorm) ** 2
    sup_criteria[~nonzero] = 0.0
    psi = np.where(nonzero, _psi_weight(gnorm), 1.0)
    return sup_criteria, psi


def _psi_weight(g: np.ndarray) -> np.ndarray:
    """sqrt(2 pi) exp((g-1)^2 / 2) Phi(g - 1), evaluated without the 0 * inf
    breakdown of the naive product in the deep left tail.

    With x = g - 1, the product equals sqrt(pi/2) erfcx(-x / sqrt(2)).
    """
    x = np.asarray(g, dtype=float) - 1.0
    return np.sqrt(np.pi / 2.0) * erfcx(-x / np.sqrt(2.0))


def sample_nuisance_draws(count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample (h, rho) pairs: h uniform on the unit circle in the (mean,
    variance) coordinates, rho uniform on [-0.7, 0.7]."""
    angles = rng.uniform(0.0, 2.0 * np.pi, size=count)
    H = np.column_stack([np.cos(angles), np.zeros(count), np.sin(angles)])
    rhos = rng.uniform(-RHO_BOUND, RHO_BOUND, size=count)
    return H, rhos


def sup_ts(panel: NullScorePanel, draws: int, rng: np.random.Generator) -> float:
    """Supremum-type statistic over sampled nuisance draws."""
    if draws < 1:
        raise ValueError("need at least one nuisance draw")
    H, rhos = sample_nuisance_draws(draws, rng)
    sup_criteria, _ = _criteria_for_draws(panel, H, rhos)
    return float(sup_criteria.max())


def exp_ts(panel: NullScorePanel, draws: int, rng: np.random.Generator) -> float:
    """Exponential-type statistic: Monte Carlo average of the Psi weight."""
    if draws < 1:
        raise ValueError("need at least one nuisance draw")
    H, rhos = sample_nuisance_draws(draws, rng)
    _, psi = _criteria_for_draws(panel, H, rhos)
    return float(psi.mean())


def _simulate_ar1(
    c: float, phi: float, sigma2: float, T: int, rng: np.random.Generator, y1_fallback: float
) -> np.ndarray:
    """Linear AR(1) path with a stationary initial draw."""
    y = np.empty(T)
    if abs(phi) < 1.0 - 1e-8:
        y[0] = c / (1.0 - phi) + np.sqrt(sigma2 / (1.0 - phi**2)) * rng.standard_normal()
    else:
        y[0] = y1_fallback  # near-unit-root fit: no stationary distribution
    innov = rng.standard_normal(T - 1) * np.sqrt(sigma2)
    for t in range(1, T):
        y[t] = c + phi * y[t - 1] + innov[t - 1]
    return y


def chp_bootstrap_test(
    y: np.ndarray,
    B: int = 200,
    draws: int = 200,
    master_seed: int = 0,
) -> CHPReport:
    """Benchmark tests with parametric-bootstrap p-values.

    ``B`` artificial samples are generated from the fitted linear AR(1); the
    same nuisance draws are reused for the data and every bootstrap sample.
    Bootstrap p-values use the (1 + #{boot >= data}) / (B + 1) convention.
    """
    y = np.asarray(y, dtype=float)
    if B < 2:
        raise ValueError("B must be at least 2")
    H, rhos = sample_nuisance_draws(draws, substream(master_seed, DOMAIN_NUISANCE))

    ys = standardize_series(y)
    panel = null_score_panel(ys)
    sup_data, psi_data = _criteria_for_draws(panel, H, rhos)
    sup0 = float(sup_data.max())
    exp0 = float(psi_data.mean())

    c, phi, s2 = panel.theta0_hat
    T = panel.T
    n_sup = 0
    n_exp = 0
    for b in range(B):
        rng = substream(master_seed, DOMAIN_BOOTSTRAP, b)
        yb = _simulate_ar1(c, phi, s2, T, rng, y1_fallback=ys[0])
        sup_b, psi_b = _criteria_for_draws(null_score_panel(standardize_series(yb)), H, rhos)
        n_sup += float(sup_b.max()) >= sup0
        n_exp += float(psi_b.mean()) >= exp0
    return CHPReport(
        supTS=sup0,
        expTS=exp0,
        bootstrap_p_sup=(1 + n_sup) / (B + 1),
        bootstrap_p_exp=(1 + n_exp) / (B + 1),
        B=B,
        draws=draws,
        seed=master_seed,
    )
