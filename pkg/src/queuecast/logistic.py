"""Logistic regression of move direction on queue imbalance.

Maximum likelihood via Newton iterations (iteratively reweighted least
squares) with step halving whenever a full step would lower the
log-likelihood. Convergence requires both a log-likelihood change below
1e-10 and a score norm below 1e-8; standard errors come from the inverse
observed Fisher information at the optimum. Near-perfect classification is
flagged as separation (|slope| > 30 or overflowing standard errors) rather
than treated as fatal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AllOneLabel, NotConverged, NotNested, TooFewPoints

LOGLIK_TOL = 1e-10
SCORE_TOL = 1e-8
MAX_ITER = 100
SEPARATION_SLOPE = 30.0

CRIT_95 = 3.84
CRIT_99 = 6.63


@dataclass
class LogisticFit:
    x0: float
    x1: float
    se0: Optional[float]
    se1: Optional[float]
    loglik: float
    n: int
    iterations: int
    converged: bool
    separated: bool
    intercept_only: bool = False


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    p_value: float
    significant_95: bool
    significant_99: bool


def sigmoid(eta):
    """Numerically safe logistic function, scalar or ndarray."""
    eta = np.asarray(eta, dtype=float)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ex = np.exp(eta[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def _bernoulli_loglik(eta, y, w):
    # sum w * (y*eta - log(1 + e^eta)), stable via logaddexp
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def weighted_logistic_mle(z, y, w, max_iter: int = MAX_ITER):
    """Weighted intercept-and-slope logistic MLE on regressor z.

    Returns (b0, b1, loglik, iterations, converged, separated, cov) where
    cov is the 2x2 inverse Fisher information or None when unavailable.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    b0 = 0.0
    b1 = 0.0
    eta = np.zeros_like(z)
    ll = _bernoulli_loglik(eta, y, w)
    last_delta = math.inf
    converged = False
    iterations = 0
    h00 = h01 = h11 = det = 0.0
    for _ in range(max_iter):
        p = sigmoid(eta)
        r = w * (y - p)
        g0 = float(r.sum())
        g1 = float(r @ z)
        ww = w * p * (1.0 - p)
        h00 = float(ww.sum())
        h01 = float(ww @ z)
        h11 = float(ww @ (z * z))
        det = h00 * h11 - h01 * h01
        if last_delta < LOGLIK_TOL and math.hypot(g0, g1) < SCORE_TOL:
            converged = True
            break
        if not math.isfinite(det) or det <= 0.0:
            break
        d0 = (h11 * g0 - h01 * g1) / det
        d1 = (h00 * g1 - h01 * g0) / det
        step = 1.0
        new_ll = ll
        nb0, nb1 = b0, b1
        while True:
            cb0 = b0 + step * d0
            cb1 = b1 + step * d1
            ceta = cb0 + cb1 * z
            cll = _bernoulli_loglik(ceta, y, w)
            if cll >= ll - 1e-13:
                nb0, nb1, eta, new_ll = cb0, cb1, ceta, cll
                break
            step *= 0.5
            if step < 1e-10:
                # no improving step exists: already at the numerical optimum
                ceta = b0 + b1 * z
                nb0, nb1, eta, new_ll = b0, b1, ceta, ll
                break
        iterations += 1
        last_delta = abs(new_ll - ll)
        b0, b1, ll = nb0, nb1, new_ll
        if step < 1e-10:
            converged = math.hypot(g0, g1) < SCORE_TOL
            break
    separated = abs(b1) > SEPARATION_SLOPE
    cov = None
    if det > 0.0 and math.isfinite(det):
        c00 = h11 / det
        c11 = h00 / det
        c01 = -h01 / det
        if math.isfinite(c00) and math.isfinite(c11) and c00 > 0 and c11 > 0:
            cov = ((c00, c01), (c01, c11))
        else:
            separated = True
    else:
        separated = True
    return b0, b1, ll, iterations, converged, separated, cov


def fit_logistic(imbalance, labels) -> LogisticFit:
    """Fit p(up) = sigmoid(x0 + x1 * I) by maximum likelihood."""
    I = np.asarray(imbalance, dtype=float)
    y = np.asarray(labels, dtype=float)
    n = len(I)
    if n < 10:
        raise TooFewPoints(n, 10)
    if y.min() == y.max():
        raise AllOneLabel("all labels identical; logistic fit undefined")
    w = np.ones(n)
    b0, b1, ll, iters, converged, separated, cov = weighted_logistic_mle(I, y, w)
    se0 = se1 = None
    if cov is not None and not separated:
        se0 = math.sqrt(cov[0][0])
        se1 = math.sqrt(cov[1][1])
    return LogisticFit(b0, b1, se0, se1, ll, n, iters, converged, separated)


def fit_intercept_only(labels) -> LogisticFit:
    """Closed-form MLE of the slope-free (null-structure) model."""
    y = np.asarray(labels, dtype=float)
    n = len(y)
    if n < 1:
        raise TooFewPoints(n, 1)
    pbar = float(y.mean())
    if pbar in (0.0, 1.0):
        raise AllOneLabel("all labels identical; intercept MLE diverges")
    x0 = math.log(pbar / (1.0 - pbar))
    ll = n * (pbar * math.log(pbar) + (1.0 - pbar) * math.log(1.0 - pbar))
    se0 = 1.0 / math.sqrt(n * pbar * (1.0 - pbar))
    return LogisticFit(x0, 0.0, se0, None, ll, n, 0, True, False, intercept_only=True)


def predict_logistic(fit: LogisticFit, imbalance):
    """Evaluate the fitted sigmoid at one or many imbalance values."""
    I = np.asarray(imbalance, dtype=float)
    if not np.all(np.isfinite(I)):
        raise ValueError("imbalance values must be finite")
    return sigmoid(fit.x0 + fit.x1 * I)


def chi2_sf_1df(x: float) -> float:
    """Survival function of chi-square with 1 df.

    P(X > x) = 2 (1 - Phi(sqrt(x))) = erfc(sqrt(x / 2)); math.erfc is
    accurate to a couple of ulps across the range used here.
    """
    if x < 0:
        raise ValueError("chi-square statistic must be nonnegative")
    return math.erfc(math.sqrt(x / 2.0))


def _test_result(statistic: float) -> TestResult:
    return TestResult(
        statistic=statistic,
        df=1,
        p_value=chi2_sf_1df(statistic),
        significant_95=statistic >= CRIT_95,
        significant_99=statistic >= CRIT_99,
    )


def wald_test(fit: LogisticFit, which: str) -> TestResult:
    """Wald test of a single coefficient against zero."""
    if not fit.converged or fit.separated:
        raise NotConverged("Wald test requires a converged, non-separated fit")
    if which == "x0":
        est, se = fit.x0, fit.se0
    elif which == "x1":
        est, se = fit.x1, fit.se1
    else:
        raise ValueError("which must be 'x0' or 'x1'")
    if se is None or se <= 0:
        raise NotConverged(f"no standard error available for {which}")
    return _test_result((est / se) ** 2)


def lr_test(full: LogisticFit, intercept_only: LogisticFit) -> TestResult:
    """Likelihood-ratio test of the full fit against the intercept-only fit."""
    stat = 2.0 * (full.loglik - intercept_only.loglik)
    if stat < -1e-8:
        raise NotNested(
            f"full-model log-likelihood {full.loglik} below nested {intercept_only.loglik}"
        )
    return _test_result(max(stat, 0.0))
