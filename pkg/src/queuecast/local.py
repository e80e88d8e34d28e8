"""Local logistic regression with a tricube kernel.

At every grid point a separate intercept-and-slope logistic regression is
fitted to the training data, weighted by the tricube kernel
w(u) = (1 - |u|^3)^3 on |u| < 1, with a nearest-neighbour bandwidth: the
kernel radius at a grid point is the distance to the ceil(alpha * n)-th
closest training imbalance. The fitted curve value is the local sigmoid
evaluated at the grid point itself.

The bandwidth fraction alpha is chosen by k-fold cross validation on the
training set, minimizing the mean squared residual of held-out predictions
(grid fit plus linear interpolation, exactly the shipped predictor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import OutOfDomain, TooFewPoints
from .logistic import sigmoid, weighted_logistic_mle

FITTED_FLOOR = 1e-6
DEFAULT_GRID_POINTS = 401


@dataclass
class LocalLogisticFit:
    grid: np.ndarray  # strictly increasing I values on [-1, 1]
    fitted: np.ndarray  # estimated p(up) at each grid point, in (0, 1)
    alpha: float  # nearest-neighbour bandwidth fraction
    train_ref: str = ""
    degenerate: np.ndarray = None  # bool mask of clamped grid points


@dataclass
class CvResult:
    alpha: float
    msr_by_alpha: dict
    folds: list = field(default_factory=list)


def default_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(-1.0, 1.0, points)


def _neighbour_count(alpha: float, n: int) -> int:
    # guard the ceil against float fuzz (0.65 * 20160 is not exact)
    return int(math.ceil(alpha * n - 1e-9))


def fit_local_logistic(
    imbalance,
    labels,
    alpha: float,
    grid: Optional[np.ndarray] = None,
    all_weights_one: bool = False,
    train_ref: str = "",
) -> LocalLogisticFit:
    """Fit the locally weighted curve over a grid of imbalance values.

    ``all_weights_one`` is a test mode that disables the kernel entirely;
    the resulting curve must coincide with the global logistic fit.
    Neighbourhoods whose weighted labels are all identical (or whose local
    fit separates) get a clamped fitted value and a degeneracy flag.
    """
    I = np.asarray(imbalance, dtype=float)
    y = np.asarray(labels, dtype=float)
    n = len(I)
    if grid is None:
        grid = default_grid()
    grid = np.asarray(grid, dtype=float)
    if not 0.0 < alpha <= 1.0:
        raise ValueError("bandwidth fraction alpha must lie in (0, 1]")
    k = _neighbour_count(alpha, n)
    if k < 10:
        raise TooFewPoints(k, 10)
    order = np.argsort(I, kind="stable")
    I_s = I[order]
    y_s = y[order]
    fitted = np.empty(len(grid))
    degenerate = np.zeros(len(grid), dtype=bool)
    for j, g in enumerate(grid):
        if all_weights_one:
            zz, yy, w = I_s - g, y_s, np.ones(n)
        else:
            d = np.abs(I_s - g)
            h = float(np.partition(d, k - 1)[k - 1])
            if h == 0.0:
                positive = d[d > 0.0]
                if positive.size == 0:
                    # every training imbalance equals this grid point
                    fitted[j] = min(max(float(y_s.mean()), FITTED_FLOOR), 1.0 - FITTED_FLOOR)
                    degenerate[j] = True
                    continue
                h = float(positive.min())
            lo = int(np.searchsorted(I_s, g - h, side="right"))
            hi = int(np.searchsorted(I_s, g + h, side="left"))
            zz = I_s[lo:hi] - g
            yy = y_s[lo:hi]
            u = np.abs(zz) / h
            w = (1.0 - u**3) ** 3
        if yy.size == 0 or yy.min() == yy.max():
            label = float(yy[0]) if yy.size else 0.5
            fitted[j] = min(max(label, FITTED_FLOOR), 1.0 - FITTED_FLOOR)
            degenerate[j] = True
            continue
        b0, _b1, _ll, _it, _conv, separated, _cov = weighted_logistic_mle(zz, yy, w)
        value = float(sigmoid(b0))
        if separated:
            value = min(max(value, FITTED_FLOOR), 1.0 - FITTED_FLOOR)
            degenerate[j] = True
        fitted[j] = value
    return LocalLogisticFit(grid, fitted, alpha, train_ref, degenerate)


def predict_local(fit: LocalLogisticFit, imbalance):
    """Linear interpolation between grid values; exact at grid points."""
    I = np.asarray(imbalance, dtype=float)
    if np.any(I < fit.grid[0]) or np.any(I > fit.grid[-1]):
        bad = I[(I < fit.grid[0]) | (I > fit.grid[-1])]
        raise OutOfDomain(float(np.ravel(bad)[0]))
    out = np.interp(I, fit.grid, fit.fitted)
    return out if out.ndim else float(out)


def cv_bandwidth(
    imbalance,
    labels,
    candidates: Sequence[float],
    k: int = 5,
    rng: Optional[np.random.Generator] = None,
    grid: Optional[np.ndarray] = None,
) -> CvResult:
    """Pick the bandwidth fraction by k-fold cross-validated squared error.

    Ties break toward the larger (smoother) candidate. Returns the winner
    together with the full CV-MSR table and the fold index arrays, so the
    accumulation can be audited independently.
    """
    if not candidates:
        raise ValueError("no bandwidth candidates supplied")
    if k < 2:
        raise ValueError("cross validation needs k >= 2 folds")
    I = np.asarray(imbalance, dtype=float)
    y = np.asarray(labels, dtype=float)
    n = len(I)
    if rng is None:
        rng = np.random.default_rng(0)
    folds = np.array_split(rng.permutation(n), k)
    msr_by_alpha: dict = {}
    for alpha in candidates:
        sse = 0.0
        for fold in folds:
            mask = np.ones(n, dtype=bool)
            mask[fold] = False
            fit = fit_local_logistic(I[mask], y[mask], alpha, grid=grid)
            pred = predict_local(fit, I[fold])
            sse += float(np.sum((pred - y[fold]) ** 2))
        msr_by_alpha[float(alpha)] = sse / n
    return CvResult(select_bandwidth(msr_by_alpha), msr_by_alpha, [np.sort(f) for f in folds])


def select_bandwidth(msr_by_alpha: dict) -> float:
    """Lowest CV-MSR candidate; exact ties go to the larger (smoother) alpha."""
    best = None
    for alpha in msr_by_alpha:
        if (
            best is None
            or msr_by_alpha[alpha] < msr_by_alpha[best]
            or (msr_by_alpha[alpha] == msr_by_alpha[best] and alpha > best)
        ):
            best = alpha
    return best
