"""Log-log least squares for power-law rate curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FitError, ParameterError

__all__ = ["PowerFit", "fit_power_law", "loglog_ols"]


@dataclass(frozen=True)
class PowerFit:
    """Fitted y ~ exp(log_prefactor) * x**exponent over ``window``.

    ``r_squared`` is the ordinary coefficient of determination of the
    log-log regression (1.0 for an exact power law, and by convention also
    for constant data, which a zero-exponent law fits exactly).
    """

    exponent: float
    log_prefactor: float
    r_squared: float
    window: tuple[float, float]

    @property
    def prefactor(self) -> float:
        return float(np.exp(self.log_prefactor))

    def __call__(self, x):
        return np.exp(self.log_prefactor) * np.asarray(x, dtype=float) ** self.exponent


def loglog_ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """OLS of log y on log x; returns (slope, intercept, r_squared)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    mx = lx.mean()
    my = ly.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    if sxx == 0.0:
        raise FitError("all x values coincide; slope is undefined")
    sxy = float(np.sum((lx - mx) * (ly - my)))
    slope = sxy / sxx
    intercept = my - slope * mx
    syy = float(np.sum((ly - my) ** 2))
    if syy == 0.0:
        r2 = 1.0
    else:
        resid = ly - (intercept + slope * lx)
        r2 = 1.0 - float(np.sum(resid**2)) / syy
    return slope, intercept, r2


def fit_power_law(samples) -> PowerFit:
    """Fit y = C * t**p to positive samples [(t, y), ...] by log-log OLS.

    Requires at least 4 samples with strictly increasing t and y > 0
    throughout.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParameterError("samples must be a sequence of (t, y) pairs")
    if arr.shape[0] < 4:
        raise ParameterError(f"need at least 4 samples, got {arr.shape[0]}")
    t = arr[:, 0]
    y = arr[:, 1]
    if not np.all(np.diff(t) > 0):
        raise ParameterError("t values must be strictly increasing")
    if np.any(y <= 0):
        bad = int(np.argmax(y <= 0))
        raise DomainError(f"sample {bad} has nonpositive y={y[bad]}; cannot take logs")
    slope, intercept, r2 = loglog_ols(t, y)
    return PowerFit(
        exponent=float(slope),
        log_prefactor=float(intercept),
        r_squared=float(r2),
        window=(float(t[0]), float(t[-1])),
    )
