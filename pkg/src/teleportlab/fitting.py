"""Least-squares fits for power laws, logarithmic growth and local exponents."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FitResult:
    slope: float
    intercept: float
    slope_err: float
    residual_rms: float
    window: tuple = (None, None)

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_err": self.slope_err,
            "residual_rms": self.residual_rms,
            "window": list(self.window),
        }


def _linear_fit(x, y, window) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points to fit")
    if np.ptp(x) == 0:
        raise ValueError("degenerate abscissae: all points coincide")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(x.size - 2, 1)
    s2 = (resid**2).sum() / dof
    cov = s2 * np.linalg.pinv(A.T @ A)
    return FitResult(
        float(coef[0]), float(coef[1]), float(np.sqrt(cov[0, 0])), float(np.sqrt((resid**2).mean())), window
    )


def fit_power_law(x, y) -> FitResult:
    """Fit ``|y| = A x^p``; ``slope`` is ``p`` and ``intercept`` is ``ln A``."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    keep = (x > 0) & (y > 0)
    if not keep.any():
        raise ValueError("no positive points to fit")
    return _linear_fit(np.log(x[keep]), np.log(y[keep]), (float(x[keep].min()), float(x[keep].max())))


def fit_log_coefficient(x, y) -> FitResult:
    """Fit ``y = a ln x + b`` from at least four points."""
    x = np.asarray(x, dtype=float)
    if x.size < 4:
        raise ValueError("a logarithmic fit needs at least four points")
    if np.any(x <= 0):
        raise ValueError("lengths must be positive")
    return _linear_fit(np.log(x), y, (float(x.min()), float(x.max())))


def local_exponents(r, y) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint separations and local slopes ``d ln|y| / d ln r``."""
    r = np.asarray(r, dtype=float)
    ly = np.log(np.abs(np.asarray(y, dtype=float)))
    lr = np.log(r)
    mid = np.exp(0.5 * (lr[1:] + lr[:-1]))
    return mid, np.diff(ly) / np.diff(lr)


def _intercept(x, y, order: int, return_error: bool):
    if return_error and x.size > order + 2:
        coef, cov = np.polyfit(x, y, order, cov=True)
        return float(coef[-1]), float(np.sqrt(cov[-1, -1]))
    coef = np.polyfit(x, y, order)
    return (float(coef[-1]), float("nan")) if return_error else float(coef[-1])


def extrapolated_exponent(r, y, order: int = 1, return_error: bool = False):
    """Local exponents extrapolated to ``1/r -> 0`` with a polynomial in ``1/r``.

    With ``return_error`` the standard error of the intercept is returned too
    (``nan`` when there are too few points to estimate it).
    """
    mid, slopes = local_exponents(r, y)
    return _intercept(1.0 / mid, slopes, order, return_error)


def extrapolate_in_inverse(r, y, order: int = 1, return_error: bool = False):
    """Value of ``y(r)`` extrapolated to ``1/r -> 0``."""
    r = np.asarray(r, dtype=float)
    return _intercept(1.0 / r, np.asarray(y, dtype=float), order, return_error)
