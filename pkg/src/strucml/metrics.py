"""Regression performance metrics and actual/predicted ratio statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class MetricReport:
    """MAE, RMSE, and R^2 over one evaluation set (target units / dimensionless)."""

    mae: float
    rmse: float
    r2: float
    n: int

    def to_json_dict(self) -> dict:
        return {"mae": self.mae, "rmse": self.rmse, "r2": self.r2, "n": self.n}


@dataclass(frozen=True)
class RatioStats:
    """Mean and coefficient of variation of actual/predicted ratios."""

    mean_ratio: float
    cov: float

    def to_json_dict(self) -> dict:
        return {"mean_ratio": self.mean_ratio, "cov": self.cov}


def _paired(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.ndim != 1 or p.ndim != 1:
        raise ValidationError("metric inputs must be one-dimensional")
    if a.shape != p.shape:
        raise ValidationError(f"length mismatch: {a.shape[0]} vs {p.shape[0]}")
    if a.size == 0:
        raise ValidationError("metric inputs must be non-empty")
    return a, p


def mae(actual, predicted) -> float:
    """Mean absolute error, mean(|A - P|)."""
    a, p = _paired(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def rmse(actual, predicted) -> float:
    """Root mean squared error, sqrt(mean((A - P)^2))."""
    a, p = _paired(actual, predicted)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def r_squared(actual, predicted) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot about the actual mean.

    Raises DomainError when the actual values are constant (SS_tot = 0).
    """
    a, p = _paired(actual, predicted)
    if a.size < 2:
        raise ValidationError("r_squared needs at least 2 points")
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise DomainError("r_squared undefined for constant actual values (SS_tot = 0)")
    ss_res = float(np.sum((a - p) ** 2))
    return 1.0 - ss_res / ss_tot


def metric_report(actual, predicted) -> MetricReport:
    a, p = _paired(actual, predicted)
    return MetricReport(
        mae=mae(a, p), rmse=rmse(a, p), r2=r_squared(a, p), n=int(a.size)
    )


def ratio_stats(actual, predicted) -> RatioStats:
    """Mean and sample-std coefficient of variation of the ratios A_i / P_i.

    Uses the (n-1) standard deviation; a single pair reports cov = 0.
    """
    a, p = _paired(actual, predicted)
    zero = np.flatnonzero(p == 0.0)
    if zero.size:
        raise DomainError(f"predicted value is zero at row {int(zero[0])}")
    ratios = a / p
    mean = float(ratios.mean())
    if ratios.size < 2:
        return RatioStats(mean_ratio=mean, cov=0.0)
    std = float(ratios.std(ddof=1))
    if mean == 0.0:
        raise DomainError("cov undefined: mean ratio is zero")
    return RatioStats(mean_ratio=mean, cov=std / abs(mean))
