"""Standard and heteroskedasticity-robust tests for zero autocorrelation at individual lags."""

from __future__ import annotations

import logging
from typing import Iterable

import numpy as np
import pandas as pd

from .exceptions import DimensionMismatch, NonFiniteInput, ZeroDenominator, ZeroVariance
from .regression import critical_value
from .schemas import CorrTestResult

LOGGER = logging.getLogger(__name__)


def _demeaned(series: Iterable[float], k: int) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a single series, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise NonFiniteInput("series contains NaN or infinite values")
    if not 1 <= k < x.shape[0]:
        raise DimensionMismatch(f"lag {k} needs 1 <= k < n = {x.shape[0]}")
    if np.ptp(x) == 0.0:
        raise ZeroVariance("series is constant")
    return x - x.mean()


def sample_autocorr(series: Iterable[float], k: int) -> float:
    """rho_k = sum_{t>k} x~_t x~_{t-k} / sum_t x~_t^2 with x~ demeaned by the full-sample mean."""

    centered = _demeaned(series, k)
    denominator = float(centered @ centered)
    if denominator == 0.0:
        raise ZeroVariance("series has zero sample variance")
    return float(centered[k:] @ centered[:-k]) / denominator


def robust_corr_test(series: Iterable[float], k: int, level: float = 0.95) -> CorrTestResult:
    """Both tests of zero correlation at lag k.

    The standard statistic is sqrt(n) rho_k. The robust statistic
    self-normalises the lag-k cross products,
    t_k = sum x~_t x~_{t-k} / sqrt(sum x~_t^2 x~_{t-k}^2), so conditional
    heteroskedasticity does not distort its normal approximation.
    """

    centered = _demeaned(series, k)
    n = centered.shape[0]
    rho = float(np.clip(sample_autocorr(centered, k), -1.0, 1.0))

    products = centered[k:] * centered[:-k]
    denominator = float(np.sqrt(products @ products))
    if denominator == 0.0:
        raise ZeroDenominator(f"all lag-{k} cross products are zero")

    z = critical_value(level)
    std_stat = float(np.sqrt(n) * rho)
    robust_stat = float(products.sum()) / denominator
    return CorrTestResult(
        lag=k,
        rho=rho,
        std_stat=std_stat,
        robust_stat=robust_stat,
        critical_value=z,
        std_reject=abs(std_stat) > z,
        robust_reject=abs(robust_stat) > z,
    )


def correlation_scan(series: Iterable[float], max_lag: int = 20, level: float = 0.95) -> list[CorrTestResult]:
    x = np.asarray(series, dtype=float)
    return [robust_corr_test(x, k, level) for k in range(1, max_lag + 1)]


def correlation_frame(results: Iterable[CorrTestResult]) -> pd.DataFrame:
    """Per-lag table: lag, rho, std_stat, robust_stat and the two rejection flags."""

    return pd.DataFrame(
        [
            {
                "lag": result.lag,
                "rho": result.rho,
                "std_stat": result.std_stat,
                "robust_stat": result.robust_stat,
                "std_reject": result.std_reject,
                "robust_reject": result.robust_reject,
            }
            for result in results
        ]
    )
