"""Two-stage time-varying analysis of a return series.

Stage one estimates the time-varying mean of r_t = mu_t + h_t eps_t. Stage two
regresses the absolute residuals |r_t - mu_t| on a time-varying intercept,
whose path tracks h_t E|eps_t|. Residuals of stage two are then tested for
autocorrelation on a subsample; a GARCH(1,1) comparison series shows what the
tests report when the noise is conditionally heteroskedastic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from .config import Settings, get_settings
from .dgp import SeedRecord, gen_garch
from .diagnostics import correlation_frame, correlation_scan
from .exceptions import DatasetError, NonFiniteInput, ZeroVariance
from .monitoring import log_event
from .regression import RegressionSample
from .schemas import CorrTestResult, KernelSpec, NoiseSpec
from .timevarying import TvFit, bandwidth_from_exponent, fit_tv

LOGGER = logging.getLogger(__name__)

# GARCH(1,1) fitted to demeaned daily S&P 500 returns.
COMPARISON_GARCH = NoiseSpec(kind="garch11", omega=1.563e-6, alpha=0.096974, beta=0.88913)


def prices_to_returns(prices: np.ndarray) -> np.ndarray:
    """Log returns log(p_t / p_{t-1})."""

    prices = np.asarray(prices, dtype=float)
    if (prices <= 0).any() or not np.isfinite(prices).all():
        raise DatasetError("prices must be positive and finite to take log returns")
    if prices.shape[0] < 2:
        raise DatasetError("need at least two prices to form a return")
    return np.diff(np.log(prices))


@dataclass(frozen=True)
class EmpiricalReport:
    bandwidth: float
    mean_fit: TvFit
    scale_fit: TvFit
    residual_tests: list[CorrTestResult]
    garch_tests: Optional[list[CorrTestResult]] = None
    subsample: tuple[int, int] = (500, 1000)

    def mean_frame(self, level: float = 0.95) -> pd.DataFrame:
        return self.mean_fit.to_frame(level).drop(columns="coefficient").rename(columns={"beta": "mu"})

    def scale_frame(self, level: float = 0.95) -> pd.DataFrame:
        return self.scale_fit.to_frame(level).drop(columns="coefficient").rename(columns={"beta": "beta1"})

    def tests_frame(self) -> pd.DataFrame:
        return correlation_frame(self.residual_tests)

    def garch_frame(self) -> Optional[pd.DataFrame]:
        return None if self.garch_tests is None else correlation_frame(self.garch_tests)


def _intercept_path(series: np.ndarray, kernel: KernelSpec, settings: Settings) -> TvFit:
    sample = RegressionSample(y=series, Z=np.ones((series.shape[0], 1)), names=("const",))
    return fit_tv(sample, kernel, settings)


def _scale_stage(series: np.ndarray, kernel: KernelSpec, settings: Settings) -> tuple[TvFit, np.ndarray]:
    absolute = np.abs(series)
    fit = _intercept_path(absolute, kernel, settings)
    return fit, absolute - fit.beta_path[:, 0]


def run_empirical(
    returns: np.ndarray,
    h_exponent: Optional[float] = None,
    subsample: tuple[int, int] = (500, 1000),
    garch_compare: bool = False,
    seed: int = 0,
    max_lag: int = 20,
    level: float = 0.95,
    kernel_kind: str = "gaussian",
    settings: Optional[Settings] = None,
) -> EmpiricalReport:
    """Run both stages on ``returns``; ``subsample`` is 1-based and inclusive."""

    settings = settings or get_settings()
    returns = np.asarray(returns, dtype=float)
    if not np.isfinite(returns).all():
        raise NonFiniteInput("return series contains NaN or infinite values")
    if np.ptp(returns) == 0.0:
        raise ZeroVariance("return series is constant")
    n = returns.shape[0]
    start, stop = subsample
    if not 1 <= start < stop:
        raise DatasetError(f"subsample {start}:{stop} must satisfy 1 <= start < stop")
    if n < stop:
        raise DatasetError(f"series of length {n} is too short for the subsample {start}:{stop}")

    exponent = settings.empirical_h_exponent if h_exponent is None else h_exponent
    kernel = KernelSpec(kind=kernel_kind, bandwidth=bandwidth_from_exponent(n, exponent))

    mean_fit = _intercept_path(returns, kernel, settings)
    demeaned = returns - mean_fit.beta_path[:, 0]
    scale_fit, residuals = _scale_stage(demeaned, kernel, settings)
    window = slice(start - 1, stop)
    residual_tests = correlation_scan(residuals[window], max_lag, level)

    garch_tests = None
    if garch_compare:
        simulated = gen_garch(COMPARISON_GARCH, n, SeedRecord(seed).generator("noise"), settings)
        _, garch_residuals = _scale_stage(simulated, kernel, settings)
        garch_tests = correlation_scan(garch_residuals[window], max_lag, level)

    log_event(
        "empirical_finished",
        LOGGER,
        n=n,
        bandwidth=kernel.bandwidth,
        rejections_std=sum(test.std_reject for test in residual_tests),
        rejections_robust=sum(test.robust_reject for test in residual_tests),
        garch_compare=garch_compare,
    )
    return EmpiricalReport(
        bandwidth=kernel.bandwidth,
        mean_fit=mean_fit,
        scale_fit=scale_fit,
        residual_tests=residual_tests,
        garch_tests=garch_tests,
        subsample=subsample,
    )
