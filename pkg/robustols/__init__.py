"""Robust OLS and time-varying OLS estimation with a Monte Carlo workbench."""

from .config import Settings, get_settings
from .exceptions import RobustOlsError
from .missing import MissingMask, fit_ols_missing, fit_tv_missing
from .regression import FixedFit, RegressionSample, fit_ols, test_coefficient
from .timevarying import TvFit, fit_tv, tv_confidence_band

__all__ = [
    "FixedFit",
    "MissingMask",
    "RegressionSample",
    "RobustOlsError",
    "Settings",
    "TvFit",
    "fit_ols",
    "fit_ols_missing",
    "fit_tv",
    "fit_tv_missing",
    "get_settings",
    "test_coefficient",
    "tv_confidence_band",
]
