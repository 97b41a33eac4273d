"""Fixed-parameter OLS with heteroskedasticity-robust and standard covariance estimators."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.stats import norm

from .config import Settings, get_settings
from .exceptions import DimensionMismatch, InvalidSpec, NonFiniteInput, RankDeficient, ZeroStandardError
from .schemas import CoefficientTest

LOGGER = logging.getLogger(__name__)

Flavor = Literal["robust", "standard"]


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Average a matrix with its transpose so round-off never breaks symmetry."""

    return 0.5 * (matrix + matrix.T)


def critical_value(level: float) -> float:
    """Two-sided standard normal quantile z_{1-(1-level)/2}."""

    if not 0.0 < level < 1.0:
        raise InvalidSpec(f"confidence level must lie in (0, 1), got {level}")
    return float(norm.ppf(0.5 + level / 2.0))


@dataclass(frozen=True)
class RegressionSample:
    """Observed pairs (y_t, z_t); row t of ``Z`` is z_t'."""

    y: np.ndarray
    Z: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        y = np.array(self.y, dtype=float)
        Z = np.array(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        if y.ndim != 1 or Z.ndim != 2:
            raise DimensionMismatch(f"expected a vector y and a matrix Z, got shapes {y.shape} and {Z.shape}")
        if Z.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"y has {y.shape[0]} rows but Z has {Z.shape[0]}")
        n, p = Z.shape
        if p < 1 or n < p:
            raise DimensionMismatch(f"need n >= p >= 1, got n={n}, p={p}")
        if not (np.isfinite(y).all() and np.isfinite(Z).all()):
            raise NonFiniteInput("sample contains NaN or infinite values")

        names = tuple(self.names) or tuple(f"z{k + 1}" for k in range(p))
        if len(names) != p:
            raise DimensionMismatch(f"{len(names)} regressor names given for {p} columns")

        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "Z", _readonly(Z))
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return int(self.Z.shape[0])

    @property
    def p(self) -> int:
        return int(self.Z.shape[1])

    def rows(self, index: Sequence[int] | np.ndarray) -> "RegressionSample":
        """Return the sub-sample made of the selected rows."""

        return RegressionSample(y=self.y[index], Z=self.Z[index], names=self.names)


@dataclass(frozen=True)
class FixedFit:
    beta_hat: np.ndarray
    residuals: np.ndarray
    s_zz: np.ndarray
    s_zz_inv: np.ndarray
    cov_robust: np.ndarray
    cov_standard: np.ndarray
    se_robust: np.ndarray
    se_standard: np.ndarray
    sigma2: float
    nobs: int
    condition_number: float
    names: tuple[str, ...]

    @property
    def p(self) -> int:
        return int(self.beta_hat.shape[0])

    def cov(self, flavor: Flavor = "robust") -> np.ndarray:
        return self.cov_robust if flavor == "robust" else self.cov_standard

    def se(self, flavor: Flavor = "robust") -> np.ndarray:
        return self.se_robust if flavor == "robust" else self.se_standard

    def t_stats(self, flavor: Flavor = "robust", null: float | np.ndarray = 0.0) -> np.ndarray:
        """t-statistics against ``null``; NaN where the standard error is zero."""

        se = self.se(flavor)
        diff = self.beta_hat - null
        out = np.full(self.p, np.nan)
        np.divide(diff, se, out=out, where=se > 0)
        return out

    @property
    def degenerate(self) -> bool:
        return bool((self.se_robust == 0).any() or (self.se_standard == 0).any())

    def summary_frame(self, level: float = 0.95) -> pd.DataFrame:
        z = critical_value(level)
        return pd.DataFrame(
            {
                "coefficient": list(self.names),
                "estimate": self.beta_hat,
                "se_robust": self.se_robust,
                "se_standard": self.se_standard,
                "t_robust": self.t_stats("robust"),
                "t_standard": self.t_stats("standard"),
                "ci_robust_lower": self.beta_hat - z * self.se_robust,
                "ci_robust_upper": self.beta_hat + z * self.se_robust,
                "ci_standard_lower": self.beta_hat - z * self.se_standard,
                "ci_standard_upper": self.beta_hat + z * self.se_standard,
            }
        )


def fit_ols(sample: RegressionSample, settings: Optional[Settings] = None) -> FixedFit:
    """OLS estimate with the sandwich covariance S^-1 (sum z z' u^2) S^-1 and S^-1 sigma^2."""

    return fit_design(sample.Z, sample.y, nobs=sample.n, names=sample.names, settings=settings)


def fit_design(
    Z: np.ndarray,
    y: np.ndarray,
    *,
    nobs: int,
    names: tuple[str, ...],
    settings: Optional[Settings] = None,
) -> FixedFit:
    """Least-squares core shared by full-sample and zero-filled estimation.

    ``nobs`` is the divisor of the residual variance in the standard covariance; it
    differs from ``len(y)`` only when unobserved rows were zero-filled.
    """

    settings = settings or get_settings()
    p = Z.shape[1]

    q, r = linalg.qr(Z, mode="economic")
    diag = np.abs(np.diag(r))
    largest = float(diag.max()) if diag.size else 0.0
    if largest == 0.0 or float(diag.min()) < settings.rank_tolerance * largest:
        condition = float(np.linalg.cond(r)) if largest > 0.0 else float("inf")
        raise RankDeficient("regressors are collinear", condition_number=condition)

    beta_hat = linalg.solve_triangular(r, q.T @ y)
    residuals = y - Z @ beta_hat

    r_inv = linalg.solve_triangular(r, np.eye(p))
    s_zz_inv = symmetrize(r_inv @ r_inv.T)
    s_zz = symmetrize(Z.T @ Z)

    scores = Z * residuals[:, None]
    cov_robust = symmetrize(s_zz_inv @ (scores.T @ scores) @ s_zz_inv)
    sigma2 = float(residuals @ residuals) / nobs
    cov_standard = s_zz_inv * sigma2

    return FixedFit(
        beta_hat=_readonly(beta_hat),
        residuals=_readonly(residuals),
        s_zz=_readonly(s_zz),
        s_zz_inv=_readonly(s_zz_inv),
        cov_robust=_readonly(cov_robust),
        cov_standard=_readonly(cov_standard),
        se_robust=_readonly(np.sqrt(np.clip(np.diag(cov_robust), 0.0, None))),
        se_standard=_readonly(np.sqrt(np.clip(np.diag(cov_standard), 0.0, None))),
        sigma2=sigma2,
        nobs=nobs,
        condition_number=float(np.linalg.cond(r)),
        names=names,
    )


def test_coefficient(
    fit: FixedFit,
    k: int,
    beta0: float = 0.0,
    flavor: Flavor = "robust",
    level: float = 0.95,
) -> CoefficientTest:
    """Two-sided normal test of H0: beta_k = beta0 and the matching confidence interval."""

    if not 0 <= k < fit.p:
        raise DimensionMismatch(f"coefficient index {k} outside 0..{fit.p - 1}")
    z = critical_value(level)
    se = float(fit.se(flavor)[k])
    if se <= 0.0:
        raise ZeroStandardError(f"{flavor} standard error of coefficient {k} is zero (exact fit?)")

    estimate = float(fit.beta_hat[k])
    t_stat = (estimate - beta0) / se
    return CoefficientTest(
        index=k,
        null_value=beta0,
        estimate=estimate,
        t_stat=t_stat,
        se_used=se,
        flavor=flavor,
        level=level,
        critical_value=z,
        reject=abs(t_stat) > z,
        ci_lower=estimate - z * se,
        ci_upper=estimate + z * se,
    )


# pytest would otherwise collect the public function above as a test
test_coefficient.__test__ = False  # type: ignore[attr-defined]
