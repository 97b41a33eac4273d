"""Kernel-weighted time-varying OLS, its sandwich covariance and pointwise confidence bands."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import norm

from .config import Settings, get_settings
from .exceptions import AllPointsFailed, DimensionMismatch, FailedPoint
from .monitoring import log_event
from .regression import RegressionSample, critical_value
from .schemas import BandwidthPolicy, BandwidthReport, KernelSpec

LOGGER = logging.getLogger(__name__)

WeightRows = Callable[[np.ndarray], np.ndarray]


def bandwidth_from_exponent(n: int, exponent: float) -> float:
    """H = n^h."""

    return float(n) ** exponent


def _kernel(kind: str, x: np.ndarray) -> np.ndarray:
    if kind == "gaussian":
        return norm.pdf(x)
    return ((x >= 0.0) & (x <= 1.0)).astype(float)


def kernel_weight(spec: KernelSpec, t: int, j: int) -> float:
    """b_{n,tj} = K(|t - j| / H)."""

    return float(_kernel(spec.kind, np.asarray(abs(t - j) / spec.bandwidth)))


def kernel_weights(
    spec: KernelSpec,
    n: int,
    rows: Sequence[int] | np.ndarray,
    settings: Optional[Settings] = None,
) -> np.ndarray:
    """Weight block with one row b_{n,t.} per requested t; tiny Gaussian tails are dropped."""

    settings = settings or get_settings()
    rows = np.asarray(rows)
    distance = np.abs(rows[:, None] - np.arange(n)[None, :]) / spec.bandwidth
    weights = _kernel(spec.kind, distance)
    weights[weights < settings.kernel_weight_floor] = 0.0
    return weights


@dataclass(frozen=True)
class TvFit:
    """Estimated coefficient path; rows flagged in ``failed`` carry NaN."""

    beta_path: np.ndarray
    se_robust_path: np.ndarray
    cov_path: np.ndarray
    residuals: np.ndarray
    failed: np.ndarray
    names: tuple[str, ...]
    kernel: Optional[KernelSpec] = None

    @property
    def n(self) -> int:
        return int(self.beta_path.shape[0])

    @property
    def p(self) -> int:
        return int(self.beta_path.shape[1])

    def to_frame(self, level: float = 0.95) -> pd.DataFrame:
        """Long format (t, coefficient, beta, se, lower, upper) with 1-based t."""

        z = critical_value(level)
        frames = []
        for k, name in enumerate(self.names):
            beta = self.beta_path[:, k]
            se = self.se_robust_path[:, k]
            frames.append(
                pd.DataFrame(
                    {
                        "t": np.arange(1, self.n + 1),
                        "coefficient": name,
                        "beta": beta,
                        "se": se,
                        "lower": beta - z * se,
                        "upper": beta + z * se,
                        "failed": self.failed,
                    }
                )
            )
        return pd.concat(frames, ignore_index=True)


def gram_well_conditioned(gram: np.ndarray, tolerance: float) -> np.ndarray:
    """Per-matrix flag on Z'WZ, on the same scale as the QR test of ``fit_design``.

    The eigenvalues of Z'WZ are the squared singular values of W^(1/2)Z, so the
    singular-value ratio ``tolerance`` becomes ``tolerance**2`` here. Ratios
    under the rounding floor of ``eigvalsh`` count as zero.
    """

    eigenvalues = np.linalg.eigvalsh(gram)
    largest = eigenvalues[..., -1]
    floor = 10.0 * gram.shape[-1] * np.finfo(float).eps
    threshold = max(tolerance**2, floor)
    return (largest > 0.0) & (eigenvalues[..., 0] > threshold * largest)


def _weighted_path(
    sample: RegressionSample,
    weight_rows: WeightRows,
    settings: Settings,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    Z, y = sample.Z, sample.y
    n, p = Z.shape
    outer = (Z[:, :, None] * Z[:, None, :]).reshape(n, p * p)
    cross = Z * y[:, None]

    beta = np.full((n, p), np.nan)
    gram_inv = np.full((n, p, p), np.nan)
    failed = np.zeros(n, dtype=bool)
    blocks = [np.arange(start, min(n, start + settings.tv_block_size)) for start in range(0, n, settings.tv_block_size)]

    for rows in blocks:
        weights = weight_rows(rows)
        gram = (weights @ outer).reshape(-1, p, p)
        ok = gram_well_conditioned(gram, settings.rank_tolerance)
        failed[rows[~ok]] = True
        if ok.any():
            good = rows[ok]
            beta[good] = np.linalg.solve(gram[ok], (weights[ok] @ cross)[..., None])[..., 0]
            gram_inv[good] = np.linalg.inv(gram[ok])

    # u_j = y_j - beta_j' z_j uses the path at its own j; failed j contribute nothing
    residuals = y - np.einsum("tk,tk->t", Z, beta)
    squared = np.where(failed, 0.0, residuals) ** 2
    scores = outer * squared[:, None]

    cov = np.full((n, p, p), np.nan)
    for rows in blocks:
        good = rows[~failed[rows]]
        if good.size == 0:
            continue
        weights = weight_rows(good)
        meat = ((weights**2) @ scores).reshape(-1, p, p)
        sandwich = gram_inv[good] @ meat @ gram_inv[good]
        cov[good] = 0.5 * (sandwich + sandwich.transpose(0, 2, 1))

    se = np.sqrt(np.clip(np.diagonal(cov, axis1=1, axis2=2), 0.0, None))
    return beta, se, cov, residuals, failed


def _finish(
    sample: RegressionSample,
    weight_rows: WeightRows,
    kernel: Optional[KernelSpec],
    settings: Settings,
) -> TvFit:
    beta, se, cov, residuals, failed = _weighted_path(sample, weight_rows, settings)
    if failed.all():
        raise AllPointsFailed(f"every one of the {sample.n} kernel windows is rank deficient")
    if failed.any():
        log_event(
            "tv_failed_points",
            LOGGER,
            count=int(failed.sum()),
            first=int(np.flatnonzero(failed)[0]) + 1,
            last=int(np.flatnonzero(failed)[-1]) + 1,
        )
    for array in (beta, se, cov, residuals, failed):
        array.setflags(write=False)
    return TvFit(
        beta_path=beta,
        se_robust_path=se,
        cov_path=cov,
        residuals=residuals,
        failed=failed,
        names=sample.names,
        kernel=kernel,
    )


def fit_tv(sample: RegressionSample, kernel: KernelSpec, settings: Optional[Settings] = None) -> TvFit:
    """beta_t = (sum_j b_tj z_j z_j')^-1 sum_j b_tj z_j y_j for every t, with robust covariance.

    The covariance at t is S_t^-1 (sum_j b_tj^2 z_j z_j' u_j^2) S_t^-1. Windows whose
    Gram matrix is singular are flagged instead of aborting the path.
    """

    settings = settings or get_settings()
    return _finish(
        sample,
        lambda rows: kernel_weights(kernel, sample.n, rows, settings),
        kernel,
        settings,
    )


def fit_weighted_path(
    sample: RegressionSample,
    weights: np.ndarray,
    settings: Optional[Settings] = None,
) -> TvFit:
    """Time-varying estimator for an explicit n x n weight matrix (row t holds b_{n,t.})."""

    settings = settings or get_settings()
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (sample.n, sample.n):
        raise DimensionMismatch(f"weight matrix must be {sample.n}x{sample.n}, got {weights.shape}")
    return _finish(sample, lambda rows: weights[rows], None, settings)


def tv_confidence_band(
    fit: TvFit,
    k: int,
    level: float = 0.95,
    points: Optional[Sequence[int] | np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise band beta_kt +/- z se_kt; unrequested points are NaN."""

    if not 0 <= k < fit.p:
        raise DimensionMismatch(f"coefficient index {k} outside 0..{fit.p - 1}")
    z = critical_value(level)
    index = np.arange(fit.n) if points is None else np.asarray(points, dtype=int)
    bad = index[fit.failed[index]]
    if bad.size:
        raise FailedPoint(f"no estimate at t={', '.join(str(t + 1) for t in bad[:5])}")

    lower = np.full(fit.n, np.nan)
    upper = np.full(fit.n, np.nan)
    lower[index] = fit.beta_path[index, k] - z * fit.se_robust_path[index, k]
    upper[index] = fit.beta_path[index, k] + z * fit.se_robust_path[index, k]
    return lower, upper


def check_bandwidth(policy: BandwidthPolicy, n: int) -> BandwidthReport:
    """Advisory check of the rate condition H = o(n^{2 gamma / (2 gamma + 1)})."""

    bandwidth = bandwidth_from_exponent(n, policy.exponent)
    limit = 2.0 * policy.gamma / (2.0 * policy.gamma + 1.0)
    report = BandwidthReport(
        n=n,
        exponent=policy.exponent,
        gamma=policy.gamma,
        bandwidth=bandwidth,
        limit_exponent=limit,
        valid=policy.exponent < limit,
        variance_rate=bandwidth**-0.5,
        bias_rate=(bandwidth / n) ** policy.gamma,
    )
    if not report.valid:
        LOGGER.warning(
            "bandwidth H=n^%.3g=%.2f breaks H=o(n^{2γ/(2γ+1)}) with γ=%.3g (limit exponent %.4f); "
            "the smoothing bias may dominate",
            policy.exponent,
            bandwidth,
            policy.gamma,
            limit,
        )
    return report
