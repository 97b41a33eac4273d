"""Replication engine for coverage, bias, RMSE, size and power experiments.

Replication r draws all randomness from ``SeedRecord(config.seed, r)``;
results are reduced in replication order, so the outcome does not depend on
the number of workers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .config import Settings, get_settings
from .dgp import SeedRecord, gen_model, resolve_model, validate
from .exceptions import InputError, InvalidSpec, NumericalError, ReplicationFailure
from .missing import fit_ols_missing, fit_tv_missing, mask_from_spec
from .monitoring import RunMetrics, log_event
from .regression import critical_value, fit_ols
from .schemas import CoefficientSummary, KernelSpec, McConfig, McSummary, ModelSpec, PowerCurve
from .timevarying import bandwidth_from_exponent, fit_tv

LOGGER = logging.getLogger(__name__)


def parameter_names(p: int) -> list[str]:
    return [f"beta{k + 1}" for k in range(p)]


def summarize_estimates(
    estimates: np.ndarray,
    truth: np.ndarray,
    se_robust: np.ndarray,
    se_standard: np.ndarray,
    level: float = 0.95,
    names: Optional[Sequence[str]] = None,
    failures: int = 0,
    config: Optional[McConfig] = None,
) -> McSummary:
    """Bias, RMSE, SD and both coverage rates from R x p replication arrays.

    SD uses the R - 1 denominator and RMSE the R denominator. An interval
    with zero width covers only an estimate equal to the truth.
    """

    estimates = np.atleast_2d(np.asarray(estimates, dtype=float))
    truth = np.broadcast_to(np.asarray(truth, dtype=float), estimates.shape)
    replications, p = estimates.shape
    z = critical_value(level)

    errors = estimates - truth
    bias = errors.mean(axis=0)
    rmse = np.sqrt((errors**2).mean(axis=0))
    sd = estimates.std(axis=0, ddof=1) if replications > 1 else np.zeros(p)
    cp = 100.0 * (np.abs(errors) <= z * np.asarray(se_robust)).mean(axis=0)
    cp_st = 100.0 * (np.abs(errors) <= z * np.asarray(se_standard)).mean(axis=0)

    labels = list(names) if names is not None else parameter_names(p)
    rows = [
        CoefficientSummary(
            parameter=labels[k],
            bias=float(bias[k]),
            rmse=float(rmse[k]),
            cp=float(cp[k]),
            cp_st=float(cp_st[k]),
            sd=float(sd[k]),
        )
        for k in range(p)
    ]
    return McSummary(rows=rows, replications=replications, failures=failures, config=config)


def _threads(config: McConfig, settings: Settings) -> int:
    return config.threads or settings.threads


def _check_failures(failures: int, replications: int, settings: Settings, experiment: str) -> None:
    if failures:
        log_event("replications_excluded", LOGGER, experiment=experiment, failures=failures, replications=replications)
    if failures >= replications:
        raise ReplicationFailure(f"all {replications} replications failed; nothing to summarise")
    if failures > settings.max_failure_rate * replications:
        raise ReplicationFailure(
            f"{failures} of {replications} replications failed "
            f"(limit {settings.max_failure_rate:.1%}); results would not be representative"
        )


def _fixed_replication(
    spec: ModelSpec,
    config: McConfig,
    replication: int,
    settings: Settings,
) -> Optional[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    seeds = SeedRecord(config.seed, replication)
    generated = gen_model(spec, config.n, seeds, settings)
    mask = mask_from_spec(config.mask, config.n, seeds.generator("mask"))
    try:
        if mask is None:
            fit = fit_ols(generated.sample, settings)
        else:
            fit = fit_ols_missing(generated.sample, mask, config.form, settings)
    except (NumericalError, InputError) as exc:
        LOGGER.debug("replication %d excluded: %s", replication, exc)
        return None
    return fit.beta_hat, fit.se_robust, fit.se_standard, generated.fixed_beta


def run_mc_fixed(
    config: McConfig,
    settings: Optional[Settings] = None,
    metrics: Optional[RunMetrics] = None,
) -> McSummary:
    """Fixed-parameter experiment: one OLS fit per replication, scored against the true beta."""

    settings = settings or get_settings()
    spec = resolve_model(config.model)
    validate(spec)
    if spec.time_varying:
        raise InvalidSpec(f"model {spec.catalog_id or 'custom'} has time-varying coefficients; use a tv experiment")

    results = Parallel(n_jobs=_threads(config, settings))(
        delayed(_fixed_replication)(spec, config, r, settings) for r in range(config.replications)
    )
    kept = [result for result in results if result is not None]
    failures = config.replications - len(kept)
    _check_failures(failures, config.replications, settings, "fixed")

    estimates, se_robust, se_standard, truth = (np.vstack(column) for column in zip(*kept))
    summary = summarize_estimates(
        estimates,
        truth,
        se_robust,
        se_standard,
        level=config.level,
        failures=failures,
        config=config,
    )
    if metrics is not None:
        metrics.record(config.replications, failures)
    log_event(
        "mc_fixed_finished",
        LOGGER,
        model=spec.catalog_id or "custom",
        n=config.n,
        replications=config.replications,
        failures=failures,
    )
    return summary


@dataclass(frozen=True)
class TvMcResult:
    """Pointwise scores of a time-varying experiment, indexed [bandwidth, t, coefficient]."""

    exponents: tuple[float, ...]
    bandwidths: tuple[float, ...]
    names: tuple[str, ...]
    coverage: np.ndarray
    bias: np.ndarray
    rmse: np.ndarray
    failed_points: np.ndarray
    replications: int
    failures: int
    config: McConfig

    @property
    def n(self) -> int:
        return int(self.coverage.shape[1])

    def coverage_frame(self, points: Optional[Iterable[int]] = None) -> pd.DataFrame:
        """Long format (h, H, t, k, coverage, bias, rmse, failed) with 1-based t and k."""

        index = np.arange(self.n) if points is None else np.asarray([t - 1 for t in points], dtype=int)
        frames = []
        for b, (exponent, bandwidth) in enumerate(zip(self.exponents, self.bandwidths)):
            for k in range(len(self.names)):
                frames.append(
                    pd.DataFrame(
                        {
                            "h": exponent,
                            "H": bandwidth,
                            "t": index + 1,
                            "k": k + 1,
                            "coverage": self.coverage[b, index, k],
                            "bias": self.bias[b, index, k],
                            "rmse": self.rmse[b, index, k],
                            "failed": self.failed_points[b, index],
                        }
                    )
                )
        return pd.concat(frames, ignore_index=True)

    def grid_frame(self) -> pd.DataFrame:
        """Coverage at the configured t grid (all points when none is configured)."""

        return self.coverage_frame(self.config.t_grid)

    def rmse_summary(self) -> pd.DataFrame:
        """Mean RMSE over interior points (more than H away from both ends) per bandwidth."""

        t = np.arange(1, self.n + 1)
        rows = []
        for b, (exponent, bandwidth) in enumerate(zip(self.exponents, self.bandwidths)):
            interior = np.minimum(t, self.n + 1 - t) > bandwidth
            if not interior.any():
                interior = np.ones(self.n, dtype=bool)
            row: dict[str, float] = {"h": exponent, "H": bandwidth}
            for k, name in enumerate(self.names):
                row[name] = float(np.nanmean(self.rmse[b, interior, k]))
            rows.append(row)
        return pd.DataFrame(rows)


def _tv_replication(
    spec: ModelSpec,
    config: McConfig,
    replication: int,
    kernels: Sequence[KernelSpec],
    settings: Settings,
) -> Optional[list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]]:
    seeds = SeedRecord(config.seed, replication)
    generated = gen_model(spec, config.n, seeds, settings)
    mask = mask_from_spec(config.mask, config.n, seeds.generator("mask"))
    z = critical_value(config.level)
    scored = []
    try:
        for kernel in kernels:
            if mask is None:
                fit = fit_tv(generated.sample, kernel, settings)
            else:
                fit = fit_tv_missing(generated.sample, mask, kernel, settings)
            # stochastic coefficients are scored against this replication's realised path
            errors = fit.beta_path - generated.beta_path
            covered = np.abs(errors) <= z * fit.se_robust_path
            scored.append((np.nan_to_num(errors), covered & ~fit.failed[:, None], fit.failed.copy(), errors**2))
    except (NumericalError, InputError) as exc:
        LOGGER.debug("replication %d excluded: %s", replication, exc)
        return None
    return scored


def run_mc_tv(
    config: McConfig,
    settings: Optional[Settings] = None,
    metrics: Optional[RunMetrics] = None,
) -> TvMcResult:
    """Pointwise coverage, bias and RMSE of the time-varying estimator for every bandwidth n^h."""

    settings = settings or get_settings()
    spec = resolve_model(config.model)
    validate(spec)
    n, p = config.n, spec.p
    exponents = tuple(config.bandwidths)
    bandwidths = tuple(bandwidth_from_exponent(n, h) for h in exponents)
    kernels = [KernelSpec(kind=config.kernel, bandwidth=bandwidth) for bandwidth in bandwidths]

    shape = (len(kernels), n, p)
    error_sum = np.zeros(shape)
    squared_sum = np.zeros(shape)
    covered = np.zeros(shape)
    failed = np.zeros(shape[:2], dtype=int)
    failures = 0

    results = Parallel(n_jobs=_threads(config, settings), return_as="generator")(
        delayed(_tv_replication)(spec, config, r, kernels, settings) for r in range(config.replications)
    )
    for result in results:
        if result is None:
            failures += 1
            continue
        for b, (errors, hits, flags, squared) in enumerate(result):
            error_sum[b] += errors
            squared_sum[b] += np.where(flags[:, None], 0.0, squared)
            covered[b] += hits
            failed[b] += flags

    _check_failures(failures, config.replications, settings, "tv")
    valid = (config.replications - failures - failed)[:, :, None].astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        coverage = np.where(valid > 0, 100.0 * covered / valid, np.nan)
        bias = np.where(valid > 0, error_sum / valid, np.nan)
        rmse = np.where(valid > 0, np.sqrt(squared_sum / valid), np.nan)

    if metrics is not None:
        metrics.record(config.replications, failures, int(failed.sum()))
    log_event(
        "mc_tv_finished",
        LOGGER,
        model=spec.catalog_id or "custom",
        n=n,
        replications=config.replications,
        failures=failures,
        failed_points=int(failed.sum()),
    )
    return TvMcResult(
        exponents=exponents,
        bandwidths=bandwidths,
        names=tuple(parameter_names(p)),
        coverage=coverage,
        bias=bias,
        rmse=rmse,
        failed_points=failed,
        replications=config.replications,
        failures=failures,
        config=config,
    )


def _power_replication(
    specs: Sequence[ModelSpec],
    config: McConfig,
    replication: int,
    settings: Settings,
) -> Optional[tuple[np.ndarray, np.ndarray]]:
    seeds = SeedRecord(config.seed, replication)
    k = config.tested_coefficient
    robust, standard = [], []
    try:
        for spec in specs:
            # identical seeds at every grid point: common random numbers
            generated = gen_model(spec, config.n, seeds, settings)
            mask = mask_from_spec(config.mask, config.n, seeds.generator("mask"))
            if mask is None:
                fit = fit_ols(generated.sample, settings)
            else:
                fit = fit_ols_missing(generated.sample, mask, config.form, settings)
            robust.append(fit.t_stats("robust", config.null_value)[k])
            standard.append(fit.t_stats("standard", config.null_value)[k])
    except (NumericalError, InputError) as exc:
        LOGGER.debug("replication %d excluded: %s", replication, exc)
        return None
    return np.array(robust), np.array(standard)


def size_power_curve(
    config: McConfig,
    settings: Optional[Settings] = None,
    metrics: Optional[RunMetrics] = None,
) -> PowerCurve:
    """Rejection rates of H0: beta_k = null_value while the true beta_k runs over ``null_grid``.

    Adjusted power uses the empirical ``level`` quantile of |t| for the standard
    test at the true-null grid point in place of the normal critical value.
    """

    settings = settings or get_settings()
    spec = resolve_model(config.model)
    validate(spec)
    k = config.tested_coefficient
    if not 0 <= k < spec.p:
        raise InvalidSpec(f"tested coefficient {k} outside 0..{spec.p - 1}")
    grid = list(config.null_grid)
    if config.null_value not in grid:
        raise InvalidSpec(f"null grid {grid} must contain the null value {config.null_value}")
    specs = [spec.with_constant_beta(k, value) for value in grid]
    null_index = grid.index(config.null_value)

    results = Parallel(n_jobs=_threads(config, settings))(
        delayed(_power_replication)(specs, config, r, settings) for r in range(config.replications)
    )
    kept = [result for result in results if result is not None]
    failures = config.replications - len(kept)
    _check_failures(failures, config.replications, settings, "power")

    robust = np.abs(np.vstack([result[0] for result in kept]))
    standard = np.abs(np.vstack([result[1] for result in kept]))
    z = critical_value(config.level)
    empirical = float(np.quantile(standard[:, null_index], config.level, method="inverted_cdf"))

    if metrics is not None:
        metrics.record(config.replications, failures)
    log_event(
        "power_curve_finished",
        LOGGER,
        model=spec.catalog_id or "custom",
        n=config.n,
        points=len(grid),
        empirical_critical_value=empirical,
    )
    return PowerCurve(
        grid=grid,
        robust=(100.0 * (robust > z).mean(axis=0)).tolist(),
        standard=(100.0 * (standard > z).mean(axis=0)).tolist(),
        adjusted=(100.0 * (standard > empirical).mean(axis=0)).tolist(),
        critical_value=empirical,
        replications=config.replications,
        failures=failures,
        config=config,
    )
