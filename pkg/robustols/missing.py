"""Estimation on partially observed samples.

A mask ``tau`` marks the observed pairs (y_t, z_t). Unobserved rows are
replaced by zeros, which makes them inert in every sum the estimators form,
so the zero-filled full-length sample and the compacted subsample give the
same fixed-parameter fit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .config import Settings, get_settings
from .exceptions import DatasetError, DimensionMismatch, EmptyMask, InvalidSpec, NonFiniteInput
from .monitoring import log_event
from .regression import FixedFit, RegressionSample, fit_design, fit_ols
from .schemas import KernelSpec, MaskSpec
from .timevarying import TvFit, fit_tv, kernel_weights

LOGGER = logging.getLogger(__name__)

Form = Literal["zerofill", "subsample"]


@dataclass(frozen=True)
class MissingMask:
    """Binary observation indicator; ``tau[t]`` is True when (y_t, z_t) is observed."""

    tau: np.ndarray

    def __post_init__(self) -> None:
        raw = np.asarray(self.tau)
        if raw.ndim != 1:
            raise DimensionMismatch(f"mask must be a vector, got shape {raw.shape}")
        if raw.dtype != bool and not np.isin(raw, (0, 1)).all():
            raise DatasetError("mask entries must be 0 or 1")
        tau = raw.astype(bool)
        if not tau.any():
            raise EmptyMask("mask leaves no observed data point")
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)

    @property
    def n(self) -> int:
        return int(self.tau.shape[0])

    @property
    def observed_count(self) -> int:
        return int(self.tau.sum())

    @property
    def observed_index(self) -> np.ndarray:
        return np.flatnonzero(self.tau)

    @property
    def complete(self) -> bool:
        return bool(self.tau.all())

    def __and__(self, other: "MissingMask") -> "MissingMask":
        if other.n != self.n:
            raise DimensionMismatch(f"cannot combine masks of length {self.n} and {other.n}")
        return MissingMask(self.tau & other.tau)

    @classmethod
    def full(cls, n: int) -> "MissingMask":
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def block(cls, n: int, start: int, stop: int) -> "MissingMask":
        """Contiguous gap t = start..stop, 1-based and inclusive."""

        if not 1 <= start <= stop <= n:
            raise DimensionMismatch(f"block [{start}, {stop}] does not fit in 1..{n}")
        tau = np.ones(n, dtype=bool)
        tau[start - 1 : stop] = False
        return cls(tau)

    @classmethod
    def random(cls, n: int, count: int, rng: np.random.Generator) -> "MissingMask":
        """``count`` single observations missing at uniformly drawn times."""

        if not 0 <= count < n:
            raise EmptyMask(f"cannot remove {count} of {n} observations")
        tau = np.ones(n, dtype=bool)
        tau[rng.choice(n, size=count, replace=False)] = False
        return cls(tau)

    @classmethod
    def from_missing_indices(cls, n: int, indices: Sequence[int], one_based: bool = True) -> "MissingMask":
        offset = 1 if one_based else 0
        index = np.asarray(list(indices), dtype=int) - offset
        if index.size and (index.min() < 0 or index.max() >= n):
            raise DimensionMismatch(f"missing index outside the sample range of {n} points")
        tau = np.ones(n, dtype=bool)
        tau[index] = False
        return cls(tau)

    @classmethod
    def from_data(cls, y: np.ndarray, Z: np.ndarray) -> "MissingMask":
        """tau_t = 0 wherever y_t or any entry of z_t is not finite."""

        y = np.asarray(y, dtype=float)
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        return cls(np.isfinite(y) & np.isfinite(Z).all(axis=1))


@dataclass(frozen=True)
class MaskedSample:
    """Zero-filled pairs (tau_t y_t, tau_t z_t) together with their mask."""

    sample: RegressionSample
    mask: MissingMask

    def __post_init__(self) -> None:
        if self.mask.n != self.sample.n:
            raise DimensionMismatch(f"mask has {self.mask.n} entries for {self.sample.n} observations")
        if (self.sample.y[~self.mask.tau] != 0).any() or (self.sample.Z[~self.mask.tau] != 0).any():
            raise DimensionMismatch("unobserved rows of a masked sample must be zero")

    @classmethod
    def build(
        cls,
        y: np.ndarray,
        Z: np.ndarray,
        mask: MissingMask,
        names: tuple[str, ...] = (),
    ) -> "MaskedSample":
        """Zero-fill raw arrays; unobserved rows may hold NaN, observed rows may not."""

        y = np.array(y, dtype=float)
        Z = np.array(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        if y.shape[0] != mask.n or Z.shape[0] != mask.n:
            raise DimensionMismatch(f"mask has {mask.n} entries for {y.shape[0]} observations")
        observed = mask.tau
        if not (np.isfinite(y[observed]).all() and np.isfinite(Z[observed]).all()):
            raise NonFiniteInput("observed rows contain NaN or infinite values")
        y[~observed] = 0.0
        Z[~observed] = 0.0
        return cls(RegressionSample(y=y, Z=Z, names=names), mask)

    @property
    def observed(self) -> RegressionSample:
        return self.sample.rows(self.mask.observed_index)


def _zero_filled(sample: RegressionSample, mask: MissingMask) -> RegressionSample:
    if mask.n != sample.n:
        raise DimensionMismatch(f"mask has {mask.n} entries for {sample.n} observations")
    tau = mask.tau.astype(float)
    return RegressionSample(y=sample.y * tau, Z=sample.Z * tau[:, None], names=sample.names)


def fit_ols_missing(
    sample: RegressionSample,
    mask: MissingMask,
    form: Form = "zerofill",
    settings: Optional[Settings] = None,
) -> FixedFit:
    """OLS from the observed rows only.

    ``zerofill`` keeps all n rows (residuals of unobserved rows are 0);
    ``subsample`` fits the N observed rows directly. The residual variance of
    the standard covariance is divided by N in both forms.
    """

    filled = _zero_filled(sample, mask)
    if mask.observed_count < sample.p:
        raise EmptyMask(f"{mask.observed_count} observed points cannot identify {sample.p} coefficients")
    if form == "subsample":
        return fit_ols(sample.rows(mask.observed_index), settings)
    return fit_design(filled.Z, filled.y, nobs=mask.observed_count, names=sample.names, settings=settings)


def effective_kernel_mass(mask: MissingMask, kernel: KernelSpec, t: int) -> float:
    """N_t = sum_j tau_j b_{n,tj} for a 0-based time point t."""

    weights = kernel_weights(kernel, mask.n, [t])[0]
    return float(weights @ mask.tau.astype(float))


def effective_mass_path(
    mask: MissingMask,
    kernel: KernelSpec,
    settings: Optional[Settings] = None,
) -> np.ndarray:
    settings = settings or get_settings()
    tau = mask.tau.astype(float)
    mass = np.empty(mask.n)
    for start in range(0, mask.n, settings.tv_block_size):
        rows = np.arange(start, min(mask.n, start + settings.tv_block_size))
        mass[rows] = kernel_weights(kernel, mask.n, rows, settings) @ tau
    return mass


def fit_tv_missing(
    sample: RegressionSample,
    mask: MissingMask,
    kernel: KernelSpec,
    settings: Optional[Settings] = None,
) -> TvFit:
    """Time-varying fit of the zero-filled sample; windows without observed data are flagged."""

    settings = settings or get_settings()
    filled = _zero_filled(sample, mask)
    if not mask.complete:
        mass = effective_mass_path(mask, kernel, settings)
        thin = mass < settings.mass_warning_ratio * kernel.bandwidth
        if thin.any():
            LOGGER.warning(
                "effective kernel mass N_t below %.3g*H at %d of %d time points",
                settings.mass_warning_ratio,
                int(thin.sum()),
                mask.n,
            )
            log_event(
                "low_kernel_mass",
                LOGGER,
                points=int(thin.sum()),
                first=int(np.flatnonzero(thin)[0]) + 1,
                min_mass=float(mass.min()),
            )
    return fit_tv(filled, kernel, settings)


def mask_from_spec(spec: MaskSpec, n: int, rng: np.random.Generator) -> Optional[MissingMask]:
    """Materialise a configured mask; ``none`` gives None."""

    if spec.kind == "block":
        if spec.start is None or spec.stop is None:
            raise InvalidSpec("block mask needs both start and stop")
        return MissingMask.block(n, spec.start, spec.stop)
    if spec.kind == "random":
        if spec.count is None:
            raise InvalidSpec("random mask needs a count")
        return MissingMask.random(n, spec.count, rng)
    return None
