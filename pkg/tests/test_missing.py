"""Estimation on partially observed samples."""

from __future__ import annotations

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from robustols.exceptions import DatasetError, DimensionMismatch, EmptyMask, InvalidSpec, NonFiniteInput
from robustols.missing import (
    MaskedSample,
    MissingMask,
    effective_kernel_mass,
    effective_mass_path,
    fit_ols_missing,
    fit_tv_missing,
    mask_from_spec,
)
from robustols.regression import RegressionSample, fit_ols
from robustols.schemas import KernelSpec, MaskSpec
from robustols.timevarying import fit_tv


def _sample(rng: np.random.Generator, n: int = 40) -> RegressionSample:
    Z = np.column_stack([np.ones(n), rng.normal(size=n), rng.uniform(1.0, 2.0, size=n)])
    y = Z @ np.array([0.5, 0.4, 0.3]) + rng.normal(size=n) * Z[:, 2]
    return RegressionSample(y=y, Z=Z)


def test_full_mask_matches_plain_fit(rng: np.random.Generator) -> None:
    sample = _sample(rng)
    plain = fit_ols(sample)
    masked = fit_ols_missing(sample, MissingMask.full(sample.n))
    assert_array_equal(masked.beta_hat, plain.beta_hat)
    assert_array_equal(masked.cov_standard, plain.cov_standard)


def _random_mask(seed: int) -> tuple[RegressionSample, MissingMask]:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 80))
    sample = _sample(rng, n=n)
    if seed % 2:
        start = int(rng.integers(1, n // 2))
        mask = MissingMask.block(n, start, start + int(rng.integers(0, n // 3)))
    else:
        mask = MissingMask.random(n, int(rng.integers(0, n - 10)), rng)
    return sample, mask


@pytest.mark.parametrize("seed", range(200))
def test_zerofill_and_subsample_agree(seed: int) -> None:
    sample, mask = _random_mask(seed)
    filled = fit_ols_missing(sample, mask, "zerofill")
    compact = fit_ols_missing(sample, mask, "subsample")

    assert filled.nobs == compact.nobs == mask.observed_count
    assert filled.residuals.shape == (sample.n,)
    assert_array_equal(filled.residuals[~mask.tau], 0.0)
    assert_allclose(filled.beta_hat, compact.beta_hat, rtol=0, atol=1e-12)
    assert_allclose(filled.cov_robust, compact.cov_robust, rtol=0, atol=1e-12)
    assert_allclose(filled.cov_standard, compact.cov_standard, rtol=0, atol=1e-12)
    assert filled.sigma2 == pytest.approx(compact.sigma2, rel=0, abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_unobserved_rows_are_inert(seed: int) -> None:
    sample, mask = _random_mask(seed)
    rng = np.random.default_rng(seed + 1000)
    extended = RegressionSample(
        y=np.append(sample.y, rng.normal(scale=100.0)),
        Z=np.vstack([sample.Z, rng.normal(scale=100.0, size=sample.p)]),
    )
    extended_mask = MissingMask(np.append(mask.tau, False))

    base = fit_ols_missing(sample, mask)
    grown = fit_ols_missing(extended, extended_mask)
    assert grown.nobs == base.nobs
    assert grown.residuals[-1] == 0.0
    assert_allclose(grown.beta_hat, base.beta_hat, rtol=0, atol=1e-12)
    assert_allclose(grown.cov_robust, base.cov_robust, rtol=0, atol=1e-12)
    assert_allclose(grown.cov_standard, base.cov_standard, rtol=0, atol=1e-12)


@pytest.mark.parametrize("kernel", [KernelSpec(bandwidth=4.0), KernelSpec(kind="indicator", bandwidth=3.0)])
def test_effective_mass_is_monotone_in_the_mask(kernel: KernelSpec, rng: np.random.Generator) -> None:
    larger = MissingMask.random(60, 15, rng)
    smaller = larger & MissingMask.block(60, 20, 35)
    full = effective_mass_path(MissingMask.full(60), kernel)
    outer = effective_mass_path(larger, kernel)
    inner = effective_mass_path(smaller, kernel)

    assert (inner <= outer + 1e-12).all()
    assert (outer <= full + 1e-12).all()
    assert inner.sum() < outer.sum()


def test_small_fixture_with_third_row_missing(small_sample: RegressionSample) -> None:
    mask = MissingMask.from_missing_indices(4, [3])
    for form in ("zerofill", "subsample"):
        fit = fit_ols_missing(small_sample, mask, form)
        assert_allclose(fit.beta_hat, [1.0, 1.0], atol=1e-12)
        assert_allclose(fit.residuals, 0.0, atol=1e-12)
        assert_allclose(fit.cov_robust, 0.0, atol=1e-20)


def test_too_few_observations(small_sample: RegressionSample) -> None:
    with pytest.raises(EmptyMask):
        fit_ols_missing(small_sample, MissingMask(np.array([1, 0, 0, 0])))
    with pytest.raises(DimensionMismatch):
        fit_ols_missing(small_sample, MissingMask.full(5))


def test_mask_validation() -> None:
    with pytest.raises(EmptyMask):
        MissingMask(np.zeros(5))
    with pytest.raises(DatasetError):
        MissingMask(np.array([1, 2, 0]))
    with pytest.raises(DimensionMismatch):
        MissingMask(np.ones((2, 2)))
    with pytest.raises(DimensionMismatch):
        MissingMask.block(10, 8, 12)
    with pytest.raises(DimensionMismatch):
        MissingMask.from_missing_indices(5, [6])


def test_mask_builders(rng: np.random.Generator) -> None:
    block = MissingMask.block(10, 3, 5)
    assert_array_equal(np.flatnonzero(~block.tau), [2, 3, 4])
    assert block.observed_count == 7 and not block.complete

    random = MissingMask.random(100, 30, rng)
    assert random.observed_count == 70

    from_data = MissingMask.from_data(np.array([1.0, np.nan, 2.0]), np.array([[1.0], [1.0], [np.inf]]))
    assert_array_equal(from_data.tau, [True, False, False])

    combined = MissingMask.block(6, 1, 2) & MissingMask.from_missing_indices(6, [0], one_based=False)
    assert_array_equal(combined.observed_index, [2, 3, 4, 5])


def test_masked_sample_build() -> None:
    mask = MissingMask.from_missing_indices(3, [2])
    masked = MaskedSample.build(np.array([1.0, np.nan, 3.0]), np.array([2.0, np.nan, 4.0]), mask)
    assert_array_equal(masked.sample.y, [1.0, 0.0, 3.0])
    assert masked.observed.n == 2
    with pytest.raises(NonFiniteInput):
        MaskedSample.build(np.array([np.nan, 1.0, 3.0]), np.ones(3), mask)


def test_effective_kernel_mass() -> None:
    indicator = KernelSpec(kind="indicator", bandwidth=3.0)
    full = MissingMask.full(20)
    assert effective_kernel_mass(full, indicator, 0) == 4.0
    assert effective_kernel_mass(full, indicator, 10) == 7.0

    gap = MissingMask.block(1500, 650, 850)
    assert effective_kernel_mass(gap, KernelSpec(kind="indicator", bandwidth=39.0), 749) == 0.0

    path = effective_mass_path(full, indicator)
    assert path[0] == 4.0 and path[10] == 7.0 and path[19] == 4.0


def test_full_mask_matches_tv_fit(rng: np.random.Generator) -> None:
    sample = _sample(rng)
    kernel = KernelSpec(bandwidth=5.0)
    assert_array_equal(fit_tv_missing(sample, MissingMask.full(sample.n), kernel).beta_path, fit_tv(sample, kernel).beta_path)


def test_observed_window_matches_local_subsample(rng: np.random.Generator) -> None:
    sample = _sample(rng, n=30)
    mask = MissingMask.block(30, 25, 28)
    fit = fit_tv_missing(sample, mask, KernelSpec(kind="indicator", bandwidth=2.0))
    local = fit_ols(sample.rows(np.arange(3, 8)))
    assert_allclose(fit.beta_path[5], local.beta_hat, rtol=1e-9, atol=1e-10)


def test_empty_windows_fail_and_warn(rng: np.random.Generator, caplog: pytest.LogCaptureFixture) -> None:
    sample = _sample(rng)
    mask = MissingMask.block(40, 10, 20)
    with caplog.at_level(logging.WARNING, logger="robustols.missing"):
        fit = fit_tv_missing(sample, mask, KernelSpec(kind="indicator", bandwidth=2.0))
    assert fit.failed[14]
    assert not fit.failed[0] and not fit.failed[39]
    assert "effective kernel mass" in caplog.text


def test_mask_from_spec(rng: np.random.Generator) -> None:
    assert mask_from_spec(MaskSpec(), 10, rng) is None
    block = mask_from_spec(MaskSpec(kind="block", start=2, stop=4), 10, rng)
    assert block is not None and block.observed_count == 7
    random = mask_from_spec(MaskSpec(kind="random", count=3), 10, rng)
    assert random is not None and random.observed_count == 7


def test_mask_from_spec_rejects_incomplete_specs(rng: np.random.Generator) -> None:
    with pytest.raises(InvalidSpec):
        mask_from_spec(MaskSpec.model_construct(kind="block", start=2, stop=None, count=None), 10, rng)
    with pytest.raises(InvalidSpec):
        mask_from_spec(MaskSpec.model_construct(kind="random", start=None, stop=None, count=None), 10, rng)
