"""Standard and robust lag-correlation tests."""

from __future__ import annotations

import numpy as np
import pytest

from robustols.diagnostics import correlation_frame, correlation_scan, robust_corr_test, sample_autocorr
from robustols.dgp import gen_garch
from robustols.exceptions import DimensionMismatch, NonFiniteInput, ZeroDenominator, ZeroVariance
from robustols.schemas import NoiseSpec

ALTERNATING = [1.0, -1.0, 1.0, -1.0]


def test_alternating_series() -> None:
    assert sample_autocorr(ALTERNATING, 1) == pytest.approx(-0.75)
    result = robust_corr_test(ALTERNATING, 1)
    assert result.rho == pytest.approx(-0.75)
    assert result.std_stat == pytest.approx(-1.5)
    assert result.robust_stat == pytest.approx(-np.sqrt(3.0))
    assert not result.std_reject and not result.robust_reject


def test_single_cross_product_has_unit_statistic() -> None:
    assert robust_corr_test([1.0, 0.0, -1.0], 2).robust_stat == pytest.approx(-1.0)
    with pytest.raises(ZeroDenominator):
        robust_corr_test([1.0, 0.0, -1.0], 1)


def test_degenerate_inputs() -> None:
    with pytest.raises(ZeroVariance):
        sample_autocorr([2.0, 2.0, 2.0, 2.0], 1)
    with pytest.raises(NonFiniteInput):
        robust_corr_test([1.0, np.nan, 2.0, 3.0], 1)
    with pytest.raises(DimensionMismatch):
        robust_corr_test([1.0, 2.0, 3.0], 3)
    with pytest.raises(DimensionMismatch):
        sample_autocorr(np.ones((2, 2)), 1)


def test_white_noise_has_small_autocorrelation(rng: np.random.Generator) -> None:
    assert abs(sample_autocorr(rng.standard_normal(100_000), 1)) < 0.01


def test_absolute_garch_values_are_correlated() -> None:
    series = np.abs(gen_garch(NoiseSpec(kind="garch11", omega=1.0, alpha=0.2, beta=0.7), 5000, 17))
    result = robust_corr_test(series, 1)
    assert result.rho > 0
    assert result.robust_reject


def test_scan_and_frame(rng: np.random.Generator) -> None:
    results = correlation_scan(rng.standard_normal(300), max_lag=5)
    assert [result.lag for result in results] == [1, 2, 3, 4, 5]
    frame = correlation_frame(results)
    assert list(frame.columns) == ["lag", "rho", "std_stat", "robust_stat", "std_reject", "robust_reject"]
    assert len(frame) == 5


@pytest.mark.parametrize("scale, shift", [(3.0, 0.0), (1e-4, 5.0), (-250.0, -1.0)])
def test_statistics_ignore_affine_rescaling(scale: float, shift: float, rng: np.random.Generator) -> None:
    series = rng.standard_normal(400)
    base = robust_corr_test(series, 2)
    moved = robust_corr_test(scale * series + shift, 2)
    assert moved.rho == pytest.approx(base.rho, rel=1e-9, abs=1e-9)
    assert moved.std_stat == pytest.approx(base.std_stat, rel=1e-9, abs=1e-8)
    assert moved.robust_stat == pytest.approx(base.robust_stat, rel=1e-9, abs=1e-8)
    assert moved.robust_reject == base.robust_reject
