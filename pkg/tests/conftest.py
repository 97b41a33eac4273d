"""Pytest fixtures for the estimators, simulators and the CLI."""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from robustols.config import Settings, override_settings
from robustols.regression import RegressionSample

SMALL_X = [0.0, 1.0, 2.0, 3.0]
SMALL_Y = [1.0, 2.0, 2.0, 4.0]


@pytest.fixture(name="settings")
def fixture_settings(tmp_path: Path) -> Settings:
    return override_settings(output_dir=tmp_path / "output", threads=1)


@pytest.fixture(name="small_sample")
def fixture_small_sample() -> RegressionSample:
    """y = (1, 2, 2, 4) on an intercept and x = (0, 1, 2, 3)."""

    Z = np.column_stack([np.ones(4), SMALL_X])
    return RegressionSample(y=np.array(SMALL_Y), Z=Z, names=("const", "x"))


@pytest.fixture(name="window_sample")
def fixture_window_sample() -> RegressionSample:
    """Intercept-only sample y = (1, 2, 3, 4, 5)."""

    return RegressionSample(y=np.arange(1.0, 6.0), Z=np.ones((5, 1)), names=("const",))


@pytest.fixture(name="small_csv")
def fixture_small_csv(tmp_path: Path) -> Path:
    path = tmp_path / "small.csv"
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["y", "x"])
        writer.writerows(zip(SMALL_Y, SMALL_X))
    return path


@pytest.fixture(name="rng")
def fixture_rng() -> np.random.Generator:
    return np.random.default_rng(20240517)
