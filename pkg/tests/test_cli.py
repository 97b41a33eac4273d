"""End-to-end runs of the command-line entry point."""

from __future__ import annotations

import importlib.util
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from robustols.cli import configure_logging, main
from robustols.dgp import gen_model
from robustols.regression import fit_ols


def _write_csv(path: Path, frame: pd.DataFrame) -> Path:
    frame.to_csv(path, index=False)
    return path


def _manifest(path: Path, **config) -> Path:
    experiment = config.pop("experiment", "fixed")
    path.write_text(json.dumps({"name": "smoke", "experiment": experiment, "config": config}), encoding="utf-8")
    return path


def test_fit_command(small_csv: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "fit"
    assert main(["fit", str(small_csv), "--constant", "--out", str(out)]) == 0
    frame = pd.read_csv(out / "fit.csv")
    assert list(frame["k"]) == [1, 2]
    assert_allclose(frame["estimate"], [0.9, 0.9], atol=1e-12)
    assert_allclose(frame["se_robust"], np.sqrt([0.0226, 0.0206]), rtol=1e-10)
    assert "observed=4" in capsys.readouterr().out


def test_all_ones_mask_changes_nothing(small_csv: Path, tmp_path: Path) -> None:
    mask = tmp_path / "mask.txt"
    mask.write_text("1\n1\n1\n1\n", encoding="utf-8")
    assert main(["fit", str(small_csv), "--constant", "--out", str(tmp_path / "plain")]) == 0
    assert main(["fit", str(small_csv), "--constant", "--mask", str(mask), "--out", str(tmp_path / "masked")]) == 0
    assert (tmp_path / "plain" / "fit.csv").read_bytes() == (tmp_path / "masked" / "fit.csv").read_bytes()


def test_masked_fit_uses_observed_rows(small_csv: Path, tmp_path: Path) -> None:
    mask = tmp_path / "mask.json"
    mask.write_text("[3]", encoding="utf-8")
    assert main(["fit", str(small_csv), "--constant", "--mask", str(mask), "--out", str(tmp_path)]) == 0
    assert_allclose(pd.read_csv(tmp_path / "fit.csv")["estimate"], [1.0, 1.0], atol=1e-12)


def test_exact_fit_prints_degeneracy_note(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    path = _write_csv(tmp_path / "zero.csv", pd.DataFrame({"y": np.zeros(5), "x": np.arange(5.0)}))
    assert main(["fit", str(path), "--constant", "--out", str(tmp_path)]) == 0
    assert "exact fit" in capsys.readouterr().out
    assert (pd.read_csv(tmp_path / "fit.csv")["se_robust"] == 0).all()


def test_exit_codes(tmp_path: Path) -> None:
    x = np.arange(6.0)
    collinear = _write_csv(tmp_path / "collinear.csv", pd.DataFrame({"y": x, "x": x, "x2": 2 * x}))
    assert main(["fit", str(collinear), "--constant", "--out", str(tmp_path)]) == 3
    assert main(["fit", str(tmp_path / "absent.csv"), "--out", str(tmp_path)]) == 2
    assert main(["simulate", "model9", "--out", str(tmp_path)]) == 4
    broken = _manifest(tmp_path / "broken.json", model="model1", n=1, replications=1)
    assert main(["mc", str(broken), "--out", str(tmp_path)]) == 4


def test_tvfit_windowed_mean(tmp_path: Path) -> None:
    path = _write_csv(tmp_path / "window.csv", pd.DataFrame({"y": np.arange(1.0, 6.0)}))
    out = tmp_path / "tv"
    assert main(["tvfit", str(path), "--constant", "--kernel", "indicator", "--H", "1", "--out", str(out)]) == 0
    frame = pd.read_csv(out / "tv_path.csv")
    assert frame.loc[frame["t"] == 3, "beta"].item() == pytest.approx(3.0)


def test_tvfit_wide_indicator_matches_fit(tmp_path: Path, rng: np.random.Generator) -> None:
    n = 30
    x = rng.normal(size=n)
    path = _write_csv(tmp_path / "data.csv", pd.DataFrame({"y": 1.0 + 0.5 * x + rng.normal(size=n), "x": x}))
    assert main(["fit", str(path), "--constant", "--out", str(tmp_path / "fit")]) == 0
    assert main(["tvfit", str(path), "--constant", "--kernel", "indicator", "--H", str(n), "--out", str(tmp_path / "tv")]) == 0
    fixed = pd.read_csv(tmp_path / "fit" / "fit.csv")
    path_frame = pd.read_csv(tmp_path / "tv" / "tv_path.csv")
    for name, estimate in zip(fixed["coefficient"], fixed["estimate"]):
        assert_allclose(path_frame.loc[path_frame["coefficient"] == name, "beta"], estimate, rtol=1e-10)


def test_tvfit_warns_about_wide_bandwidth(tmp_path: Path, rng: np.random.Generator, capsys: pytest.CaptureFixture[str]) -> None:
    x = rng.normal(size=200)
    path = _write_csv(tmp_path / "data.csv", pd.DataFrame({"y": x + rng.normal(size=200), "x": x}))
    assert main(["tvfit", str(path), "--constant", "--h-exponent", "0.7", "--out", str(tmp_path)]) == 0
    assert "H=o(n^{2γ/(2γ+1)})" in capsys.readouterr().err


def test_mc_is_reproducible(tmp_path: Path) -> None:
    manifest = _manifest(tmp_path / "table.json", model="model1", n=120, replications=3, seed=5)
    assert main(["mc", str(manifest), "--out", str(tmp_path / "a")]) == 0
    assert main(["mc", str(manifest), "--out", str(tmp_path / "b")]) == 0
    for name in ("summary.csv", "manifest.json", "metrics.prom"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = pd.read_csv(tmp_path / "a" / "summary.csv")
    assert list(summary.columns) == ["Parameters", "Bias", "RMSE", "CP", "CP_st", "SD"]


def test_mc_single_replication_echoes_config(tmp_path: Path) -> None:
    manifest = _manifest(tmp_path / "one.json", model="ar2", n=100, replications=1)
    assert main(["mc", str(manifest), "--seed", "9", "--out", str(tmp_path)]) == 0
    echoed = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert echoed["config"]["seed"] == 9
    assert echoed["config"]["replications"] == 1


def test_mc_tv_and_power_outputs(tmp_path: Path) -> None:
    tv = _manifest(tmp_path / "tv.json", experiment="tv", model="model3", n=80, replications=2, bandwidths=[0.5], t_grid=[40])
    assert main(["mc", str(tv), "--out", str(tmp_path / "tv")]) == 0
    assert {"pointwise.csv", "rmse.csv", "grid.csv"} <= {path.name for path in (tmp_path / "tv").iterdir()}

    power = _manifest(tmp_path / "power.json", experiment="power", model="model1", n=100, replications=4, null_grid=[0.0, 0.2])
    assert main(["mc", str(power), "--out", str(tmp_path / "power")]) == 0
    assert list(pd.read_csv(tmp_path / "power" / "power.csv")["value"]) == [0.0, 0.2]


def test_simulate_command(tmp_path: Path) -> None:
    assert main(["simulate", "model1", "--n", "50", "--seed", "2", "--out", str(tmp_path)]) == 0
    data = pd.read_csv(tmp_path / "data.csv")
    assert list(data.columns) == ["y", "const", "z2", "z3"]
    assert len(pd.read_csv(tmp_path / "truth.csv")) == 50


def test_simulated_data_round_trips_through_fit(tmp_path: Path) -> None:
    assert main(["simulate", "model1", "--n", "120", "--seed", "6", "--out", str(tmp_path / "sim")]) == 0
    assert main(["fit", str(tmp_path / "sim" / "data.csv"), "--out", str(tmp_path / "fit")]) == 0

    frame = pd.read_csv(tmp_path / "fit" / "fit.csv")
    direct = fit_ols(gen_model("model1", 120, 6).sample)
    assert list(frame["coefficient"]) == list(direct.names)
    assert_allclose(frame["estimate"], direct.beta_hat, rtol=0, atol=1e-12)
    assert_allclose(frame["se_robust"], direct.se_robust, rtol=0, atol=1e-12)
    assert_allclose(frame["se_standard"], direct.se_standard, rtol=0, atol=1e-12)


def test_diagnose_command(tmp_path: Path, rng: np.random.Generator) -> None:
    path = _write_csv(tmp_path / "series.csv", pd.DataFrame({"value": rng.normal(size=300)}))
    assert main(["diagnose", str(path), "--max-lag", "5", "--subsample", "51:250", "--out", str(tmp_path)]) == 0
    assert list(pd.read_csv(tmp_path / "correlation.csv")["lag"]) == [1, 2, 3, 4, 5]


def test_empirical_command(tmp_path: Path, rng: np.random.Generator) -> None:
    prices = 100.0 * np.exp(np.cumsum(0.01 * rng.standard_normal(1201)))
    path = _write_csv(tmp_path / "prices.csv", pd.DataFrame({"date": np.arange(1201), "close": prices}))
    out = tmp_path / "empirical"
    assert main(["empirical", str(path), "--prices", "--max-lag", "10", "--garch-compare", "--out", str(out)]) == 0
    for name in ("mean_path.csv", "scale_path.csv", "residual_tests.csv", "garch_tests.csv"):
        assert (out / name).exists()
    assert len(pd.read_csv(out / "mean_path.csv")) == 1200

    short = _write_csv(tmp_path / "short.csv", pd.DataFrame({"r": rng.normal(size=600)}))
    assert main(["empirical", str(short), "--out", str(out)]) == 2


def test_reproduce_tables_script(tmp_path: Path) -> None:
    script = Path(__file__).resolve().parents[1] / "scripts" / "reproduce_tables.py"
    spec = importlib.util.spec_from_file_location("reproduce_tables", script)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    assert module.configure_logging is configure_logging

    manifests = tmp_path / "manifests"
    manifests.mkdir()
    _manifest(manifests / "tiny.json", model="model1", n=60, replications=2)
    assert module.main(["--manifests", str(manifests), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "tiny" / "summary.csv").exists()
    assert module.main(["--manifests", str(manifests), "--only", "table", "--out", str(tmp_path / "out")]) == 1
