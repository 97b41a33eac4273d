"""Command-line entry point: ``python -m robustols <command> ...``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .config import Settings, get_settings
from .datasets import (
    format_table,
    load_manifest,
    read_mask_file,
    read_regression_csv,
    read_series_csv,
    save_manifest,
    write_frame,
)
from .dgp import CATALOG_IDS, gen_model
from .diagnostics import correlation_frame, correlation_scan
from .empirical import prices_to_returns, run_empirical
from .exceptions import ConfigError, RobustOlsError
from .missing import MaskedSample, MissingMask, fit_ols_missing, fit_tv_missing
from .monitoring import RunMetrics
from .montecarlo import run_mc_fixed, run_mc_tv, size_power_curve
from .regression import RegressionSample, fit_ols
from .schemas import BandwidthPolicy, KernelSpec, McConfig
from .timevarying import check_bandwidth, fit_tv

LOGGER = logging.getLogger("robustols")

Handler = Callable[[argparse.Namespace, Settings], int]


def _subsample(text: str) -> tuple[int, int]:
    try:
        start, stop = (int(part) for part in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected START:STOP, got {text!r}") from exc
    if not 1 <= start < stop:
        raise argparse.ArgumentTypeError(f"subsample {text!r} must satisfy 1 <= START < STOP")
    return start, stop


def parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="Output directory (defaults to settings output_dir)")
    common.add_argument("--level", type=float, default=None, help="Confidence level (default 0.95)")
    common.add_argument("--seed", type=int, default=None, help="Master seed for simulated quantities")
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Increase log verbosity (-v for INFO, -vv for DEBUG)",
    )

    parser = argparse.ArgumentParser(
        prog="robustols",
        description="Robust OLS, time-varying OLS and Monte Carlo experiments",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", parents=[common], help="Fixed-parameter OLS with robust and standard errors")
    fit.add_argument("input", type=Path, help="CSV with columns y, z1..zp and an optional mask column")
    fit.add_argument("--mask", type=Path, default=None, help="0/1 per line or a JSON list of missing 1-based indices")
    fit.add_argument("--constant", action="store_true", help="Prepend an intercept column")
    fit.add_argument("--form", choices=("zerofill", "subsample"), default="zerofill")
    fit.set_defaults(handler=cmd_fit)

    tvfit = commands.add_parser("tvfit", parents=[common], help="Kernel-weighted time-varying OLS")
    tvfit.add_argument("input", type=Path)
    tvfit.add_argument("--mask", type=Path, default=None)
    tvfit.add_argument("--constant", action="store_true")
    tvfit.add_argument("--kernel", choices=("gaussian", "indicator"), default="gaussian")
    bandwidth = tvfit.add_mutually_exclusive_group()
    bandwidth.add_argument("--h-exponent", type=float, default=None, help="Bandwidth H = n^h")
    bandwidth.add_argument("--H", dest="bandwidth", type=float, default=None, help="Bandwidth H itself")
    tvfit.add_argument("--gamma", type=float, default=1.0, help="Assumed smoothness of the coefficient paths")
    tvfit.set_defaults(handler=cmd_tvfit)

    mc = commands.add_parser("mc", parents=[common], help="Run a Monte Carlo experiment manifest")
    mc.add_argument("manifest", type=Path)
    mc.add_argument("--threads", type=int, default=None)
    mc.set_defaults(handler=cmd_mc)

    simulate = commands.add_parser("simulate", parents=[common], help="Dump one simulated sample with its latent truth")
    simulate.add_argument("model", help=f"Catalog id: {', '.join(CATALOG_IDS)}")
    simulate.add_argument("--n", type=int, default=1500)
    simulate.set_defaults(handler=cmd_simulate)

    diagnose = commands.add_parser("diagnose", parents=[common], help="Lag-by-lag correlation tests on a series")
    diagnose.add_argument("input", type=Path)
    diagnose.add_argument("--column", default=None)
    diagnose.add_argument("--max-lag", type=int, default=20)
    diagnose.add_argument("--subsample", type=_subsample, default=None, help="1-based START:STOP")
    diagnose.set_defaults(handler=cmd_diagnose)

    empirical = commands.add_parser("empirical", parents=[common], help="Two-stage time-varying return analysis")
    empirical.add_argument("input", type=Path)
    empirical.add_argument("--column", default=None)
    empirical.add_argument("--prices", action="store_true", help="Input holds prices; convert to log returns")
    empirical.add_argument("--h-exponent", type=float, default=None)
    empirical.add_argument("--subsample", type=_subsample, default=(500, 1000))
    empirical.add_argument("--max-lag", type=int, default=20)
    empirical.add_argument("--garch-compare", action="store_true")
    empirical.set_defaults(handler=cmd_empirical)

    return parser.parse_args(argv)


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s %(message)s", force=True)


def _output_dir(args: argparse.Namespace, settings: Settings, default: Optional[Path] = None) -> Path:
    return settings.ensure_output_dir(args.out or default)


def _level(args: argparse.Namespace, settings: Settings) -> float:
    return settings.default_level if args.level is None else args.level


def _emit(frame: pd.DataFrame, settings: Settings) -> None:
    print(format_table(frame, settings.table_decimals))


def _load_sample(args: argparse.Namespace) -> tuple[RegressionSample, Optional[MissingMask]]:
    """Regression data plus the observation mask from --mask, a mask column and blank entries."""

    data = read_regression_csv(args.input, constant=args.constant)
    mask = data.observed_mask()
    if args.mask is not None:
        from_file = read_mask_file(args.mask, data.n)
        mask = from_file if mask is None else mask & from_file
    if mask is None or mask.complete:
        return RegressionSample(y=data.y, Z=data.Z, names=data.names), None
    masked = MaskedSample.build(data.y, data.Z, mask, data.names)
    return masked.sample, mask


def cmd_fit(args: argparse.Namespace, settings: Settings) -> int:
    sample, mask = _load_sample(args)
    level = _level(args, settings)
    fit = fit_ols(sample, settings) if mask is None else fit_ols_missing(sample, mask, args.form, settings)

    frame = fit.summary_frame(level)
    frame.insert(0, "k", np.arange(1, fit.p + 1))
    out = _output_dir(args, settings)
    write_frame(frame, out / "fit.csv")

    observed = fit.nobs
    print(f"n={sample.n} observed={observed} p={fit.p} condition_number={fit.condition_number:.3e}")
    _emit(frame, settings)
    if fit.degenerate:
        print("note: a standard error is exactly 0 (exact fit); t-statistics are undefined")
    return 0


def cmd_tvfit(args: argparse.Namespace, settings: Settings) -> int:
    sample, mask = _load_sample(args)
    level = _level(args, settings)
    n = sample.n
    if args.bandwidth is not None:
        bandwidth = args.bandwidth
    else:
        bandwidth = float(n) ** (settings.default_h_exponent if args.h_exponent is None else args.h_exponent)

    exponent = math.log(bandwidth) / math.log(n) if n > 1 and bandwidth > 0 else 0.0
    if 0.0 < exponent < 1.0:
        check_bandwidth(BandwidthPolicy(exponent=exponent, gamma=args.gamma), n)

    kernel = KernelSpec(kind=args.kernel, bandwidth=bandwidth)
    fit = fit_tv(sample, kernel, settings) if mask is None else fit_tv_missing(sample, mask, kernel, settings)

    frame = fit.to_frame(level)
    out = _output_dir(args, settings)
    write_frame(frame, out / "tv_path.csv")

    print(f"n={n} kernel={kernel.kind} H={bandwidth:.4f} failed_points={int(fit.failed.sum())}")
    summary = (
        frame[~frame["failed"]]
        .groupby("coefficient", sort=False)["beta"]
        .agg(["mean", "min", "max"])
        .reset_index()
    )
    _emit(summary, settings)
    print(f"path written to {out / 'tv_path.csv'}")
    return 0


def cmd_mc(args: argparse.Namespace, settings: Settings) -> int:
    manifest = load_manifest(args.manifest)
    updates = {}
    if args.threads is not None:
        updates["threads"] = args.threads
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.level is not None:
        updates["level"] = args.level
    config = McConfig.model_validate({**manifest.config.model_dump(), **updates})
    manifest = manifest.model_copy(update={"config": config})

    out = _output_dir(args, settings, manifest.output_dir or settings.output_dir / manifest.name)
    metrics = RunMetrics(manifest.name)

    if manifest.experiment == "fixed":
        summary = run_mc_fixed(config, settings, metrics)
        frame = summary.to_frame()
        write_frame(frame, out / "summary.csv")
        print(f"{manifest.name}: R={summary.replications} failures={summary.failures}")
        _emit(frame, settings)
    elif manifest.experiment == "tv":
        result = run_mc_tv(config, settings, metrics)
        write_frame(result.coverage_frame(), out / "pointwise.csv")
        write_frame(result.rmse_summary(), out / "rmse.csv")
        print(f"{manifest.name}: R={result.replications} failures={result.failures}")
        _emit(result.rmse_summary(), settings)
        if config.t_grid:
            grid = result.grid_frame()
            write_frame(grid, out / "grid.csv")
            _emit(grid[["h", "t", "k", "coverage", "rmse"]], settings)
    else:
        curve = size_power_curve(config, settings, metrics)
        frame = curve.to_frame()
        write_frame(frame, out / "power.csv")
        print(f"{manifest.name}: R={curve.replications} empirical critical value={curve.critical_value:.5f}")
        _emit(frame, settings)

    save_manifest(manifest, out / "manifest.json")
    metrics.write(out / "metrics.prom")
    return 0


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    seed = 0 if args.seed is None else args.seed
    generated = gen_model(args.model, args.n, seed, settings)
    out = _output_dir(args, settings)

    data = pd.DataFrame({"y": generated.sample.y})
    for k, name in enumerate(generated.sample.names):
        data[name] = generated.sample.Z[:, k]
    write_frame(data, out / "data.csv")
    write_frame(generated.truth_frame(), out / "truth.csv")
    print(f"simulated {generated.spec.catalog_id or 'custom'} n={args.n} seed={seed} into {out}")
    return 0


def cmd_diagnose(args: argparse.Namespace, settings: Settings) -> int:
    series = read_series_csv(args.input, args.column)
    if args.subsample is not None:
        start, stop = args.subsample
        series = series[start - 1 : stop]
    frame = correlation_frame(correlation_scan(series, args.max_lag, _level(args, settings)))
    write_frame(frame, _output_dir(args, settings) / "correlation.csv")
    _emit(frame, settings)
    return 0


def cmd_empirical(args: argparse.Namespace, settings: Settings) -> int:
    series = read_series_csv(args.input, args.column)
    returns = prices_to_returns(series) if args.prices else series
    level = _level(args, settings)
    report = run_empirical(
        returns,
        h_exponent=args.h_exponent,
        subsample=args.subsample,
        garch_compare=args.garch_compare,
        seed=0 if args.seed is None else args.seed,
        max_lag=args.max_lag,
        level=level,
        settings=settings,
    )

    out = _output_dir(args, settings)
    write_frame(report.mean_frame(level), out / "mean_path.csv")
    write_frame(report.scale_frame(level), out / "scale_path.csv")
    write_frame(report.tests_frame(), out / "residual_tests.csv")
    print(f"n={returns.shape[0]} H={report.bandwidth:.2f} subsample={args.subsample[0]}:{args.subsample[1]}")
    _emit(report.tests_frame(), settings)

    garch = report.garch_frame()
    if garch is not None:
        write_frame(garch, out / "garch_tests.csv")
        print("GARCH(1,1) comparison:")
        _emit(garch, settings)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    args = parse_args(argv)
    configure_logging(args.verbose)
    handler: Handler = args.handler
    try:
        return handler(args, get_settings())
    except RobustOlsError as exc:
        LOGGER.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except ValidationError as exc:
        LOGGER.error("invalid configuration: %s", exc)
        return ConfigError.exit_code
    except Exception:  # pragma: no cover
        LOGGER.exception("unexpected failure")
        return 1


if __name__ == "__main__":
    sys.exit(main())
