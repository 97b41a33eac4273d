"""Pydantic documents describing kernels, models, experiments and their summaries."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import norm


_Z_975 = float(norm.ppf(0.975))


class KernelSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian", "indicator"] = "gaussian"
    bandwidth: float = Field(gt=0.0, description="Bandwidth H of the weights K(|t-j|/H)")


class BandwidthPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    exponent: float = Field(gt=0.0, lt=1.0, description="h in H = n^h")
    gamma: float = Field(default=1.0, gt=0.0, le=1.0, description="Smoothness of the parameter path")


class BandwidthReport(BaseModel):
    n: int
    exponent: float
    gamma: float
    bandwidth: float
    limit_exponent: float = Field(description="2*gamma/(2*gamma+1)")
    valid: bool
    variance_rate: float = Field(description="H^(-1/2)")
    bias_rate: float = Field(description="(H/n)^gamma")


class NoiseSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["iid_normal", "garch11", "lagged_product"] = "iid_normal"
    omega: float = Field(default=1.0, gt=0.0)
    alpha: float = Field(default=0.2, ge=0.0)
    beta: float = Field(default=0.7, ge=0.0)
    burn_in: Optional[int] = Field(default=None, ge=0, description="Defaults to settings.garch_burn_in")


class ConstantPath(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["constant"] = "constant"
    value: float


class SinePath(BaseModel):
    """a * sin(frequency * pi * t / n) + offset."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["sine"] = "sine"
    amplitude: float
    frequency: float
    offset: float = 0.0


class LinearPath(BaseModel):
    """slope * t / n."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["linear"] = "linear"
    slope: float


class PowerPath(BaseModel):
    """t ** exponent."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["power"] = "power"
    exponent: float


class WalkPath(BaseModel):
    """|factor * n**scale_exponent * sum_{j<=t} innovation_j| + offset."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["abs_scaled_walk"] = "abs_scaled_walk"
    factor: float = 1.0
    scale_exponent: float = -0.5
    offset: float = 0.0
    innovation: Literal["iid_normal", "arfima"] = "iid_normal"
    d: float = Field(default=0.4, gt=-0.5, lt=0.5)
    stream: int = Field(default=0, ge=0, description="Sub-stream of the scale RNG stream")


class SumPath(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["sum"] = "sum"
    terms: list["PathSpec"] = Field(min_length=1)


class ProductPath(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["product"] = "product"
    factors: list["PathSpec"] = Field(min_length=1)


PathSpec = Annotated[
    Union[ConstantPath, SinePath, LinearPath, PowerPath, WalkPath, SumPath, ProductPath],
    Field(discriminator="kind"),
]

SumPath.model_rebuild()
ProductPath.model_rebuild()


class ModelSpec(BaseModel):
    """Data-generating process definition.

    ``regression`` models follow y_t = sum_k beta_kt z_kt + h_t eps_t with z_1t = 1
    and z_kt = mu_kt + g_kt eta_kt; ``autoregression`` models simulate
    y_t = beta_1 + beta_2 y_{t-1} + ... + eps_t and expose the lags as regressors.
    """

    model_config = ConfigDict(frozen=True)

    catalog_id: Optional[str] = None
    kind: Literal["regression", "autoregression"] = "regression"
    beta: list[PathSpec] = Field(min_length=1)
    mean: list[PathSpec] = Field(default_factory=list)
    scale: list[PathSpec] = Field(default_factory=list)
    noise_scale: PathSpec = Field(default_factory=lambda: ConstantPath(value=1.0))
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    eta_ar: float = Field(default=0.5, gt=-1.0, lt=1.0)
    eta_source: Literal["noise_lags", "iid_normal"] = "noise_lags"

    @model_validator(mode="after")
    def _check_shapes(self) -> "ModelSpec":
        if self.kind == "regression":
            if len(self.mean) != self.p - 1 or len(self.scale) != self.p - 1:
                raise ValueError("mean and scale paths must be given for every non-constant regressor")
        else:
            if self.p < 2:
                raise ValueError("an autoregression needs an intercept and at least one lag")
            if not all(isinstance(path, ConstantPath) for path in self.beta):
                raise ValueError("autoregressive coefficients must be constant")
        return self

    @property
    def p(self) -> int:
        return len(self.beta)

    @property
    def time_varying(self) -> bool:
        return not all(isinstance(path, ConstantPath) for path in self.beta)

    def with_constant_beta(self, index: int, value: float) -> "ModelSpec":
        """Return a copy whose coefficient ``index`` is the constant ``value``."""

        beta = list(self.beta)
        beta[index] = ConstantPath(value=value)
        return self.model_copy(update={"beta": beta})


class MaskSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["none", "block", "random"] = "none"
    start: Optional[int] = Field(default=None, ge=1, description="First missing t (1-based, block)")
    stop: Optional[int] = Field(default=None, ge=1, description="Last missing t (1-based, inclusive)")
    count: Optional[int] = Field(default=None, ge=0, description="Number of randomly missing points")

    @model_validator(mode="after")
    def _check_kind(self) -> "MaskSpec":
        if self.kind == "block" and (self.start is None or self.stop is None or self.stop < self.start):
            raise ValueError("block masks need start <= stop")
        if self.kind == "random" and self.count is None:
            raise ValueError("random masks need a count")
        return self


class McConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: Union[str, ModelSpec] = Field(description="Catalog id such as 'model1' or 'supp2(-0.25)', or a full spec")
    n: int = Field(ge=2)
    replications: int = Field(ge=1)
    seed: int = Field(default=0, ge=0)
    level: float = Field(default=0.95, gt=0.0, lt=1.0)
    kernel: Literal["gaussian", "indicator"] = "gaussian"
    bandwidths: list[float] = Field(default_factory=lambda: [0.5], description="Exponents h of H = n^h")
    null_grid: list[float] = Field(default_factory=list)
    null_value: float = 0.0
    tested_coefficient: int = Field(default=2, ge=0, description="0-based coefficient index for power runs")
    mask: MaskSpec = Field(default_factory=MaskSpec)
    form: Literal["zerofill", "subsample"] = "zerofill"
    t_grid: Optional[list[int]] = Field(default=None, description="1-based time points reported by TV runs")
    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_bandwidths(self) -> "McConfig":
        if any(not 0.0 < h < 1.0 for h in self.bandwidths):
            raise ValueError("bandwidth exponents must lie in (0, 1)")
        if self.t_grid is not None and any(not 1 <= t <= self.n for t in self.t_grid):
            raise ValueError("t_grid points must lie in 1..n")
        return self


class ExperimentManifest(BaseModel):
    name: str = "experiment"
    experiment: Literal["fixed", "tv", "power"] = "fixed"
    config: McConfig
    output_dir: Optional[Path] = None


class CoefficientTest(BaseModel):
    index: int
    null_value: float
    estimate: float
    t_stat: float
    se_used: float
    flavor: Literal["robust", "standard"]
    level: float
    critical_value: float
    reject: bool
    ci_lower: float
    ci_upper: float

    @property
    def reject_5pct(self) -> bool:
        return abs(self.t_stat) > _Z_975


class CorrTestResult(BaseModel):
    lag: int
    rho: float = Field(ge=-1.0, le=1.0)
    std_stat: float
    robust_stat: float
    critical_value: float
    std_reject: bool
    robust_reject: bool


class CoefficientSummary(BaseModel):
    parameter: str
    bias: float
    rmse: float
    cp: float = Field(ge=0.0, le=100.0)
    cp_st: float = Field(ge=0.0, le=100.0)
    sd: float


class McSummary(BaseModel):
    rows: list[CoefficientSummary]
    replications: int
    failures: int
    config: Optional[McConfig] = None

    def to_frame(self) -> pd.DataFrame:
        """Table in the column order Parameters, Bias, RMSE, CP, CP_st, SD."""

        return pd.DataFrame(
            {
                "Parameters": [row.parameter for row in self.rows],
                "Bias": [row.bias for row in self.rows],
                "RMSE": [row.rmse for row in self.rows],
                "CP": [row.cp for row in self.rows],
                "CP_st": [row.cp_st for row in self.rows],
                "SD": [row.sd for row in self.rows],
            }
        )


class PowerCurve(BaseModel):
    grid: list[float]
    robust: list[float]
    standard: list[float]
    adjusted: list[float]
    critical_value: float = Field(description="Empirical null quantile of |t| for the standard test")
    replications: int
    failures: int
    config: Optional[McConfig] = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "value": self.grid,
                "robust": self.robust,
                "standard": self.standard,
                "adjusted": self.adjusted,
            }
        )

