"""Data-generating processes for the simulation studies.

Every sample is a deterministic function of (spec, n, seed record). Random
draws come from disjoint ``numpy.random.SeedSequence`` streams keyed by
``(replication, stream[, sub-stream])`` so that the scale, mean and parameter
paths never share draws with the noise and regressor drivers.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Union

import numpy as np
import pandas as pd
from scipy import signal

from .config import Settings, get_settings
from .exceptions import InvalidSpec, NonStationary, UnknownCatalogId
from .regression import RegressionSample
from .schemas import (
    ConstantPath,
    LinearPath,
    ModelSpec,
    NoiseSpec,
    PathSpec,
    PowerPath,
    ProductPath,
    SinePath,
    SumPath,
    WalkPath,
)

LOGGER = logging.getLogger(__name__)

STREAMS = {"noise": 0, "eta": 1, "scale": 2, "mask": 3}

CATALOG_IDS = ("model1", "model2", "model3", "model4", "ar2", "supp1", "supp2(gamma)")

# n^-0.9 keeps the partial sums of ARFIMA(0, 0.4, 0) innovations, which grow like n^(d+1/2), bounded.
MODEL4_WALK_EXPONENT = -0.9

_SUPP2 = re.compile(r"^supp2\((?P<gamma>[^()]+)\)$")


@dataclass(frozen=True)
class SeedRecord:
    """Master seed, replication index and optional per-stream master overrides."""

    master: int
    replication: int = 0
    overrides: tuple[tuple[str, int], ...] = ()

    def sequence(self, stream: str, *substream: int) -> np.random.SeedSequence:
        if stream not in STREAMS:
            raise InvalidSpec(f"unknown random stream {stream!r}")
        master = dict(self.overrides).get(stream, self.master)
        return np.random.SeedSequence(master, spawn_key=(self.replication, STREAMS[stream], *substream))

    def generator(self, stream: str, *substream: int) -> np.random.Generator:
        return np.random.default_rng(self.sequence(stream, *substream))

    def with_override(self, stream: str, master: int) -> "SeedRecord":
        overrides = dict(self.overrides)
        overrides[stream] = master
        return replace(self, overrides=tuple(sorted(overrides.items())))


def _generator(seed: Union[int, np.random.Generator]) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _seed_record(seed: Union[int, SeedRecord]) -> SeedRecord:
    return seed if isinstance(seed, SeedRecord) else SeedRecord(master=int(seed))


def validate_noise(spec: NoiseSpec) -> None:
    if spec.kind == "garch11" and spec.alpha + spec.beta >= 1.0:
        raise NonStationary(f"GARCH(1,1) needs alpha + beta < 1, got {spec.alpha} + {spec.beta}")


def gen_garch(
    spec: NoiseSpec,
    n: int,
    seed: Union[int, np.random.Generator],
    settings: Optional[Settings] = None,
) -> np.ndarray:
    """eps_t = sigma_t e_t with sigma_t^2 = omega + beta sigma_{t-1}^2 + alpha eps_{t-1}^2.

    The recursion starts at the unconditional variance and the first
    ``burn_in`` values are discarded.
    """

    validate_noise(spec)
    settings = settings or get_settings()
    burn_in = settings.garch_burn_in if spec.burn_in is None else spec.burn_in
    shocks = _generator(seed).standard_normal(n + burn_in)

    omega, alpha, beta = spec.omega, spec.alpha, spec.beta
    sigma2 = omega / (1.0 - alpha - beta)
    eps = np.empty(n + burn_in)
    for t, shock in enumerate(shocks.tolist()):
        value = sigma2**0.5 * shock
        eps[t] = value
        sigma2 = omega + beta * sigma2 + alpha * value * value
    return eps[burn_in:]


def gen_noise(
    spec: NoiseSpec,
    n: int,
    seed: Union[int, np.random.Generator],
    settings: Optional[Settings] = None,
) -> np.ndarray:
    """Martingale-difference noise of the requested kind."""

    rng = _generator(seed)
    if spec.kind == "garch11":
        return gen_garch(spec, n, rng, settings)
    if spec.kind == "lagged_product":
        e = rng.standard_normal(n + 1)
        return e[1:] * e[:-1]
    return rng.standard_normal(n)


def arfima_coeffs(d: float, count: int) -> np.ndarray:
    """MA weights a_0 = 1, a_j = a_{j-1} (j - 1 + d) / j of ARFIMA(0, d, 0)."""

    if not -0.5 < d < 0.5:
        raise InvalidSpec(f"memory parameter d must lie in (-0.5, 0.5), got {d}")
    j = np.arange(1, count, dtype=float)
    return np.concatenate(([1.0], np.cumprod((j - 1.0 + d) / j)))


def gen_arfima(
    d: float,
    n: int,
    seed: Union[int, np.random.Generator],
    settings: Optional[Settings] = None,
    truncation: Optional[int] = None,
) -> np.ndarray:
    """Truncated MA(inf) filter of unit-variance Gaussian innovations."""

    settings = settings or get_settings()
    count = truncation or settings.arfima_truncation
    coeffs = arfima_coeffs(d, count)
    innovations = _generator(seed).standard_normal(n + count - 1)
    if d == 0.0:
        return innovations[count - 1 :]
    return signal.fftconvolve(innovations, coeffs, mode="valid")


def evaluate_path(
    path: PathSpec,
    n: int,
    seeds: SeedRecord,
    settings: Optional[Settings] = None,
) -> np.ndarray:
    """Values of a path at t = 1..n."""

    t = np.arange(1, n + 1, dtype=float)
    if isinstance(path, ConstantPath):
        return np.full(n, path.value)
    if isinstance(path, SinePath):
        return path.amplitude * np.sin(path.frequency * np.pi * t / n) + path.offset
    if isinstance(path, LinearPath):
        return path.slope * t / n
    if isinstance(path, PowerPath):
        return t**path.exponent
    if isinstance(path, WalkPath):
        rng = seeds.generator("scale", path.stream)
        if path.innovation == "arfima":
            innovations = gen_arfima(path.d, n, rng, settings)
        else:
            innovations = rng.standard_normal(n)
        return np.abs(path.factor * float(n) ** path.scale_exponent * np.cumsum(innovations)) + path.offset
    if isinstance(path, SumPath):
        return np.sum([evaluate_path(term, n, seeds, settings) for term in path.terms], axis=0)
    if isinstance(path, ProductPath):
        return np.prod([evaluate_path(factor, n, seeds, settings) for factor in path.factors], axis=0)
    raise InvalidSpec(f"unsupported path {path!r}")


def _sine(amplitude: float, frequency: float, offset: float) -> SinePath:
    return SinePath(amplitude=amplitude, frequency=frequency, offset=offset)


def _constants(*values: float) -> list[ConstantPath]:
    return [ConstantPath(value=value) for value in values]


def _walk(stream: int, factor: float = 0.5, offset: float = 0.25, **kwargs) -> WalkPath:
    return WalkPath(factor=factor, scale_exponent=-0.5, offset=offset, stream=stream, **kwargs)


GARCH = NoiseSpec(kind="garch11", omega=1.0, alpha=0.2, beta=0.7)


def catalog_spec(catalog_id: str) -> ModelSpec:
    """Return the catalog model for ``catalog_id`` (see ``CATALOG_IDS``)."""

    key = catalog_id.strip().lower()
    mean = _sine(0.5, 1.0, 1.0)
    fixed = _constants(0.5, 0.4, 0.3)
    tv_beta = [_sine(0.5, 0.5, 1.0), _sine(0.5, 1.0, 1.0), _sine(0.5, 2.0, 1.0)]

    if key == "model1":
        return ModelSpec(
            catalog_id=key,
            beta=fixed,
            mean=[mean, mean],
            scale=[LinearPath(slope=0.4), LinearPath(slope=0.4)],
            noise_scale=LinearPath(slope=0.3),
            noise=GARCH,
        )
    if key == "model2":
        return ModelSpec(
            catalog_id=key,
            beta=fixed,
            mean=[mean, mean],
            scale=[_walk(1), _walk(2)],
            noise_scale=_walk(0),
            noise=GARCH,
        )
    if key == "model3":
        return ModelSpec(
            catalog_id=key,
            beta=tv_beta,
            mean=[mean, mean],
            scale=[_sine(0.5, 1.0, 1.0), _sine(0.5, 1.0, 1.0)],
            noise_scale=_sine(0.5, 2.0, 1.0),
            noise=GARCH,
        )
    if key == "model4":
        arfima_walk = dict(factor=1.0, innovation="arfima", d=0.4)
        return ModelSpec(
            catalog_id=key,
            beta=[
                tv_beta[0],
                tv_beta[1],
                SumPath(
                    terms=[
                        WalkPath(scale_exponent=MODEL4_WALK_EXPONENT, offset=0.0, stream=1, **arfima_walk),
                        LinearPath(slope=0.3),
                    ]
                ),
            ],
            mean=[mean, mean],
            scale=[
                WalkPath(scale_exponent=MODEL4_WALK_EXPONENT, offset=0.2, stream=0, **arfima_walk),
                _sine(0.5, 1.0, 1.0),
            ],
            noise_scale=_sine(0.5, 2.0, 1.0),
            noise=NoiseSpec(kind="iid_normal"),
        )
    if key == "ar2":
        return ModelSpec(
            catalog_id=key,
            kind="autoregression",
            beta=fixed,
            noise=NoiseSpec(kind="lagged_product"),
        )
    if key == "supp1":
        return ModelSpec(
            catalog_id=key,
            beta=fixed,
            mean=[mean, _sine(0.5, 0.5, 1.0)],
            scale=[_walk(0), _sine(0.5, 3.0, 1.0)],
            noise_scale=LinearPath(slope=0.4),
            noise=GARCH,
        )

    match = _SUPP2.match(key)
    if match:
        try:
            gamma = float(Fraction(match.group("gamma").strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise UnknownCatalogId(f"cannot read the exponent in {catalog_id!r}") from exc
        return ModelSpec(
            catalog_id=f"supp2({match.group('gamma').strip()})",
            beta=fixed,
            mean=[
                ProductPath(factors=[_sine(0.5, 10.0, 1.0), PowerPath(exponent=0.5)]),
                ProductPath(factors=[_sine(0.5, 5.0, 1.0), PowerPath(exponent=gamma)]),
            ],
            scale=[PowerPath(exponent=1.0), PowerPath(exponent=gamma)],
            noise_scale=ConstantPath(value=1.0),
            noise=GARCH,
        )
    raise UnknownCatalogId(f"unknown model {catalog_id!r}; expected one of {', '.join(CATALOG_IDS)}")


def resolve_model(model: Union[str, ModelSpec]) -> ModelSpec:
    return catalog_spec(model) if isinstance(model, str) else model


def validate(spec: ModelSpec) -> None:
    """Reject specs without a stationary noise or autoregressive solution."""

    validate_noise(spec.noise)
    if spec.kind == "autoregression":
        lags = [path.value for path in spec.beta[1:]]  # type: ignore[union-attr]
        roots = np.roots([1.0, *(-value for value in lags)])
        if roots.size and np.abs(roots).max() >= 1.0:
            raise NonStationary(f"autoregressive coefficients {lags} have no stationary solution")


@dataclass(frozen=True)
class GeneratedSample:
    """A simulated sample together with the latent quantities used to score estimates."""

    sample: RegressionSample
    spec: ModelSpec
    seeds: SeedRecord
    beta_path: np.ndarray
    h: np.ndarray
    epsilon: np.ndarray
    g: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.sample.n

    @property
    def fixed_beta(self) -> np.ndarray:
        if self.spec.time_varying:
            raise InvalidSpec(f"model {self.spec.catalog_id or 'custom'} has time-varying coefficients")
        return self.beta_path[0]

    def truth_frame(self) -> pd.DataFrame:
        """One row per t (1-based): observed data followed by the latent paths."""

        frame = pd.DataFrame({"t": np.arange(1, self.n + 1), "y": self.sample.y})
        for k, name in enumerate(self.sample.names):
            frame[name] = self.sample.Z[:, k]
        for k in range(self.beta_path.shape[1]):
            frame[f"beta{k + 1}"] = self.beta_path[:, k]
        frame["h"] = self.h
        if self.g is not None and self.mu is not None:
            for k in range(1, self.g.shape[1]):
                frame[f"mu{k + 1}"] = self.mu[:, k]
                frame[f"g{k + 1}"] = self.g[:, k]
        frame["epsilon"] = self.epsilon
        return frame


def _generate_regression(spec: ModelSpec, n: int, seeds: SeedRecord, settings: Settings) -> GeneratedSample:
    p = spec.p
    presample = max(settings.eta_presample, p - 1)
    total = n + presample

    eps_full = gen_noise(spec.noise, total, seeds.generator("noise"), settings)
    eps = eps_full[presample:]

    eta_rng = seeds.generator("eta")
    Z = np.ones((n, p))
    g = np.ones((n, p))
    mu = np.zeros((n, p))
    for k in range(1, p):
        if spec.eta_source == "noise_lags":
            # xi_kt = eps_{t-k}: the k-th regressor driver uses the noise k steps back
            xi = np.concatenate((np.zeros(k), eps_full[:-k]))
        else:
            xi = eta_rng.standard_normal(total)
        eta = signal.lfilter([1.0], [1.0, -spec.eta_ar], xi)[presample:]
        mu[:, k] = evaluate_path(spec.mean[k - 1], n, seeds, settings)
        g[:, k] = evaluate_path(spec.scale[k - 1], n, seeds, settings)
        Z[:, k] = mu[:, k] + g[:, k] * eta

    beta_path = np.column_stack([evaluate_path(path, n, seeds, settings) for path in spec.beta])
    h = evaluate_path(spec.noise_scale, n, seeds, settings)
    y = np.einsum("tk,tk->t", beta_path, Z) + h * eps

    names = ("const",) + tuple(f"z{k + 1}" for k in range(1, p))
    return GeneratedSample(
        sample=RegressionSample(y=y, Z=Z, names=names),
        spec=spec,
        seeds=seeds,
        beta_path=beta_path,
        h=h,
        epsilon=eps,
        g=g,
        mu=mu,
    )


def _generate_autoregression(spec: ModelSpec, n: int, seeds: SeedRecord, settings: Settings) -> GeneratedSample:
    coefficients = np.array([path.value for path in spec.beta])  # type: ignore[union-attr]
    lags = spec.p - 1
    burn_in = settings.ar_burn_in
    total = burn_in + lags + n

    eps_full = gen_noise(spec.noise, total, seeds.generator("noise"), settings)
    series = signal.lfilter([1.0], np.concatenate(([1.0], -coefficients[1:])), coefficients[0] + eps_full)
    kept = series[burn_in:]

    Z = np.ones((n, spec.p))
    for lag in range(1, lags + 1):
        Z[:, lag] = kept[lags - lag : lags - lag + n]
    y = kept[lags:]

    names = ("const",) + tuple(f"y_lag{lag}" for lag in range(1, lags + 1))
    return GeneratedSample(
        sample=RegressionSample(y=y, Z=Z, names=names),
        spec=spec,
        seeds=seeds,
        beta_path=np.tile(coefficients, (n, 1)),
        h=np.ones(n),
        epsilon=eps_full[burn_in + lags :],
        extras={"series": kept.copy()},
    )


def gen_model(
    model: Union[str, ModelSpec],
    n: int,
    seed: Union[int, SeedRecord],
    settings: Optional[Settings] = None,
) -> GeneratedSample:
    """Simulate one sample of length ``n`` from a catalog id or a custom spec."""

    settings = settings or get_settings()
    spec = resolve_model(model)
    validate(spec)
    if n < spec.p:
        raise InvalidSpec(f"sample size {n} is smaller than the {spec.p} coefficients")
    seeds = _seed_record(seed)
    if spec.kind == "autoregression":
        return _generate_autoregression(spec, n, seeds, settings)
    return _generate_regression(spec, n, seeds, settings)
