"""Error hierarchy shared by the estimators, the simulators and the CLI."""

from __future__ import annotations

from typing import Optional


class RobustOlsError(Exception):
    """Base class for every error raised by the package."""

    exit_code: int = 1


class InputError(RobustOlsError):
    """Malformed or inconsistent user data."""

    exit_code = 2


class NumericalError(RobustOlsError):
    """A computation that cannot produce a meaningful number."""

    exit_code = 3


class ConfigError(RobustOlsError):
    """Invalid model, experiment or manifest configuration."""

    exit_code = 4


class DimensionMismatch(InputError):
    pass


class NonFiniteInput(InputError):
    pass


class EmptyMask(InputError):
    pass


class DatasetError(InputError):
    """Parse failure in an input file, optionally pinned to a 1-based line number."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class RankDeficient(NumericalError):
    """Regressors are collinear (or a kernel window holds too little information)."""

    def __init__(self, message: str, condition_number: float = float("inf")) -> None:
        self.condition_number = condition_number
        super().__init__(f"{message} (condition number {condition_number:.3e})")


class ZeroStandardError(NumericalError):
    pass


class AllPointsFailed(NumericalError):
    pass


class FailedPoint(NumericalError):
    pass


class ZeroVariance(NumericalError):
    pass


class ZeroDenominator(NumericalError):
    pass


class ReplicationFailure(NumericalError):
    """Too many Monte Carlo replications had to be excluded."""


class NonStationary(ConfigError):
    pass


class UnknownCatalogId(ConfigError):
    pass


class InvalidSpec(ConfigError):
    pass
