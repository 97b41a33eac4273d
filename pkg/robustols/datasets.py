"""Reading datasets, masks and experiment manifests; writing result tables."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .exceptions import DatasetError, DimensionMismatch, InvalidSpec
from .missing import MissingMask
from .schemas import ExperimentManifest

LOGGER = logging.getLogger(__name__)

MASK_COLUMN = "mask"
IGNORED_COLUMNS = {"date", "time", "t"}
BLANKS = {"", "na", "nan", "null"}


@dataclass(frozen=True)
class RegressionData:
    """Raw regression columns; ``y`` and ``Z`` keep NaN where entries were blank."""

    y: np.ndarray
    Z: np.ndarray
    names: tuple[str, ...]
    mask: Optional[MissingMask] = None

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    def observed_mask(self) -> Optional[MissingMask]:
        """Mask column combined with the rows that contain blank entries."""

        if np.isfinite(self.y).all() and np.isfinite(self.Z).all():
            return self.mask
        inferred = MissingMask.from_data(self.y, self.Z)
        return inferred if self.mask is None else inferred & self.mask


def _read_table(path: Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError as exc:
        raise DatasetError(f"file not found: {path}") from exc
    except pd.errors.EmptyDataError as exc:
        raise DatasetError(f"{path} is empty") from exc
    except pd.errors.ParserError as exc:
        raise DatasetError(f"{path} is not a rectangular CSV: {exc}") from exc
    if frame.empty:
        raise DatasetError(f"{path} has a header but no data rows", line=2)
    frame.columns = [str(column).strip() for column in frame.columns]
    return frame


def _numeric(frame: pd.DataFrame, column: str, allow_blank: bool) -> np.ndarray:
    """Parse one column; data row i sits on file line i + 2 (the header is line 1)."""

    raw = frame[column].str.strip()
    blank = raw.str.lower().isin(BLANKS)
    values = pd.to_numeric(raw.where(~blank), errors="coerce")
    bad = values.isna() & ~blank
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DatasetError(f"column {column!r} holds a non-numeric value {raw.iloc[row]!r}", line=row + 2)
    if blank.any() and not allow_blank:
        row = int(np.flatnonzero(blank.to_numpy())[0])
        raise DatasetError(f"column {column!r} has a blank entry", line=row + 2)
    return values.to_numpy(dtype=float)


def read_regression_csv(path: Path | str, constant: bool = False, y_column: str = "y") -> RegressionData:
    """CSV with a header: the dependent column ``y`` (or the first column) and regressors z1..zp.

    An optional ``mask`` column of 0/1 marks observed rows; blank entries are
    treated as missing observations.
    """

    path = Path(path)
    frame = _read_table(path)
    columns = [column for column in frame.columns if column.lower() not in IGNORED_COLUMNS]
    dependent = y_column if y_column in columns else columns[0]
    regressors = [column for column in columns if column not in (dependent, MASK_COLUMN)]
    if not regressors and not constant:
        raise DatasetError(f"{path} has no regressor columns; pass --constant for an intercept-only fit")

    y = _numeric(frame, dependent, allow_blank=True)
    Z = np.column_stack([_numeric(frame, column, allow_blank=True) for column in regressors]) if regressors else np.empty((len(y), 0))
    names = tuple(regressors)
    if constant:
        Z = np.column_stack([np.ones(len(y)), Z])
        names = ("const",) + names

    mask = None
    if MASK_COLUMN in columns:
        tau = _numeric(frame, MASK_COLUMN, allow_blank=False)
        bad = ~np.isin(tau, (0.0, 1.0))
        if bad.any():
            raise DatasetError("mask column must be 0 or 1", line=int(np.flatnonzero(bad)[0]) + 2)
        mask = MissingMask(tau.astype(int))

    LOGGER.info("read %d rows and %d regressors from %s", len(y), Z.shape[1], path)
    return RegressionData(y=y, Z=Z, names=names, mask=mask)


def read_series_csv(path: Path | str, column: Optional[str] = None) -> np.ndarray:
    """Single numeric series; a date column, if present, is ignored."""

    path = Path(path)
    frame = _read_table(path)
    if column is None:
        candidates = [name for name in frame.columns if name.lower() not in IGNORED_COLUMNS]
        if not candidates:
            raise DatasetError(f"{path} has no value column")
        column = candidates[0]
    elif column not in frame.columns:
        raise DatasetError(f"{path} has no column {column!r}")
    return _numeric(frame, column, allow_blank=False)


def read_mask_file(path: Path | str, n: int) -> MissingMask:
    """One 0/1 per line, or a JSON list of 1-based indices of the missing points."""

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise DatasetError(f"mask file not found: {path}") from exc

    if text.lstrip().startswith("["):
        try:
            indices = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"invalid JSON index list: {exc.msg}", line=exc.lineno) from exc
        if not all(isinstance(index, int) for index in indices):
            raise DatasetError("missing-index list must contain integers")
        return MissingMask.from_missing_indices(n, indices, one_based=True)

    values = []
    for number, line in enumerate(text.splitlines(), start=1):
        token = line.strip()
        if not token:
            continue
        if token not in ("0", "1"):
            raise DatasetError(f"mask entry {token!r} is not 0 or 1", line=number)
        values.append(int(token))
    if len(values) != n:
        raise DimensionMismatch(f"mask file has {len(values)} entries for {n} observations")
    return MissingMask(np.array(values))


def load_manifest(path: Path | str) -> ExperimentManifest:
    path = Path(path)
    try:
        return ExperimentManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DatasetError(f"manifest not found: {path}") from exc
    except ValidationError as exc:
        raise InvalidSpec(f"invalid manifest {path}: {exc}") from exc


def save_manifest(manifest: ExperimentManifest, path: Path | str) -> Path:
    path = Path(path)
    path.write_text(manifest.model_dump_json(indent=2, exclude_none=True) + "\n", encoding="utf-8")
    return path


def write_frame(frame: pd.DataFrame, path: Path | str) -> Path:
    """CSV with shortest round-trip float formatting."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def format_table(frame: pd.DataFrame, decimals: int = 5) -> str:
    return frame.to_string(index=False, float_format=lambda value: f"{value:.{decimals}f}")
