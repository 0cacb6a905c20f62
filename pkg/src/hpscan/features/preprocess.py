"""Matrix cleanup before training.

Steps, in order: drop contracts without bytecode or verified source, drop
the internal-transaction aggregates (``hasInternalTransactions`` stays),
zero-fill missing values, drop fund-flow cases never seen in the fit rows,
report near-constant columns, min-max scale the unbounded columns with
ranges taken from the fit rows only.
"""

import json
import re
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.errors import DictionaryMismatchError, InputError
from ..utils.logger import log
from ..utils.utils import PathLike, open_text
from .matrix import FeatureMatrix
from .transactions import INTERNAL_COLUMNS

SCALER_FORMAT = "hpscan-scaler"
SCALER_VERSION = 1

_ONE_HOT = re.compile(r"^(library|compilerMinorVersion|compilerPatchVersion)\d+$")

RowSelection = Union[Sequence[int], np.ndarray, None]


def is_bounded(column: str) -> bool:
    """Ratios, frequencies and 0/1 flags already live in [0, 1]."""
    return (
        "Ratio" in column
        or column.startswith("fundFlowCase")
        or column.startswith("has")
        or bool(_ONE_HOT.match(column))
    )


@dataclass(frozen=True)
class ScalerParams:
    columns: Tuple[str, ...]
    mins: Tuple[float, ...]
    maxs: Tuple[float, ...]

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise InputError("Scaler lists a column more than once")
        if not (len(self.columns) == len(self.mins) == len(self.maxs)):
            raise InputError("Scaler columns, minimums and maximums differ in length")
        for column, lo, hi in zip(self.columns, self.mins, self.maxs):
            if lo > hi:
                raise InputError(f"Scaler range for {column} has min {lo} > max {hi}")

    @classmethod
    def fit(cls, frame: pd.DataFrame, columns: Sequence[str]) -> "ScalerParams":
        values = frame[list(columns)].to_numpy(dtype=np.float64)
        if len(values) == 0:
            raise InputError("Cannot fit a scaler on zero rows")
        return cls(
            columns=tuple(columns),
            mins=tuple(float(v) for v in values.min(axis=0)),
            maxs=tuple(float(v) for v in values.max(axis=0)),
        )

    def transform(self, frame: pd.DataFrame) -> pd.DataFrame:
        """Scale listed columns to [0, 1] on the fit range; constant columns map to 0."""
        out = frame.copy()
        for column, lo, hi in zip(self.columns, self.mins, self.maxs):
            span = hi - lo
            out[column] = 0.0 if span == 0 else (frame[column].to_numpy(dtype=np.float64) - lo) / span
        return out

    def inverse_transform(self, frame: pd.DataFrame) -> pd.DataFrame:
        out = frame.copy()
        for column, lo, hi in zip(self.columns, self.mins, self.maxs):
            out[column] = frame[column].to_numpy(dtype=np.float64) * (hi - lo) + lo
        return out

    def to_dict(self) -> Dict:
        return {
            "format": SCALER_FORMAT,
            "version": SCALER_VERSION,
            "columns": {c: [lo, hi] for c, lo, hi in zip(self.columns, self.mins, self.maxs)},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ScalerParams":
        if data.get("format") != SCALER_FORMAT or data.get("version") != SCALER_VERSION:
            raise InputError(f"Not an {SCALER_FORMAT} v{SCALER_VERSION} document")
        columns = data["columns"]
        return cls(
            columns=tuple(columns),
            mins=tuple(float(v[0]) for v in columns.values()),
            maxs=tuple(float(v[1]) for v in columns.values()),
        )


@dataclass
class ColumnReport:
    """What preprocessing did to rows and columns."""

    rows_in: int = 0
    rows_filtered: int = 0
    fit_rows: int = 0
    dropped_internal: List[str] = field(default_factory=list)
    dead_fund_flow: List[str] = field(default_factory=list)
    near_zero_variance: List[str] = field(default_factory=list)
    scaled: List[str] = field(default_factory=list)
    output_columns: List[str] = field(default_factory=list)

    @property
    def live_fund_flow(self) -> int:
        return sum(1 for c in self.output_columns if c.startswith("fundFlowCase"))

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "ColumnReport":
        return cls(**data)


def save_preprocess(scaler: ScalerParams, report: ColumnReport, path: PathLike):
    """Persist a fitted preprocessing (scaler plus column report) as JSON."""
    with open_text(path, "w") as f:
        json.dump({**scaler.to_dict(), "report": report.to_dict()}, f, indent=2)


def load_preprocess(path: PathLike) -> Tuple[ScalerParams, ColumnReport]:
    with open_text(path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise InputError(f"{path}: invalid JSON: {e}") from None
    return ScalerParams.from_dict(data), ColumnReport.from_dict(data.get("report", {}))


def usable_mask(matrix: FeatureMatrix) -> np.ndarray:
    frame = matrix.features
    has_bytecode = frame["hasByteCode"].to_numpy() == 1 if "hasByteCode" in frame else True
    has_source = frame["hasSourceCode"].to_numpy() == 1 if "hasSourceCode" in frame else True
    return np.ones(len(matrix), dtype=bool) & has_bytecode & has_source


def filter_usable(matrix: FeatureMatrix) -> FeatureMatrix:
    """Keep only contracts with both bytecode and verified source code."""
    return matrix.take(np.flatnonzero(usable_mask(matrix)))


def _fit_mask(n: int, fit_on: RowSelection) -> np.ndarray:
    if fit_on is None:
        return np.ones(n, dtype=bool)
    fit_on = np.asarray(fit_on)
    if fit_on.dtype == bool:
        if len(fit_on) != n:
            raise InputError(f"fit_on mask has {len(fit_on)} entries for {n} rows")
        return fit_on.copy()
    mask = np.zeros(n, dtype=bool)
    mask[fit_on.astype(np.int64)] = True
    return mask


def _drop_internal(frame: pd.DataFrame) -> Tuple[pd.DataFrame, List[str]]:
    dropped = [c for c in INTERNAL_COLUMNS if c in frame.columns]
    return frame.drop(columns=dropped), dropped


def preprocess(
    matrix: FeatureMatrix,
    fit_on: RowSelection = None,
    near_zero_variance: float = 1e-12,
) -> Tuple[FeatureMatrix, ScalerParams, ColumnReport]:
    """Clean and scale a matrix, fitting every data-dependent step on ``fit_on``.

    ``fit_on`` holds row positions or a boolean mask over ``matrix`` (all rows
    when omitted). The returned matrix keeps every usable row in its original
    order, fit rows and the rest alike.
    """
    report = ColumnReport(rows_in=len(matrix))
    keep = usable_mask(matrix)
    fit_mask = _fit_mask(len(matrix), fit_on) & keep
    if not fit_mask.any():
        raise InputError("preprocess needs at least one usable row to fit on")
    report.rows_filtered = int((~keep).sum())
    report.fit_rows = int(fit_mask.sum())

    kept = matrix.take(np.flatnonzero(keep))
    fit_rows = fit_mask[keep]

    frame, report.dropped_internal = _drop_internal(kept.features)
    frame = frame.fillna(0.0)

    fit_frame = frame[fit_rows]
    fund_flow = [c for c in frame.columns if c.startswith("fundFlowCase")]
    report.dead_fund_flow = [c for c in fund_flow if not (fit_frame[c] != 0).any()]
    frame = frame.drop(columns=report.dead_fund_flow)
    fit_frame = frame[fit_rows]

    variances = fit_frame.var(axis=0, ddof=0)
    report.near_zero_variance = [c for c in frame.columns if variances[c] <= near_zero_variance]
    if report.near_zero_variance:
        log.debug(f"{len(report.near_zero_variance)} columns with near-zero variance on the fit rows")

    report.scaled = [c for c in frame.columns if not is_bounded(c)]
    scaler = ScalerParams.fit(fit_frame, report.scaled)
    frame = scaler.transform(frame)
    report.output_columns = list(frame.columns)
    return kept.with_features(frame), scaler, report


def apply_preprocess(
    matrix: FeatureMatrix, scaler: ScalerParams, report: ColumnReport
) -> FeatureMatrix:
    """Replay a fitted preprocessing on other rows (test folds, unlabeled pools).

    Values outside the fitted range scale outside [0, 1].
    """
    kept = filter_usable(matrix)
    frame, _ = _drop_internal(kept.features)
    frame = frame.fillna(0.0)
    missing = [c for c in report.output_columns if c not in frame.columns]
    if missing:
        raise DictionaryMismatchError(
            f"Matrix lacks {len(missing)} fitted columns (first: {missing[0]}); "
            "featurize it with the same encoding dictionary"
        )
    frame = scaler.transform(frame[report.output_columns])
    return kept.with_features(frame)
