"""Dataset ingestion, standardization, splitting and MCAR masking."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .rng import stream


class Task(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


class DataError(ValueError):
    """Malformed input data."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DataMatrix:
    """Complete numeric feature table plus target column."""

    values: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    task: Task = Task.REGRESSION

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        target = np.asarray(self.target, dtype=np.float64)
        if values.ndim != 2:
            raise DataError("values must be a 2-D matrix")
        if target.shape != (values.shape[0],):
            raise DataError(f"target has shape {target.shape}, expected ({values.shape[0]},)")
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(target)):
            raise DataError("DataMatrix entries must be finite")
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != values.shape[1] or len(set(names)) != len(names):
            raise DataError("feature_names must hold exactly p distinct labels")
        task = Task(self.task)
        if task is Task.CLASSIFICATION:
            if np.any(target != np.round(target)) or np.any(target < 0):
                raise DataError("classification targets must be non-negative integer codes")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "target", _frozen(target))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "task", task)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        if self.task is not Task.CLASSIFICATION:
            return 0
        return int(self.target.max()) + 1 if self.n else 0

    def take(self, rows: Sequence[int] | np.ndarray) -> "DataMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        return DataMatrix(self.values[rows], self.target[rows], self.feature_names, self.task)

    def with_values(self, values: np.ndarray, target: np.ndarray | None = None) -> "DataMatrix":
        return DataMatrix(values, self.target if target is None else target, self.feature_names, self.task)


class MaskedMatrix:
    """A :class:`DataMatrix` with a missingness mask (``True`` = observed).

    ``values`` exposes the table with NaN in unobserved cells.  The complete
    table is kept privately so that :mod:`imputeshap.metrics` can score
    imputations against it; nothing else reads it.
    """

    __slots__ = ("_base", "_mask", "_rate", "_values")

    def __init__(self, base: DataMatrix, mask: np.ndarray, rate: float | None = None):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != base.values.shape:
            raise DataError(f"mask shape {mask.shape} does not match data shape {base.values.shape}")
        n_missing = int((~mask).sum())
        if rate is None:
            rate = n_missing / mask.size if mask.size else 0.0
        values = np.where(mask, base.values, np.nan)
        object.__setattr__(self, "_base", base)
        object.__setattr__(self, "_mask", _frozen(mask))
        object.__setattr__(self, "_rate", float(rate))
        object.__setattr__(self, "_values", _frozen(values))

    def __setattr__(self, name, value):
        raise AttributeError("MaskedMatrix is immutable")

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def rate(self) -> float:
        return self._rate

    @property
    def target(self) -> np.ndarray:
        return self._base.target

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self._base.feature_names

    @property
    def task(self) -> Task:
        return self._base.task

    @property
    def n(self) -> int:
        return self._mask.shape[0]

    @property
    def p(self) -> int:
        return self._mask.shape[1]

    @property
    def n_missing(self) -> int:
        return int((~self._mask).sum())

    def fully_missing_rows(self) -> np.ndarray:
        return np.flatnonzero(~self._mask.any(axis=1))

    def __repr__(self) -> str:
        return f"MaskedMatrix(n={self.n}, p={self.p}, rate={self.rate:g}, missing={self.n_missing})"


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine map ``(x - mean) / scale`` (population std)."""

    mean: np.ndarray
    scale: np.ndarray
    zero_variance: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.scale

    def inverse_transform(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.scale + self.mean


def fit_standardizer(train: DataMatrix | np.ndarray) -> Standardizer:
    """Fit on training data.  Zero-variance columns keep mean 0 / scale 1 and
    are flagged, so they pass through unchanged."""
    values = train.values if isinstance(train, DataMatrix) else np.asarray(train, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] == 0:
        raise DataError("cannot standardize an empty table")
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    flat = ~(std > 1e-12 * np.maximum(1.0, np.abs(mean)))
    mean = np.where(flat, 0.0, mean)
    std = np.where(flat, 1.0, std)
    return Standardizer(_frozen(mean), _frozen(std), _frozen(flat))


def apply_standardizer(s: Standardizer, data: DataMatrix) -> DataMatrix:
    return data.with_values(s.transform(data.values))


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0


def split(data: DataMatrix, spec: SplitSpec) -> tuple[DataMatrix, DataMatrix]:
    """Deterministic train/test partition; both sides keep the original row order."""
    if not 0.0 < spec.test_fraction < 1.0:
        raise DataError("test_fraction must lie in (0, 1)")
    n_test = math.floor(spec.test_fraction * data.n + 0.5)
    if n_test < 1 or n_test >= data.n:
        raise DataError(f"split of n={data.n} at test_fraction={spec.test_fraction} leaves an empty side")
    rng = stream(spec.seed, "split")
    test_rows = np.sort(rng.permutation(data.n)[:n_test])
    in_test = np.zeros(data.n, dtype=bool)
    in_test[test_rows] = True
    return data.take(np.flatnonzero(~in_test)), data.take(test_rows)


def n_missing_cells(rate: float, n_cells: int) -> int:
    # the epsilon absorbs representation error such as 0.29 * 100 = 28.999999999999996
    return math.floor(rate * n_cells + 1e-9)


def apply_mcar(data: DataMatrix, rate: float, seed: int) -> MaskedMatrix:
    """Mark exactly ``floor(rate * n * p)`` cells unobserved, chosen uniformly
    without replacement from the ``(seed, "mcar")`` stream."""
    if not 0.0 <= rate < 1.0:
        raise DataError(f"missing rate must lie in [0, 1), got {rate}")
    n_cells = data.n * data.p
    k = n_missing_cells(rate, n_cells)
    mask = np.ones(n_cells, dtype=bool)
    if k:
        cells = stream(seed, "mcar").choice(n_cells, size=k, replace=False)
        mask[cells] = False
    return MaskedMatrix(data, mask.reshape(data.n, data.p), rate)


def observed_rows(masked: MaskedMatrix | np.ndarray) -> list[np.ndarray]:
    """Obs set per column: indices of rows where that column is observed."""
    mask = masked.mask if isinstance(masked, MaskedMatrix) else np.asarray(masked, dtype=bool)
    return [np.flatnonzero(mask[:, j]) for j in range(mask.shape[1])]


def load_csv(path: str | Path, target_column: str, task: Task | str = Task.REGRESSION) -> DataMatrix:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row expected") from None
        if target_column not in header:
            raise DataError(f"{path}: target column {target_column!r} not in header")
        t = header.index(target_column)
        rows, targets = [], []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DataError(f"{path}: row {lineno} has {len(record)} cells, expected {len(header)}")
            parsed = []
            for col, cell in zip(header, record):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {lineno}, column {col!r}: cannot parse {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {lineno}, column {col!r}: non-finite value {cell!r}")
                parsed.append(v)
            targets.append(parsed.pop(t))
            rows.append(parsed)
    names = header[:t] + header[t + 1:]
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return DataMatrix(values, np.array(targets), tuple(names), Task(task))


def write_csv(path: str | Path, data: DataMatrix | np.ndarray, feature_names: Sequence[str] | None = None,
              target: np.ndarray | None = None, target_column: str = "y") -> None:
    """Write a table in the same schema :func:`load_csv` reads.  NaN cells are
    written empty."""
    if isinstance(data, DataMatrix):
        values, feature_names, target = data.values, data.feature_names, data.target
    else:
        values = np.asarray(data, dtype=np.float64)
    names = list(feature_names or [f"x{j}" for j in range(values.shape[1])])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ([target_column] if target is not None else []))
        for i, row in enumerate(values):
            cells = ["" if math.isnan(v) else repr(float(v)) for v in row]
            if target is not None:
                cells.append(repr(float(target[i])))
            w.writerow(cells)


def save_mask(path: str | Path, mask: np.ndarray) -> None:
    np.savetxt(path, np.asarray(mask, dtype=np.int8), fmt="%d", delimiter=",")


def load_mask(path: str | Path) -> np.ndarray:
    m = np.loadtxt(path, delimiter=",", dtype=np.int8, ndmin=2)
    if not np.isin(m, (0, 1)).all():
        raise DataError(f"{path}: mask must contain only 0/1")
    return m.astype(bool)
