"""Numeric regression tables: CSV ingestion, unit rescaling, subsetting, shuffling."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


@dataclass(frozen=True)
class RescaleRecord:
    min: float
    max: float

    def __post_init__(self):
        if self.max < self.min:
            raise DataError(f"rescale record has max {self.max} < min {self.min}")


@dataclass(frozen=True)
class Dataset:
    """Immutable numeric table with one designated target column.

    ``values`` has shape (N, E) and is stored column-major and read-only.
    ``rescale_records`` is empty until :func:`rescale_unit` has been applied.
    """

    names: tuple[str, ...]
    values: np.ndarray
    target: str
    rescale_records: dict[str, RescaleRecord] = field(default_factory=dict)
    constant_columns: tuple[str, ...] = ()
    n_dropped: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, order="F", copy=True)
        if values.ndim != 2:
            raise DataError("values must be a 2-D array")
        if values.shape[1] != len(self.names):
            raise DataError(
                f"{values.shape[1]} columns but {len(self.names)} names")
        if values.shape[0] < 2:
            raise DataError(f"need at least 2 rows, got {values.shape[0]}")
        if len(set(self.names)) != len(self.names):
            dupes = sorted({n for n in self.names if self.names.count(n) > 1})
            raise DataError(f"duplicate column names: {dupes}")
        if self.target not in self.names:
            raise DataError(f"target column {self.target!r} not found")
        if not np.all(np.isfinite(values)):
            raise DataError("values contain non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", values)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        """Embedding dimension E (features plus target)."""
        return self.values.shape[1]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.names if n != self.target)

    @property
    def is_rescaled(self) -> bool:
        return len(self.rescale_records) == self.n_cols

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown column {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)]

    def columns(self, names: Iterable[str]) -> np.ndarray:
        return self.values[:, [self.index(n) for n in names]]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.names)
            for row in self.values:
                writer.writerow([repr(float(v)) for v in row])


def from_columns(columns: dict[str, Sequence[float]], target: str) -> Dataset:
    """Build a Dataset from an ordered mapping of column name to values."""
    names = tuple(columns)
    lengths = {len(v) for v in columns.values()}
    if len(lengths) != 1:
        raise DataError(f"columns have differing lengths: {sorted(lengths)}")
    values = np.column_stack([np.asarray(columns[n], dtype=np.float64) for n in names])
    return Dataset(names, values, target)


def load_csv(path: str | Path, target: str, drop_incomplete: bool = False) -> Dataset:
    """Read a headed, comma-separated numeric file.

    Every cell must parse as a finite decimal number. With
    ``drop_incomplete`` rows holding empty or non-finite cells are dropped
    and counted instead of raising; cells that are not numbers at all
    still raise.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise DataError(f"{path}: duplicate header {dupes}")
        if target not in header:
            raise DataError(f"{path}: target column {target!r} absent")

        rows = []
        dropped = 0
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(header):
                raise DataError(
                    f"{path}: row {lineno} has {len(raw)} fields, expected {len(header)}")
            row = []
            incomplete = False
            for col, cell in zip(header, raw):
                cell = cell.strip()
                if cell == "" and drop_incomplete:
                    incomplete = True
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric cell {cell!r} at row {lineno}, column {col!r}"
                    ) from None
                if not math.isfinite(value):
                    if drop_incomplete:
                        incomplete = True
                        continue
                    raise DataError(
                        f"{path}: non-numeric cell {cell!r} at row {lineno}, column {col!r}")
                row.append(value)
            if incomplete:
                dropped += 1
                continue
            rows.append(row)

    if dropped:
        logger.warning("%s: dropped %d incomplete row(s)", path, dropped)
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    return Dataset(tuple(header), np.array(rows), target, n_dropped=dropped)


def rescale_unit(d: Dataset) -> Dataset:
    """Map every column affinely onto [0, 1].

    Constant columns become all zeros and are listed in
    ``constant_columns``. Records of an earlier rescale are kept, so
    ``rescale_records`` always refers to the original units.
    """
    lo = d.values.min(axis=0)
    hi = d.values.max(axis=0)
    span = hi - lo
    constant = span == 0
    out = np.zeros_like(d.values)
    ok = ~constant
    out[:, ok] = (d.values[:, ok] - lo[ok]) / span[ok]
    # (x - min) / (max - min) can round to 1 - eps at the max; pin the extremes
    out[:, ok] = np.where(d.values[:, ok] == hi[ok], 1.0, out[:, ok])
    out[:, ok] = np.where(d.values[:, ok] == lo[ok], 0.0, out[:, ok])

    records = {}
    for j, name in enumerate(d.names):
        if name in d.rescale_records:
            records[name] = d.rescale_records[name]
        else:
            records[name] = RescaleRecord(float(lo[j]), float(hi[j]))
    const_names = tuple(n for n, c in zip(d.names, constant) if c)
    if const_names:
        logger.warning("constant column(s) rescaled to zeros: %s", ", ".join(const_names))
    return replace(d, values=out, rescale_records=records, constant_columns=const_names)


def shuffle_target(d: Dataset, seed: int) -> Dataset:
    """Replace the target by a seeded random permutation of itself."""
    rng = np.random.default_rng(seed)
    values = np.array(d.values)
    j = d.index(d.target)
    values[:, j] = rng.permutation(values[:, j])
    return replace(d, values=values)


def subset(d: Dataset, names: Sequence[str]) -> Dataset:
    """Restrict ``d`` to the named columns, in the given order.

    The target must be among ``names``; when it is not, the first named
    column becomes the target of the result.
    """
    if len(names) == 0:
        raise DataError("subset needs at least one column")
    idx = [d.index(n) for n in names]
    target = d.target if d.target in names else names[0]
    records = {n: d.rescale_records[n] for n in names if n in d.rescale_records}
    const = tuple(n for n in d.constant_columns if n in names)
    return Dataset(tuple(names), d.values[:, idx], target,
                   rescale_records=records, constant_columns=const,
                   n_dropped=d.n_dropped)


ABALONE_COLUMNS = (
    "Sex", "Length", "Diameter", "Height", "WholeWeight",
    "ShuckedWeight", "VisceraWeight", "ShellWeight", "Rings",
)
# 1-based instance numbers removed as outliers in the published experiment
ABALONE_OUTLIERS = (1418, 2052)


def prepare_abalone(raw_path: str | Path) -> Dataset:
    """Preprocess the UCI ``abalone.data`` file (no header, 4177 rows).

    Drops the categorical ``Sex`` column and the two outlier instances,
    leaving 4175 rows, 7 physical measurements and the ``Rings`` target.
    This is a fixed recipe, not an outlier detector.
    """
    rows = []
    with open(raw_path, newline="", encoding="utf-8") as fh:
        for i, raw in enumerate(csv.reader(fh), start=1):
            if not raw:
                continue
            if i in ABALONE_OUTLIERS:
                continue
            rows.append([float(c) for c in raw[1:]])
    return Dataset(ABALONE_COLUMNS[1:], np.array(rows), "Rings")
