"""CSV ingestion for CICFlowMeter-style flow exports.

Loads a flow CSV into a typed in-memory table, treating the usual
"Infinity"/"NaN" sentinels as missing and dropping identifier columns
(Flow ID, Src IP, Dst IP, Timestamp) that carry no classification signal.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

DEFAULT_IDENTIFIER_COLUMNS = ("Flow ID", "Src IP", "Dst IP", "Timestamp")
DEFAULT_NA_TOKENS = ("", "NaN", "nan", "Infinity", "-Infinity", "inf", "-inf")

#: canonical missing token used when writing tables back to CSV
MISSING_TOKEN = "NaN"


@dataclass(frozen=True)
class IngestConfig:
    identifier_columns: tuple[str, ...] = DEFAULT_IDENTIFIER_COLUMNS
    sentinel_as_missing: tuple[str, ...] = DEFAULT_NA_TOKENS
    delimiter: str = ","
    has_header: bool = True

    def __post_init__(self):
        if len(set(self.identifier_columns)) != len(self.identifier_columns):
            raise ValueError("identifier_columns entries must be distinct")
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")


@dataclass
class Column:
    """One table column: numeric (float array, NaN = missing) or
    categorical (list of str, None = missing)."""

    name: str
    kind: str  # "numeric" | "categorical"
    values: object  # np.ndarray for numeric, list for categorical

    def __len__(self):
        return len(self.values)

    def missing_mask(self) -> np.ndarray:
        if self.kind == "numeric":
            return np.isnan(self.values)
        return np.array([v is None for v in self.values], dtype=bool)

    def n_missing(self) -> int:
        return int(self.missing_mask().sum())

    def __eq__(self, other):
        if not isinstance(other, Column):
            return NotImplemented
        if self.name != other.name or self.kind != other.kind:
            return False
        if self.kind == "numeric":
            return np.array_equal(self.values, other.values, equal_nan=True)
        return self.values == other.values


@dataclass
class RawTable:
    column_names: list[str]
    columns: list[Column]
    n_rows: int = field(default=0)

    def __post_init__(self):
        if len(set(self.column_names)) != len(self.column_names):
            raise DataError("duplicate column names in table")
        for col in self.columns:
            if len(col) != self.n_rows:
                raise DataError(
                    f"column {col.name!r} has {len(col)} entries, expected {self.n_rows}"
                )

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def column(self, name: str) -> Column:
        return self.columns[self.column_names.index(name)]

    def __eq__(self, other):
        if not isinstance(other, RawTable):
            return NotImplemented
        return (
            self.column_names == other.column_names
            and self.n_rows == other.n_rows
            and self.columns == other.columns
        )


def _parse_float(token: str) -> float | None:
    """Return a finite float, or None if the token is not a finite real."""
    try:
        v = float(token)
    except ValueError:
        return None
    if math.isfinite(v):
        return v
    return None


def load_csv(path, cfg: IngestConfig | None = None) -> RawTable:
    """Load a CSV into a RawTable.

    A column is typed numeric iff every non-missing cell parses as a finite
    real after sentinel substitution; otherwise it stays categorical.
    Ragged rows and duplicate header names are hard errors.
    """
    cfg = cfg or IngestConfig()
    sentinels = set(cfg.sentinel_as_missing)
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"input file not found: {path}") from None
    with fh:
        reader = csv.reader(fh, delimiter=cfg.delimiter)
        rows = list(reader)
    if not rows:
        raise DataError(f"input file is empty: {path}")

    if cfg.has_header:
        header = [h.strip() for h in rows[0]]
        data_rows = rows[1:]
    else:
        header = [f"col_{i}" for i in range(len(rows[0]))]
        data_rows = rows
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DataError(f"duplicate header names: {dupes}")

    width = len(header)
    for i, row in enumerate(data_rows):
        if len(row) != width:
            raise DataError(
                f"ragged row {i}: has {len(row)} fields, header has {width}"
            )

    n_rows = len(data_rows)
    columns = []
    for j, name in enumerate(header):
        cells = [row[j] for row in data_rows]
        cells = [None if c.strip() in sentinels else c for c in cells]
        parsed = [None if c is None else _parse_float(c) for c in cells]
        numeric = all(p is not None for c, p in zip(cells, parsed) if c is not None)
        if numeric:
            arr = np.array(
                [math.nan if p is None else p for p in parsed], dtype=np.float64
            )
            columns.append(Column(name, "numeric", arr))
        else:
            columns.append(Column(name, "categorical", cells))
    return RawTable(column_names=list(header), columns=columns, n_rows=n_rows)


def drop_identifiers(table: RawTable, cfg: IngestConfig | None = None) -> RawTable:
    """Drop identifier columns; absent names are skipped with a warning."""
    cfg = cfg or IngestConfig()
    wanted = set(cfg.identifier_columns)
    present = [n for n in table.column_names if n in wanted]
    absent = [n for n in cfg.identifier_columns if n not in table.column_names]
    if absent:
        warnings.warn(f"identifier columns not present, skipped: {absent}")
    keep = [i for i, n in enumerate(table.column_names) if n not in wanted]
    return RawTable(
        column_names=[table.column_names[i] for i in keep],
        columns=[table.columns[i] for i in keep],
        n_rows=table.n_rows,
    )


def write_csv(table: RawTable, path, delimiter: str = ",") -> None:
    """Write a RawTable back to CSV using the canonical missing token."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(table.column_names)
        for i in range(table.n_rows):
            row = []
            for col in table.columns:
                v = col.values[i]
                if col.kind == "numeric":
                    row.append(MISSING_TOKEN if math.isnan(v) else repr(float(v)))
                else:
                    row.append(MISSING_TOKEN if v is None else v)
            writer.writerow(row)
