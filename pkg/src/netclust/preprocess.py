"""Cleaning, digitization, scaling, and the train/test split.

Mirrors the usual flow-data preparation: drop (or impute) missing values,
ordinal-encode categoricals, normalize, then hold out a test fraction.
Scalers and encodings are fit on training data only and reused at scoring
time.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .ingest import Column, RawTable

MISSING_MODES = ("drop-column", "drop-row", "impute-median")
SCALE_METHODS = ("min-max", "z-score")


@dataclass(frozen=True)
class MissingPolicy:
    mode: str = "drop-column"
    column_drop_threshold: float = 0.0

    def __post_init__(self):
        if self.mode not in MISSING_MODES:
            raise ValueError(f"mode must be one of {MISSING_MODES}")
        if not 0.0 <= self.column_drop_threshold <= 1.0:
            raise ValueError("column_drop_threshold must be in [0, 1]")


@dataclass
class FeatureMatrix:
    """Dense numeric feature table with a per-cell missing mask.

    ``encodings`` records the ordinal mapping applied to each originally
    categorical column so the same mapping can be replayed on new data.
    """

    values: np.ndarray  # n_rows x n_features, float64, NaN where missing
    feature_names: list[str]
    encodings: dict[str, dict[str, int]] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError("feature matrix must be 2-dimensional")
        if self.values.shape[1] != len(self.feature_names):
            raise DataError("feature_names length must match matrix width")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def mask(self) -> np.ndarray:
        """Boolean missing mask, True where a cell is missing."""
        return np.isnan(self.values)

    def require_complete(self, context: str = "operation") -> np.ndarray:
        if np.isnan(self.values).any():
            raise DataError(f"{context} requires a matrix with no missing cells")
        return self.values

    def take_rows(self, idx) -> "FeatureMatrix":
        return FeatureMatrix(self.values[idx], list(self.feature_names), dict(self.encodings))


@dataclass
class Scaler:
    method: str
    feature_names: list[str]
    # min-max: p0 = per-feature min, p1 = per-feature max
    # z-score: p0 = per-feature mean, p1 = per-feature stddev
    p0: np.ndarray = None
    p1: np.ndarray = None

    def __post_init__(self):
        if self.method not in SCALE_METHODS:
            raise ValueError(f"method must be one of {SCALE_METHODS}")


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0
    stratify: bool = True

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be strictly between 0 and 1")


def clean(table: RawTable, policy: MissingPolicy | None = None) -> RawTable:
    """Apply the missing-value policy; errors if nothing survives."""
    policy = policy or MissingPolicy()
    if policy.mode == "drop-column":
        keep = []
        for i, col in enumerate(table.columns):
            frac = col.n_missing() / table.n_rows if table.n_rows else 0.0
            if frac <= policy.column_drop_threshold:
                keep.append(i)
        if not keep:
            raise DataError("missing-value policy removed every column")
        return RawTable(
            column_names=[table.column_names[i] for i in keep],
            columns=[table.columns[i] for i in keep],
            n_rows=table.n_rows,
        )

    if policy.mode == "drop-row":
        bad = np.zeros(table.n_rows, dtype=bool)
        for col in table.columns:
            bad |= col.missing_mask()
        keep_rows = ~bad
        if not keep_rows.any():
            raise DataError("missing-value policy removed every row")
        new_cols = []
        for col in table.columns:
            if col.kind == "numeric":
                new_cols.append(Column(col.name, "numeric", col.values[keep_rows]))
            else:
                vals = [v for v, k in zip(col.values, keep_rows) if k]
                new_cols.append(Column(col.name, "categorical", vals))
        return RawTable(
            column_names=list(table.column_names),
            columns=new_cols,
            n_rows=int(keep_rows.sum()),
        )

    # impute-median
    new_cols = []
    for col in table.columns:
        if col.kind == "numeric":
            vals = col.values.copy()
            miss = np.isnan(vals)
            if miss.any():
                present = vals[~miss]
                if present.size == 0:
                    raise DataError(f"column {col.name!r} is entirely missing")
                vals[miss] = float(np.median(present))
            new_cols.append(Column(col.name, "numeric", vals))
        else:
            present = [v for v in col.values if v is not None]
            if any(v is None for v in col.values):
                if not present:
                    raise DataError(f"column {col.name!r} is entirely missing")
                counts = Counter(present)
                top = max(counts.values())
                mode_val = min(v for v, c in counts.items() if c == top)
                vals = [mode_val if v is None else v for v in col.values]
            else:
                vals = list(col.values)
            new_cols.append(Column(col.name, "categorical", vals))
    return RawTable(
        column_names=list(table.column_names), columns=new_cols, n_rows=table.n_rows
    )


def digitize(
    table: RawTable, encodings: dict[str, dict[str, int]] | None = None
) -> FeatureMatrix:
    """Convert a table to a numeric matrix.

    Categorical columns get an ordinal code: distinct values sorted
    lexicographically, assigned 0..v-1. When ``encodings`` is supplied
    (scoring path) the stored mapping is replayed; an unseen value is a
    hard error.
    """
    out = np.empty((table.n_rows, table.n_cols), dtype=np.float64)
    used_encodings: dict[str, dict[str, int]] = {}
    for j, col in enumerate(table.columns):
        if col.kind == "numeric":
            out[:, j] = col.values
            continue
        if encodings is not None and col.name in encodings:
            mapping = encodings[col.name]
        else:
            distinct = sorted({v for v in col.values if v is not None})
            mapping = {v: i for i, v in enumerate(distinct)}
        used_encodings[col.name] = mapping
        column = np.empty(table.n_rows, dtype=np.float64)
        for i, v in enumerate(col.values):
            if v is None:
                column[i] = math.nan
            elif v in mapping:
                column[i] = float(mapping[v])
            else:
                raise DataError(f"unseen category {v!r} in column {col.name!r}")
        out[:, j] = column
    return FeatureMatrix(out, list(table.column_names), used_encodings)


def fit_scaler(m: FeatureMatrix, method: str = "min-max") -> Scaler:
    """Learn per-feature scaling parameters (training rows only)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN slices
        if method == "min-max":
            p0 = np.nanmin(m.values, axis=0)
            p1 = np.nanmax(m.values, axis=0)
        elif method == "z-score":
            p0 = np.nanmean(m.values, axis=0)
            p1 = np.nanstd(m.values, axis=0)
        else:
            raise ValueError(f"method must be one of {SCALE_METHODS}")
    return Scaler(method, list(m.feature_names), np.nan_to_num(p0), np.nan_to_num(p1))


def apply_scaler(s: Scaler, m: FeatureMatrix) -> FeatureMatrix:
    """Scale a matrix with previously learned parameters.

    Constant features (max = min, or stddev = 0) map to 0.0.
    """
    if s.feature_names != m.feature_names:
        raise DataError("scaler feature names do not match matrix feature names")
    if s.method == "min-max":
        span = s.p1 - s.p0
        safe = np.where(span == 0, 1.0, span)
        out = (m.values - s.p0) / safe
        out = np.where(span == 0, np.where(np.isnan(m.values), np.nan, 0.0), out)
    else:
        safe = np.where(s.p1 == 0, 1.0, s.p1)
        out = (m.values - s.p0) / safe
        out = np.where(s.p1 == 0, np.where(np.isnan(m.values), np.nan, 0.0), out)
    return FeatureMatrix(out, list(m.feature_names), dict(m.encodings))


def invert_scaler(s: Scaler, m: FeatureMatrix) -> FeatureMatrix:
    """Undo apply_scaler for non-constant features (constant features
    collapse to their stored min/mean)."""
    if s.feature_names != m.feature_names:
        raise DataError("scaler feature names do not match matrix feature names")
    if s.method == "min-max":
        span = s.p1 - s.p0
        out = m.values * span + s.p0
    else:
        out = m.values * s.p1 + s.p0
    return FeatureMatrix(out, list(m.feature_names), dict(m.encodings))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(
    m: FeatureMatrix,
    labels: np.ndarray | None = None,
    spec: SplitSpec | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic train/test index split.

    |test| = round(test_fraction * n_rows); stratified mode keeps each
    class's proportion within one row. Classes with fewer than 2 members
    go wholly to train with a warning.
    """
    spec = spec or SplitSpec()
    n = m.n_rows
    if labels is not None:
        labels = np.asarray(labels)
        if len(labels) != n:
            raise DataError("labels length must equal number of rows")
    rng = np.random.default_rng(spec.seed)
    n_test = _round_half_up(spec.test_fraction * n)

    if labels is None or not spec.stratify:
        perm = rng.permutation(n)
        test = np.sort(perm[:n_test])
        train = np.sort(perm[n_test:])
        return train, test

    classes = np.unique(labels)
    eligible = []
    forced_train: list[np.ndarray] = []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        if len(idx) < 2:
            warnings.warn(
                f"class {c} has fewer than 2 members; assigned wholly to train"
            )
            forced_train.append(idx)
        else:
            eligible.append((c, idx))

    # largest-remainder allocation of the test budget across classes
    targets = []
    for c, idx in eligible:
        exact = spec.test_fraction * len(idx)
        targets.append([int(math.floor(exact)), exact - math.floor(exact), idx])
    allocated = sum(t[0] for t in targets)
    leftover = n_test - allocated
    order = sorted(range(len(targets)), key=lambda i: (-targets[i][1], i))
    for i in order:
        if leftover <= 0:
            break
        if targets[i][0] < len(targets[i][2]):
            targets[i][0] += 1
            leftover -= 1

    test_parts, train_parts = [], list(forced_train)
    for take, _, idx in targets:
        perm = idx[rng.permutation(len(idx))]
        test_parts.append(perm[:take])
        train_parts.append(perm[take:])
    test = np.sort(np.concatenate(test_parts)) if test_parts else np.array([], dtype=int)
    train = np.sort(np.concatenate(train_parts)) if train_parts else np.array([], dtype=int)
    return train.astype(int), test.astype(int)
