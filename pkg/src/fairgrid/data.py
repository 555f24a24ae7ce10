"""Dataset ingestion: CSV parsing, schema binding, fold planning, and scaling.

Tables are immutable after construction. Numeric columns are float64 arrays,
categorical columns are object arrays of strings; a column is numeric only
when every non-empty cell looks like a decimal number. Empty cells survive
parsing (numeric ones become NaN) but are rejected when a schema is bound,
since the engine does not impute.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np


class CsvError(ValueError):
    """Raised for malformed CSV input."""


class SchemaError(ValueError):
    """Raised when a dataset does not satisfy its declared schema."""


_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _is_number(cell: str) -> bool:
    return bool(_NUMBER_RE.match(cell.strip()))


@dataclass(frozen=True)
class DataTable:
    names: tuple[str, ...]
    columns: dict[str, np.ndarray] = field(repr=False)

    @property
    def n_rows(self) -> int:
        if not self.names:
            return 0
        return len(self.columns[self.names[0]])

    def is_numeric(self, name: str) -> bool:
        return self.columns[name].dtype.kind == "f"

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"no column named '{name}'")
        return self.columns[name]

    def numeric_names(self) -> list[str]:
        return [n for n in self.names if self.is_numeric(n)]

    def subset(self, rows: Sequence[int]) -> "DataTable":
        idx = np.asarray(rows, dtype=int)
        return DataTable(self.names, {n: self.columns[n][idx] for n in self.names})

    def without(self, name: str) -> "DataTable":
        names = tuple(n for n in self.names if n != name)
        return DataTable(names, {n: self.columns[n] for n in names})

    def with_columns(self, updates: dict[str, np.ndarray]) -> "DataTable":
        merged = dict(self.columns)
        for name, values in updates.items():
            if name not in merged:
                raise KeyError(f"no column named '{name}'")
            if len(values) != self.n_rows:
                raise ValueError("replacement column has wrong length")
            merged[name] = np.asarray(values)
        return DataTable(self.names, merged)

    def append_rows(self, rows: Sequence[int]) -> "DataTable":
        """New table with copies of the given row indices appended at the end."""
        idx = np.asarray(rows, dtype=int)
        return DataTable(
            self.names,
            {n: np.concatenate([self.columns[n], self.columns[n][idx]]) for n in self.names},
        )

    def drop_rows(self, rows: Sequence[int]) -> "DataTable":
        keep = np.ones(self.n_rows, dtype=bool)
        keep[np.asarray(rows, dtype=int)] = False
        return DataTable(self.names, {n: self.columns[n][keep] for n in self.names})

    def equals(self, other: "DataTable") -> bool:
        if self.names != other.names or self.n_rows != other.n_rows:
            return False
        for name in self.names:
            a, b = self.columns[name], other.columns[name]
            if a.dtype.kind != b.dtype.kind:
                return False
            if a.dtype.kind == "f":
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif not np.array_equal(a, b):
                return False
        return True


def parse_csv(data: bytes | str) -> DataTable:
    """Parse CSV bytes into a typed table.

    Dialect: comma separator, LF or CRLF terminators, optional double-quote
    quoting with doubled-quote escapes, no comment lines. The first row is
    the header. Row numbers in errors are 1-based and count the header.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if text.strip() == "":
        raise CsvError("empty input")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        rows = list(reader)
    except csv.Error as exc:
        raise CsvError(f"malformed CSV: {exc}") from exc
    rows = [r for r in rows if r != []]
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise CsvError(f"duplicate header column(s): {', '.join(dupes)}")
    if any(h == "" for h in header):
        raise CsvError("blank header column name")

    width = len(header)
    cells: list[list[str]] = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise CsvError(f"ragged row at row {i}: expected {width} columns, found {len(row)}")
        cells.append(row)

    columns: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in cells]
        non_empty = [c for c in raw if c.strip() != ""]
        if non_empty and all(_is_number(c) for c in non_empty):
            values = np.array(
                [float(c) if c.strip() != "" else np.nan for c in raw], dtype=float
            )
        else:
            values = np.array([c for c in raw], dtype=object)
        columns[name] = values
    return DataTable(tuple(header), columns)


def write_csv(table: DataTable) -> bytes:
    """Serialize a table; numeric cells use shortest round-trip decimals."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.names)
    numeric = {n: table.is_numeric(n) for n in table.names}
    for i in range(table.n_rows):
        row = []
        for name in table.names:
            v = table.columns[name][i]
            if numeric[name]:
                row.append("" if np.isnan(v) else repr(float(v)))
            else:
                row.append(str(v))
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


@dataclass(frozen=True)
class SensitiveFeature:
    column: str
    privileged: tuple[str, ...]


@dataclass(frozen=True)
class DatasetSchema:
    label: str
    task: str  # "classification" | "regression"
    positive: Optional[str] = None
    sensitive: tuple[SensitiveFeature, ...] = ()

    def __post_init__(self):
        if self.task not in ("classification", "regression"):
            raise SchemaError(f"unknown task '{self.task}'")
        if self.task == "classification" and self.positive is None:
            raise SchemaError("classification schemas need a positive label value")
        if any(s.column == self.label for s in self.sensitive):
            raise SchemaError("the label column cannot be a sensitive feature")
        seen = set()
        for s in self.sensitive:
            if s.column in seen:
                raise SchemaError(f"sensitive column '{s.column}' listed twice")
            seen.add(s.column)


def _value_matches(column: np.ndarray, cell_index: int, wanted: str) -> bool:
    if column.dtype.kind == "f":
        return _is_number(wanted) and column[cell_index] == float(wanted)
    return str(column[cell_index]) == wanted


def _membership(column: np.ndarray, wanted: Sequence[str]) -> np.ndarray:
    if column.dtype.kind == "f":
        numeric = [float(w) for w in wanted if _is_number(w)]
        out = np.zeros(len(column), dtype=bool)
        for v in numeric:
            out |= column == v
        return out
    return np.isin(column.astype(str), np.asarray(list(wanted), dtype=str))


@dataclass(frozen=True)
class BoundDataset:
    table: DataTable
    schema: DatasetSchema
    privileged_mask: np.ndarray = field(repr=False)

    def subset(self, rows: Sequence[int]) -> "BoundDataset":
        idx = np.asarray(rows, dtype=int)
        return BoundDataset(self.table.subset(idx), self.schema, self.privileged_mask[idx])

    def binary_labels(self) -> np.ndarray:
        """0/1 vector marking rows whose label equals the positive value."""
        if self.schema.task != "classification":
            raise SchemaError("binary labels are only defined for classification")
        col = self.table.column(self.schema.label)
        return _membership(col, [self.schema.positive]).astype(float)

    def targets(self) -> np.ndarray:
        if self.schema.task == "classification":
            return self.binary_labels()
        col = self.table.column(self.schema.label)
        if col.dtype.kind != "f":
            raise SchemaError(f"regression label column '{self.schema.label}' is not numeric")
        return col.astype(float)


def bind_schema(table: DataTable, schema: DatasetSchema) -> BoundDataset:
    """Attach a schema to a table and compute the privileged-row mask.

    A row is privileged iff every sensitive feature takes one of its
    privileged values (conjunction). Missing cells anywhere in the table are
    rejected here with their row/column location.
    """
    for name in (schema.label, *[s.column for s in schema.sensitive]):
        if name not in table.names:
            raise SchemaError(f"column '{name}' not found in the dataset")

    for name in table.names:
        col = table.columns[name]
        if col.dtype.kind == "f":
            missing = np.where(np.isnan(col))[0]
        else:
            missing = np.where(np.array([str(v).strip() == "" for v in col]))[0]
        if missing.size:
            raise SchemaError(
                f"missing value at row {int(missing[0]) + 2}, column '{name}' (imputation is not supported)"
            )

    if schema.task == "classification":
        label_col = table.column(schema.label)
        if not _membership(label_col, [schema.positive]).any():
            raise SchemaError(
                f"positive value '{schema.positive}' never occurs in label column '{schema.label}'"
            )

    mask = np.ones(table.n_rows, dtype=bool)
    for s in schema.sensitive:
        mask &= _membership(table.column(s.column), s.privileged)
    return BoundDataset(table, schema, mask)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignment: np.ndarray = field(repr=False)
    stratified: bool = False
    downgraded: bool = False

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.where(self.assignment == fold)[0]
        train = np.where(self.assignment != fold)[0]
        return train, test


def make_folds(bound: BoundDataset, k: int, seed: int, stratified: bool) -> FoldPlan:
    """Assign rows to k folds, optionally stratified on the label.

    Stratification deals each label class round-robin with a fold cursor
    carried across classes, so fold sizes and per-class fold counts both
    differ by at most one. A class smaller than k downgrades the plan to an
    unstratified one, recorded in ``downgraded``.
    """
    n = bound.table.n_rows
    if k < 2 or k > n:
        raise ValueError(f"k={k} out of range for {n} rows")
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=int)
    downgraded = False

    if stratified:
        labels = bound.table.column(bound.schema.label)
        values = [str(v) for v in labels]
        classes = sorted(set(values))
        if min(values.count(c) for c in classes) < k:
            stratified, downgraded = False, True

    if stratified:
        cursor = 0
        for c in classes:
            members = np.array([i for i, v in enumerate(values) if v == c], dtype=int)
            members = members[rng.permutation(len(members))]
            for i in members:
                assignment[i] = cursor % k
                cursor += 1
    else:
        order = rng.permutation(n)
        for pos, row in enumerate(order):
            assignment[row] = pos % k
    return FoldPlan(k, seed, assignment, stratified=stratified, downgraded=downgraded)


def holdout_split(n_rows: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic shuffled train/test split; both sides non-empty."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test fraction must lie strictly between 0 and 1")
    if n_rows < 2:
        raise ValueError("at least two rows required for a holdout split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_rows)
    n_test = int(round(test_fraction * n_rows))
    n_test = min(max(n_test, 1), n_rows - 1)
    test = np.sort(order[:n_test])
    train = np.sort(order[n_test:])
    return train, test


SCALER_KINDS = ("none", "standard", "min-max")


@dataclass(frozen=True)
class Scaler:
    kind: str
    params: dict[str, tuple[float, float]] = field(default_factory=dict)  # mean/std or min/max


def fit_scaler(
    kind: str,
    table: DataTable,
    training_rows: Sequence[int],
    columns: Optional[Sequence[str]] = None,
) -> Scaler:
    """Fit per-column scaling parameters on the training rows only.

    ``columns`` restricts scaling (the engine excludes the label column);
    by default every numeric column is scaled. Standard scaling uses the
    population standard deviation.
    """
    if kind not in SCALER_KINDS:
        raise ValueError(f"unknown scaler kind '{kind}'")
    if kind == "none":
        return Scaler("none")
    idx = np.asarray(training_rows, dtype=int)
    wanted = table.numeric_names() if columns is None else [c for c in columns if table.is_numeric(c)]
    params: dict[str, tuple[float, float]] = {}
    for name in wanted:
        values = table.column(name)[idx]
        if kind == "standard":
            params[name] = (float(np.mean(values)), float(np.std(values)))
        else:
            params[name] = (float(np.min(values)), float(np.max(values)))
    return Scaler(kind, params)


def apply_scaler(scaler: Scaler, table: DataTable) -> DataTable:
    """Transform the fitted columns; degenerate columns map to all zeros."""
    if scaler.kind == "none":
        return table
    updates: dict[str, np.ndarray] = {}
    for name, (a, b) in scaler.params.items():
        values = table.column(name).astype(float)
        if scaler.kind == "standard":
            mean, std = a, b
            updates[name] = np.zeros_like(values) if std == 0.0 else (values - mean) / std
        else:
            lo, hi = a, b
            updates[name] = np.zeros_like(values) if hi == lo else (values - lo) / (hi - lo)
    return table.with_columns(updates)
