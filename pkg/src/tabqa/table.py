"""Columnar table model: type inference, schema summaries, distinct column-cell pairs.

Tables are immutable after construction and hold every cell as raw text;
typing is inferred on demand so ingestion never destroys surface forms.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

NULL_MARKERS = frozenset({"", "na", "n/a", "null"})

_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class ColumnDType(str, Enum):
    INTEGER = "integer"
    FLOAT = "float"
    DATETIME = "datetime"
    CATEGORICAL = "categorical"


def is_null(cell: str) -> bool:
    """True for the recognized null markers (case-insensitive, after trim)."""
    return cell.strip().lower() in NULL_MARKERS


def parse_datetime(text: str) -> datetime | None:
    """Parse an ISO-8601 date or datetime; anything else returns None.

    Offset-aware values are normalized to naive UTC so mixed columns stay
    comparable.
    """
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        return None
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return dt


@dataclass(frozen=True)
class Table:
    """In-memory columnar table: a title, ordered columns, and raw text cells."""

    title: str
    column_names: list[str]
    columns: list[list[str]]

    def __post_init__(self) -> None:
        if len(self.column_names) < 1:
            raise ValueError("a table needs at least one column")
        if len(self.column_names) != len(self.columns):
            raise ValueError("column_names and columns must have the same length")
        if len(set(self.column_names)) != len(self.column_names):
            raise ValueError("column names must be unique")
        n_rows = len(self.columns[0])
        for name, cells in zip(self.column_names, self.columns):
            if len(cells) != n_rows:
                raise ValueError(f"column {name!r} has {len(cells)} cells, expected {n_rows}")

    @property
    def n_rows(self) -> int:
        return len(self.columns[0])

    @property
    def n_cols(self) -> int:
        return len(self.column_names)

    def column(self, name: str) -> list[str]:
        try:
            return self.columns[self.column_names.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def rows(self) -> list[list[str]]:
        """Cells in row-major order."""
        return [[col[i] for col in self.columns] for i in range(self.n_rows)]


@dataclass(frozen=True)
class ColumnSchema:
    """Summary of one column: inferred dtype plus compact example values.

    Numeric and datetime columns carry min/max over non-null cells (numeric
    values for integer/float, the original cell text for datetime); categorical
    columns carry up to three most frequent values, ties broken by ascending
    value.
    """

    column_name: str
    dtype: ColumnDType
    min_value: int | float | str | None = None
    max_value: int | float | str | None = None
    top_values: list[str] | None = None
    null_count: int = 0


@dataclass(frozen=True)
class CellPair:
    """A distinct (column, value) pair with its occurrence count."""

    column_name: str
    value: str
    frequency: int


@dataclass(frozen=True)
class CorpusStats:
    n_rows: int
    n_cols: int
    n_cells: int
    n_distinct: int
    n_categorical_cols: int


def infer_column_type(values: list[str]) -> ColumnDType:
    """Infer the dtype of a column from its raw cells.

    Every non-null value must parse for a type to be chosen; the ladder is
    integer, then float, then ISO datetime, otherwise categorical. Columns
    with only null markers are categorical.
    """
    non_null = [v.strip() for v in values if not is_null(v)]
    if not non_null:
        return ColumnDType.CATEGORICAL
    if all(_INT_RE.match(v) for v in non_null):
        return ColumnDType.INTEGER
    if all(_FLOAT_RE.match(v) for v in non_null):
        return ColumnDType.FLOAT
    if all(parse_datetime(v) is not None for v in non_null):
        return ColumnDType.DATETIME
    return ColumnDType.CATEGORICAL


def _top_categories(non_null: list[str], k: int = 3) -> list[str]:
    counts = Counter(non_null)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return [value for value, _ in ranked[:k]]


def build_schema(table: Table) -> list[ColumnSchema]:
    """One ColumnSchema per column, in table order."""
    schemas = []
    for name, cells in zip(table.column_names, table.columns):
        non_null = [c.strip() for c in cells if not is_null(c)]
        null_count = len(cells) - len(non_null)
        dtype = infer_column_type(cells)
        if dtype is ColumnDType.CATEGORICAL:
            schemas.append(ColumnSchema(name, dtype, top_values=_top_categories(non_null),
                                        null_count=null_count))
        elif dtype is ColumnDType.DATETIME:
            lo = min(non_null, key=parse_datetime)
            hi = max(non_null, key=parse_datetime)
            schemas.append(ColumnSchema(name, dtype, min_value=lo, max_value=hi,
                                        null_count=null_count))
        else:
            cast = int if dtype is ColumnDType.INTEGER else float
            parsed = [cast(v) for v in non_null]
            schemas.append(ColumnSchema(name, dtype, min_value=min(parsed), max_value=max(parsed),
                                        null_count=null_count))
    return schemas


def distinct_pairs_by_freq(table: Table) -> list[CellPair]:
    """All distinct (column, non-null cell) pairs, most frequent first.

    Ties break by (column_name, value) ascending, so the ordering is a total
    order and truncation under a budget is reproducible.
    """
    counts: Counter[tuple[str, str]] = Counter()
    for name, cells in zip(table.column_names, table.columns):
        for cell in cells:
            if not is_null(cell):
                counts[(name, cell.strip())] += 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0][0], item[0][1]))
    return [CellPair(col, value, freq) for (col, value), freq in ranked]


def table_stats(table: Table) -> CorpusStats:
    n_categorical = sum(
        1 for cells in table.columns if infer_column_type(cells) is ColumnDType.CATEGORICAL
    )
    return CorpusStats(
        n_rows=table.n_rows,
        n_cols=table.n_cols,
        n_cells=table.n_rows * table.n_cols,
        n_distinct=len(distinct_pairs_by_freq(table)),
        n_categorical_cols=n_categorical,
    )
