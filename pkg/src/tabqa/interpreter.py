"""Deterministic single-line table expression language for the solver loop.

Grammar (one action per line, stages chained with "|>"):

    filter(col, op, literal)      op: == != < <= > >=
    contains(col, substring)      case-insensitive substring filter
    project(col1, col2, ...)
    agg(col, fn)                  fn: mean sum min max count; yields a scalar
    sort(col, asc|desc)
    head(n)
    distinct(col)
    cast(col, dtype)              dtype: integer float datetime categorical

Arguments may be quoted with ' or " (needed for literals containing commas).
Every parseable action yields an observation or an "Error: ..." text; the
interpreter never raises. Casts persist on the environment across actions.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from .table import ColumnDType, Table, infer_column_type, is_null, parse_datetime

MAX_RENDER_ROWS = 5
SIGNIFICANT_DIGITS = 12

_STAGE_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*\((.*)\)\s*$", re.DOTALL)
_NUM_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_CURRENCY = "$€£"

_DTYPE_ALIASES = {
    "integer": ColumnDType.INTEGER, "int": ColumnDType.INTEGER,
    "float": ColumnDType.FLOAT,
    "datetime": ColumnDType.DATETIME, "date": ColumnDType.DATETIME,
    "categorical": ColumnDType.CATEGORICAL, "text": ColumnDType.CATEGORICAL,
    "str": ColumnDType.CATEGORICAL,
}

_OPS = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


class _ActionError(Exception):
    """Internal: converted to an 'Error: ...' observation at the boundary."""


def parse_number(text: str) -> float | None:
    """Parse a cell as a number, tolerating currency symbols and digit-group commas."""
    s = text.strip()
    for symbol in _CURRENCY:
        s = s.replace(symbol, "")
    s = re.sub(r"(?<=\d),(?=\d)", "", s).strip()
    if not _NUM_RE.match(s):
        return None
    return float(s)


@dataclass
class _Relation:
    names: list[str]
    rows: list[list[str]]

    def col_idx(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise _ActionError(f"unknown column '{name}'") from None


class TableEnv:
    """Mutable solver-side view of one table: cells plus a persistent dtype map."""

    def __init__(self, table: Table):
        self.names = list(table.column_names)
        self.rows = table.rows()
        self.dtypes: dict[str, ColumnDType] = {
            name: infer_column_type(cells)
            for name, cells in zip(table.column_names, table.columns)
        }

    def relation(self) -> _Relation:
        return _Relation(list(self.names), [list(r) for r in self.rows])


def _split_args(raw: str) -> list[str]:
    if not raw.strip():
        return []
    args: list[str] = []
    buf: list[str] = []
    quote: str | None = None
    for ch in raw:
        if quote is not None:
            if ch == quote:
                quote = None
            else:
                buf.append(ch)
        elif ch in "'\"":
            quote = ch
        elif ch == ",":
            args.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    if quote is not None:
        raise _ActionError("unterminated quote in arguments")
    args.append("".join(buf).strip())
    return args


def _parse_stages(action: str) -> list[tuple[str, list[str]]]:
    stages = []
    for piece in action.split("|>"):
        match = _STAGE_RE.match(piece)
        if not match:
            raise _ActionError(f"cannot parse '{piece.strip()}'")
        stages.append((match.group(1).lower(), _split_args(match.group(2))))
    return stages


def _expect_args(name: str, args: list[str], count: int) -> None:
    if len(args) != count:
        raise _ActionError(f"{name} takes {count} argument(s), got {len(args)}")


def _typed_key(cell: str, dtype: ColumnDType):
    """Sort/compare key for one cell under a dtype; None when unparseable."""
    if is_null(cell):
        return None
    if dtype in (ColumnDType.INTEGER, ColumnDType.FLOAT):
        return parse_number(cell)
    if dtype is ColumnDType.DATETIME:
        return parse_datetime(cell.strip())
    return cell.strip()


def _apply_filter(rel: _Relation, env: TableEnv, args: list[str]) -> _Relation:
    _expect_args("filter", args, 3)
    col, op, literal = args
    idx = rel.col_idx(col)
    if op not in _OPS:
        raise _ActionError(f"unknown operator '{op}'")
    compare = _OPS[op]
    dtype = env.dtypes.get(col, ColumnDType.CATEGORICAL)
    lit_key = _typed_key(literal, dtype)
    if lit_key is None:
        raise _ActionError(f"literal '{literal}' does not parse as {dtype.value}")
    kept = []
    for row in rel.rows:
        key = _typed_key(row[idx], dtype)
        if key is not None and compare(key, lit_key):
            kept.append(row)
    return _Relation(rel.names, kept)


def _apply_contains(rel: _Relation, args: list[str]) -> _Relation:
    _expect_args("contains", args, 2)
    col, needle = args
    idx = rel.col_idx(col)
    needle = needle.lower()
    return _Relation(rel.names, [r for r in rel.rows if needle in r[idx].lower()])


def _apply_project(rel: _Relation, args: list[str]) -> _Relation:
    if not args:
        raise _ActionError("project needs at least one column")
    indexes = [rel.col_idx(c) for c in args]
    return _Relation(list(args), [[row[i] for i in indexes] for row in rel.rows])


def _apply_agg(rel: _Relation, env: TableEnv, args: list[str]):
    _expect_args("agg", args, 2)
    col, fn = args
    idx = rel.col_idx(col)
    fn = fn.lower()
    if fn not in ("mean", "sum", "min", "max", "count"):
        raise _ActionError(f"unknown aggregate '{fn}'")
    if fn == "count":
        return sum(1 for r in rel.rows if not is_null(r[idx]))
    dtype = env.dtypes.get(col, ColumnDType.CATEGORICAL)
    if dtype is ColumnDType.DATETIME and fn in ("min", "max"):
        cells = [(parse_datetime(r[idx].strip()), r[idx].strip())
                 for r in rel.rows if not is_null(r[idx])]
        cells = [c for c in cells if c[0] is not None]
        if not cells:
            raise _ActionError(f"no datetime values in column '{col}'")
        picked = min(cells) if fn == "min" else max(cells)
        return picked[1]
    if dtype not in (ColumnDType.INTEGER, ColumnDType.FLOAT):
        raise _ActionError(f"column '{col}' not numeric")
    values = [parse_number(r[idx]) for r in rel.rows if not is_null(r[idx])]
    values = [v for v in values if v is not None]
    if fn == "sum":
        return sum(values)
    if not values:
        raise _ActionError(f"no numeric values in column '{col}'")
    if fn == "mean":
        return sum(values) / len(values)
    return min(values) if fn == "min" else max(values)


def _apply_sort(rel: _Relation, env: TableEnv, args: list[str]) -> _Relation:
    _expect_args("sort", args, 2)
    col, direction = args
    idx = rel.col_idx(col)
    direction = direction.lower()
    if direction not in ("asc", "desc"):
        raise _ActionError("sort direction must be asc or desc")
    dtype = env.dtypes.get(col, ColumnDType.CATEGORICAL)
    keyed = [(_typed_key(row[idx], dtype), row) for row in rel.rows]
    sortable = [kr for kr in keyed if kr[0] is not None]
    rest = [row for key, row in keyed if key is None]
    sortable.sort(key=lambda kr: kr[0], reverse=(direction == "desc"))
    return _Relation(rel.names, [row for _, row in sortable] + rest)


def _apply_head(rel: _Relation, args: list[str]) -> _Relation:
    _expect_args("head", args, 1)
    try:
        n = int(args[0])
    except ValueError:
        raise _ActionError(f"head count '{args[0]}' is not an integer") from None
    if n < 0:
        raise _ActionError("head count must be >= 0")
    return _Relation(rel.names, rel.rows[:n])


def _apply_distinct(rel: _Relation, args: list[str]) -> _Relation:
    _expect_args("distinct", args, 1)
    idx = rel.col_idx(args[0])
    seen: set[str] = set()
    values = []
    for row in rel.rows:
        value = row[idx].strip()
        if value not in seen:
            seen.add(value)
            values.append([value])
    return _Relation([args[0]], values)


def _apply_cast(rel: _Relation, env: TableEnv, args: list[str]) -> _Relation:
    _expect_args("cast", args, 2)
    col, dtype_name = args
    if col not in env.names:
        raise _ActionError(f"unknown column '{col}'")
    dtype = _DTYPE_ALIASES.get(dtype_name.lower())
    if dtype is None:
        raise _ActionError(f"unknown dtype '{dtype_name}'")
    env.dtypes[col] = dtype
    return rel


def format_scalar(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def format_relation(rel: _Relation) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(rel.names)
    for row in rel.rows[:MAX_RENDER_ROWS]:
        writer.writerow(row)
    buffer.write(f"({len(rel.rows)} rows x {len(rel.names)} columns)")
    return buffer.getvalue()


def interpret_action(env: TableEnv, action: str) -> str:
    """Evaluate one action line against the environment.

    Returns the rendered result, or "Error: <reason>"; never raises, so the
    LM sees interpreter failures as observations and can recover.
    """
    try:
        stages = _parse_stages(action)
        current: _Relation | float | int | str = env.relation()
        for name, args in stages:
            if not isinstance(current, _Relation):
                raise _ActionError("cannot chain after an aggregate")
            if name == "filter":
                current = _apply_filter(current, env, args)
            elif name == "contains":
                current = _apply_contains(current, args)
            elif name == "project":
                current = _apply_project(current, args)
            elif name == "agg":
                current = _apply_agg(current, env, args)
            elif name == "sort":
                current = _apply_sort(current, env, args)
            elif name == "head":
                current = _apply_head(current, args)
            elif name == "distinct":
                current = _apply_distinct(current, args)
            elif name == "cast":
                current = _apply_cast(current, env, args)
            else:
                raise _ActionError(f"unknown operation '{name}'")
        if isinstance(current, _Relation):
            return format_relation(current)
        return format_scalar(current)
    except _ActionError as exc:
        return f"Error: {exc}"
    except Exception as exc:  # totality: surface anything unexpected as text
        return f"Error: internal: {exc}"
