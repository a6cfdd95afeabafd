"""Seeded synthetic table expansion for scaling experiments.

A small table is embedded, rows and columns at seeded positions, inside a
larger grid of filler data. Filler columns draw from small per-column value
pools (so the distinct-value count stays far below the cell count) and
filler cells in original columns draw from each column's existing values.
Values colliding with protected cells are rejected so filter-style questions
keep their answers after expansion.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import date

from .errors import InvalidTargetError
from .table import Table

# Small per-column pools keep distinct counts a few values per column,
# mirroring how real categorical data repeats.
POOL_SIZE = 3
_REJECTION_ATTEMPTS = 100

_TOKENS_A = ["north", "south", "east", "west", "red", "blue", "green", "amber",
             "silver", "copper", "ivory", "slate"]
_TOKENS_B = ["fox", "owl", "elm", "oak", "lake", "hill", "vale", "reef",
             "moor", "glen", "bay", "ridge"]


@dataclass(frozen=True)
class ExpansionMap:
    """Where the original content landed in the expanded table."""

    row_positions: list[int]
    column_positions: dict[str, int]

    def to_dict(self) -> dict:
        return {"row_positions": list(self.row_positions),
                "column_positions": dict(self.column_positions)}


def _collides(value: str, column: str, avoid: list[tuple[str, str]]) -> bool:
    v = value.strip().lower()
    for col, gold in avoid:
        if col != column:
            continue
        g = gold.strip().lower()
        if g and v and (g in v or v in g):
            return True
    return False


def _draw(rng: random.Random, pool: list[str], column: str,
          avoid: list[tuple[str, str]]) -> str:
    for _ in range(_REJECTION_ATTEMPTS):
        value = rng.choice(pool)
        if not _collides(value, column, avoid):
            return value
    k = 0
    while _collides(f"filler_{k}", column, avoid):
        k += 1
    return f"filler_{k}"


def _filler_pool(rng: random.Random, kind: int) -> list[str]:
    pool: list[str] = []
    seen: set[str] = set()
    while len(pool) < POOL_SIZE:
        if kind == 0:
            value = str(rng.randint(0, 99_999))
        elif kind == 1:
            value = f"{rng.uniform(0.0, 1000.0):.2f}"
        elif kind == 2:
            value = date(2000 + rng.randint(0, 25), rng.randint(1, 12),
                         rng.randint(1, 28)).isoformat()
        else:
            value = f"{rng.choice(_TOKENS_A)}_{rng.choice(_TOKENS_B)}"
        if value not in seen:
            seen.add(value)
            pool.append(value)
    return pool


def expand_table_synthetic(table: Table, target_rows: int, target_cols: int, seed: int,
                           avoid_cells: list[tuple[str, str]] | None = None,
                           ) -> tuple[Table, ExpansionMap]:
    """Expand a table to target_rows x target_cols; returns (table, position map).

    Original columns keep their names and original cells land intact at the
    mapped positions. Filler columns are named extra_<i>. avoid_cells lists
    (column, value) pairs that filler cells must not collide with, matched
    case-insensitively and substring-aware in both directions.
    """
    if target_rows < table.n_rows or target_cols < table.n_cols:
        raise InvalidTargetError(
            f"target {target_rows}x{target_cols} smaller than source "
            f"{table.n_rows}x{table.n_cols}"
        )
    avoid = list(avoid_cells or [])
    rng = random.Random(seed)

    col_positions = sorted(rng.sample(range(target_cols), table.n_cols))
    row_positions = sorted(rng.sample(range(target_rows), table.n_rows)) if table.n_rows else []
    original_at = {pos: j for j, pos in enumerate(col_positions)}
    original_row_at = {pos: i for i, pos in enumerate(row_positions)}

    names: list[str] = []
    used_names = set(table.column_names)
    extra_idx = 1
    for pos in range(target_cols):
        if pos in original_at:
            names.append(table.column_names[original_at[pos]])
        else:
            while f"extra_{extra_idx}" in used_names:
                extra_idx += 1
            names.append(f"extra_{extra_idx}")
            used_names.add(names[-1])
            extra_idx += 1

    columns: list[list[str]] = []
    filler_kind = 0
    for pos in range(target_cols):
        name = names[pos]
        if pos in original_at:
            source = table.columns[original_at[pos]]
            cells = []
            for row in range(target_rows):
                if row in original_row_at:
                    cells.append(source[original_row_at[row]])
                else:
                    cells.append(_draw(rng, source, name, avoid) if source else "")
        else:
            pool = _filler_pool(rng, filler_kind % 4)
            filler_kind += 1
            cells = [_draw(rng, pool, name, avoid) for _ in range(target_rows)]
        columns.append(cells)

    expanded = Table(title=table.title, column_names=names, columns=columns)
    mapping = ExpansionMap(
        row_positions=row_positions,
        column_positions={table.column_names[j]: pos for j, pos in enumerate(col_positions)},
    )
    return expanded, mapping
