"""Loading tables from CSV and benchmark manifests from JSON."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DanglingReferenceError, FormatError
from .table import Table


@dataclass(frozen=True)
class QAInstance:
    """One question over one table, with the gold answer and optional retrieval gold."""

    question: str
    table_id: str
    gold_answer: list[str]
    gold_columns: list[str] | None = None
    gold_cells: list[tuple[str, str]] | None = None


@dataclass(frozen=True)
class TableRef:
    table_id: str
    title: str
    csv_path: str
    resolved_path: Path


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    tables: list[TableRef]
    instances: list[QAInstance]
    _by_id: dict[str, TableRef] = field(repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        self._by_id.update({t.table_id: t for t in self.tables})

    def table_ref(self, table_id: str) -> TableRef:
        return self._by_id[table_id]

    def load_table(self, table_id: str) -> Table:
        ref = self._by_id[table_id]
        return load_table_csv(ref.resolved_path, ref.title)


def _dedup_column_names(names: list[str]) -> list[str]:
    """Suffix duplicate header names with _2, _3, ... in first-seen order."""
    used: set[str] = set()
    result = []
    for name in names:
        candidate = name
        suffix = 2
        while candidate in used:
            candidate = f"{name}_{suffix}"
            suffix += 1
        used.add(candidate)
        result.append(candidate)
    return result


def load_table_csv(path: str | Path, title: str) -> Table:
    """Load an RFC-4180 CSV with a header row into a Table.

    Cells stay raw text; duplicate header names are dedup-suffixed. Raises
    FormatError for a missing header or ragged rows (naming the 1-based data
    row index), and the usual OSError family for unreadable files.
    """
    with open(path, encoding="utf-8-sig", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, header row required") from None
        if not header:
            raise FormatError(f"{path}: empty header row")
        names = _dedup_column_names(header)
        columns: list[list[str]] = [[] for _ in names]
        for row_idx, row in enumerate(reader, start=1):
            if len(row) != len(names):
                raise FormatError(
                    f"{path}: row {row_idx} has {len(row)} cells, expected {len(names)}"
                )
            for col, cell in zip(columns, row):
                col.append(cell)
    return Table(title=title, column_names=names, columns=columns)


def save_table_csv(table: Table, path: str | Path) -> None:
    """Write a table back to CSV; reloading yields cell-identical content."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(table.column_names)
        writer.writerows(table.rows())


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise FormatError(message)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a dataset manifest.

    The manifest is a JSON document: {"name", "tables": [{table_id, title,
    csv_path}], "instances": [{question, table_id, gold_answer,
    gold_columns?, gold_cells?}]}. CSV paths are resolved relative to the
    manifest file and must exist.
    """
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc

    _require(isinstance(doc, dict), f"{path}: manifest must be a JSON object")
    _require(isinstance(doc.get("name"), str), f"{path}: 'name' must be a string")
    _require(isinstance(doc.get("tables"), list), f"{path}: 'tables' must be a list")
    _require(isinstance(doc.get("instances"), list), f"{path}: 'instances' must be a list")

    base = path.parent
    tables: list[TableRef] = []
    seen_ids: set[str] = set()
    for entry in doc["tables"]:
        _require(isinstance(entry, dict), f"{path}: table entries must be objects")
        for key in ("table_id", "title", "csv_path"):
            _require(isinstance(entry.get(key), str), f"{path}: table entry missing '{key}'")
        _require(entry["table_id"] not in seen_ids,
                 f"{path}: duplicate table_id {entry['table_id']!r}")
        seen_ids.add(entry["table_id"])
        resolved = (base / entry["csv_path"]).resolve()
        if not resolved.is_file():
            raise FileNotFoundError(f"{path}: table {entry['table_id']!r} csv not found: {resolved}")
        tables.append(TableRef(entry["table_id"], entry["title"], entry["csv_path"], resolved))

    instances: list[QAInstance] = []
    for entry in doc["instances"]:
        _require(isinstance(entry, dict), f"{path}: instances must be objects")
        _require(isinstance(entry.get("question"), str), f"{path}: instance missing 'question'")
        _require(isinstance(entry.get("table_id"), str), f"{path}: instance missing 'table_id'")
        gold = entry.get("gold_answer")
        _require(isinstance(gold, list) and gold and all(isinstance(g, str) for g in gold),
                 f"{path}: instance 'gold_answer' must be a non-empty list of strings")
        if entry["table_id"] not in seen_ids:
            raise DanglingReferenceError(
                f"{path}: instance references unknown table_id {entry['table_id']!r}"
            )
        gold_columns = entry.get("gold_columns")
        if gold_columns is not None:
            _require(isinstance(gold_columns, list)
                     and all(isinstance(c, str) for c in gold_columns),
                     f"{path}: 'gold_columns' must be a list of strings")
        gold_cells = None
        if entry.get("gold_cells") is not None:
            raw_cells = entry["gold_cells"]
            _require(isinstance(raw_cells, list)
                     and all(isinstance(c, list) and len(c) == 2
                             and all(isinstance(p, str) for p in c) for c in raw_cells),
                     f"{path}: 'gold_cells' must be a list of [column, value] pairs")
            gold_cells = [(c[0], c[1]) for c in raw_cells]
        instances.append(QAInstance(
            question=entry["question"],
            table_id=entry["table_id"],
            gold_answer=list(gold),
            gold_columns=list(gold_columns) if gold_columns is not None else None,
            gold_cells=gold_cells,
        ))

    return DatasetManifest(name=doc["name"], tables=tables, instances=instances)
