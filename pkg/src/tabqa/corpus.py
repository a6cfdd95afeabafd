"""Schema and cell corpora: build, budget-truncate, persist.

An index couples each entry's key text and payload with one embedding
vector. The on-disk format is a fixed binary header (magic, version, dim,
count), one JSON line per entry, then the vectors as contiguous
little-endian float32.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimMismatchError, FormatError
from .table import CellPair, ColumnDType, ColumnSchema, Table, build_schema, distinct_pairs_by_freq

MAGIC = b"TQIX"
FORMAT_VERSION = 1
ENCODE_BATCH_SIZE = 128

_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class EncodingBudget:
    """Cap on how many distinct pairs get embedded (default 10,000)."""

    limit: int = 10_000

    def __post_init__(self) -> None:
        if self.limit < 1:
            raise ValueError("encoding budget must be >= 1")


@dataclass(frozen=True)
class IndexEntry:
    key_text: str
    payload: ColumnSchema | CellPair


class VectorIndex:
    """Immutable list of entries plus an (n, dim) float32 vector matrix."""

    def __init__(self, entries: list[IndexEntry], vectors: np.ndarray):
        if vectors.ndim != 2 or len(entries) != vectors.shape[0]:
            raise ValueError("entries and vectors must align")
        self.entries = entries
        self.vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        self.dim = int(vectors.shape[1])

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorIndex):
            return NotImplemented
        return (self.dim == other.dim and self.entries == other.entries
                and np.array_equal(self.vectors, other.vectors))

    def key_texts(self) -> list[str]:
        return [entry.key_text for entry in self.entries]


def _payload_to_dict(payload: ColumnSchema | CellPair) -> dict:
    data = dataclasses.asdict(payload)
    if isinstance(payload, ColumnSchema):
        data["dtype"] = payload.dtype.value
    return data


def _payload_from_dict(data: dict) -> ColumnSchema | CellPair:
    if "frequency" in data:
        return CellPair(**data)
    data = dict(data)
    data["dtype"] = ColumnDType(data["dtype"])
    return ColumnSchema(**data)


def cell_key_text(pair: CellPair) -> str:
    """The text fed to the encoder for one pair: "column: value"."""
    return f"{pair.column_name}: {pair.value}"


def _encode_batched(encoder, texts: list[str]) -> np.ndarray:
    chunks = [
        encoder.embed_batch(texts[start:start + ENCODE_BATCH_SIZE])
        for start in range(0, len(texts), ENCODE_BATCH_SIZE)
    ]
    return np.concatenate(chunks, axis=0)


def build_schema_db(table: Table, encoder) -> VectorIndex:
    """One entry per column; only the column name is embedded."""
    schemas = build_schema(table)
    vectors = _encode_batched(encoder, table.column_names)
    entries = [IndexEntry(name, schema) for name, schema in zip(table.column_names, schemas)]
    return VectorIndex(entries, vectors)


def build_cell_db(table: Table, budget: EncodingBudget | int, encoder) -> VectorIndex:
    """Embed the min(D, B) most frequent distinct pairs.

    Pairs come pre-ranked from distinct_pairs_by_freq, so truncation keeps
    the most frequent pairs with deterministic tie-handling; encoding cost
    is bounded by the budget regardless of table size.
    """
    if isinstance(budget, int):
        budget = EncodingBudget(budget)
    pairs = distinct_pairs_by_freq(table)[:budget.limit]
    if not pairs:
        return VectorIndex([], np.zeros((0, encoder.dim), dtype=np.float32))
    vectors = _encode_batched(encoder, [cell_key_text(p) for p in pairs])
    entries = [IndexEntry(cell_key_text(p), p) for p in pairs]
    return VectorIndex(entries, vectors)


def save_index(index: VectorIndex, path: str | Path) -> None:
    """Persist an index; identical inputs produce byte-identical files."""
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, FORMAT_VERSION, index.dim, len(index)))
        for entry in index.entries:
            line = json.dumps(
                {"key_text": entry.key_text, "payload": _payload_to_dict(entry.payload)},
                sort_keys=True, separators=(",", ":"), ensure_ascii=False,
            )
            handle.write(line.encode("utf-8") + b"\n")
        handle.write(index.vectors.astype("<f4").tobytes())


def load_index(path: str | Path, expected_dim: int | None = None) -> VectorIndex:
    """Load a persisted index; the inverse of save_index, vectors bit-exact."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: too short for an index header")
    magic, version, dim, count = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    if expected_dim is not None and dim != expected_dim:
        raise DimMismatchError(f"{path}: index dim {dim}, expected {expected_dim}")

    offset = _HEADER.size
    entries: list[IndexEntry] = []
    for _ in range(count):
        end = blob.find(b"\n", offset)
        if end == -1:
            raise FormatError(f"{path}: truncated payload section")
        try:
            record = json.loads(blob[offset:end].decode("utf-8"))
            entries.append(IndexEntry(record["key_text"], _payload_from_dict(record["payload"])))
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}: bad payload line: {exc}") from exc
        offset = end + 1

    vector_bytes = blob[offset:]
    if len(vector_bytes) != count * dim * 4:
        raise FormatError(
            f"{path}: vector block is {len(vector_bytes)} bytes, expected {count * dim * 4}"
        )
    vectors = np.frombuffer(vector_bytes, dtype="<f4").reshape(count, dim).copy()
    return VectorIndex(entries, vectors)
