"""Baseline table prompting strategies: full table, schema only, row samples.

All baselines share the solver scaffold, swapping the retrieval block for
their own table context, so every method drives the same solver loop.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass

import numpy as np

from .corpus import _encode_batched
from .gateway import count_tokens
from .solver import PROMPT_DTYPE_NAMES, SOLVER_TEMPLATE, SolverPrompt
from .table import Table, build_schema

ROWCOL_TEXT_CAP = 512

_RETRIEVAL_BLOCK = (
    "Since you cannot view the table directly, here are some schemas and cell values "
    "retrieved from the table.\n"
    "\n"
    "Schema Retrieval Results:\n"
    "{schema_results}\n"
    "\n"
    "Cell Retrieval Queries: {cell_queries}\n"
    "Cell Retrieval Results:\n"
    "{cell_results}"
)

assert _RETRIEVAL_BLOCK in SOLVER_TEMPLATE, "solver template drifted from the baseline scaffold"


@dataclass(frozen=True)
class RowColResult:
    """Sub-table selected by row/column retrieval, with the picked indexes."""

    table: Table
    row_indices: list[int]
    col_indices: list[int]


def table_to_csv_text(table: Table) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.column_names)
    writer.writerows(table.rows())
    return buffer.getvalue().rstrip("\n")


def _scaffold_prompt(title: str, question: str, body: str) -> SolverPrompt:
    text = (
        SOLVER_TEMPLATE
        .replace(_RETRIEVAL_BLOCK, body)
        .replace("{title}", title)
        .replace("{question}", question)
    )
    return SolverPrompt(text, count_tokens(text), 0, 0)


def read_table_prompt(table: Table, question: str,
                      context_limit_tokens: int) -> SolverPrompt | None:
    """Embed the whole table in the prompt; None when it exceeds the limit.

    The None return is the method's failure value: oversize instances count
    as unanswered.
    """
    body = f"Here is the entire table.\n\nTable:\n{table_to_csv_text(table)}"
    prompt = _scaffold_prompt(table.title, question, body)
    if prompt.token_count > context_limit_tokens:
        return None
    return prompt


def read_schema_prompt(table: Table, question: str) -> SolverPrompt:
    """Column names and dtypes only; no cell content reaches the prompt."""
    lines = [
        json.dumps({"column_name": s.column_name, "dtype": PROMPT_DTYPE_NAMES[s.dtype]},
                   ensure_ascii=False)
        for s in build_schema(table)
    ]
    body = ("Since you cannot view the table directly, here is the schema of the table.\n\n"
            "Schema:\n" + "\n".join(lines))
    return _scaffold_prompt(table.title, question, body)


def sub_table_prompt(table_title: str, question: str, sub_table: Table,
                     intro: str) -> SolverPrompt:
    body = f"{intro}\n\n{table_to_csv_text(sub_table)}"
    return _scaffold_prompt(table_title, question, body)


def rand_row_sample(table: Table, k: int, seed: int) -> Table:
    """k rows sampled uniformly without replacement, kept in original order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= table.n_rows:
        return table
    picked = sorted(random.Random(seed).sample(range(table.n_rows), k))
    columns = [[cells[i] for i in picked] for cells in table.columns]
    return Table(title=table.title, column_names=list(table.column_names), columns=columns)


def _row_text(names: list[str], row: list[str]) -> str:
    return "; ".join(f"{n}={v}" for n, v in zip(names, row))[:ROWCOL_TEXT_CAP]


def _col_text(name: str, cells: list[str]) -> str:
    cap = max(0, ROWCOL_TEXT_CAP - len(name) - 2)
    return f"{name}: " + ", ".join(cells)[:cap]


def _topk_indices(query_vec: np.ndarray, matrix: np.ndarray, k: int) -> list[int]:
    q = query_vec / (np.linalg.norm(query_vec) or 1.0)
    norms = np.linalg.norm(matrix, axis=1)
    norms[norms == 0.0] = 1.0
    scores = (matrix @ q) / norms
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order[:k]


def rowcol_retrieve(table: Table, question: str, k: int, budget: int,
                    encoder) -> RowColResult:
    """Truncate to floor(budget / 2M) rows, then pick top-k rows and columns.

    Rows and columns are serialized to capped texts, embedded, and ranked by
    cosine similarity to the question embedding; the result is the
    intersection sub-table in original order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    m = table.n_cols
    if budget < 2 * m:
        raise ValueError(f"budget {budget} is below 2M = {2 * m}")
    row_cap = budget // (2 * m)
    n_kept = min(row_cap, table.n_rows)
    rows = table.rows()[:n_kept]

    question_vec = encoder.embed_batch([question])[0]
    col_texts = [
        _col_text(name, [cells[i] for i in range(n_kept)])
        for name, cells in zip(table.column_names, table.columns)
    ]
    col_pick = sorted(_topk_indices(question_vec, _encode_batched(encoder, col_texts), k))
    if rows:
        row_texts = [_row_text(table.column_names, row) for row in rows]
        row_pick = sorted(_topk_indices(question_vec, _encode_batched(encoder, row_texts), k))
    else:
        row_pick = []

    columns = [[table.columns[j][i] for i in row_pick] for j in col_pick]
    sub = Table(title=table.title,
                column_names=[table.column_names[j] for j in col_pick],
                columns=columns)
    return RowColResult(sub, row_pick, col_pick)
