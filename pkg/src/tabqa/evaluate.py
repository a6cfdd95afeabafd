"""Benchmark runner: per-method accuracy, token usage, and retrieval quality."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .baselines import (
    rand_row_sample,
    read_schema_prompt,
    read_table_prompt,
    rowcol_retrieve,
    sub_table_prompt,
)
from .corpus import build_cell_db, build_schema_db
from .errors import EmptyGoldError
from .expand import expand_queries
from .ingest import DatasetManifest, QAInstance
from .retrieval import RetrievalConfig, multi_query_retrieve
from .solver import (
    assemble_prompt,
    normalize_and_match,
    normalize_answer_part,
    solve_with_voting,
)
from .table import Table, distinct_pairs_by_freq

logger = logging.getLogger(__name__)

METHODS = ("tablerag", "read_table", "read_schema", "rand_row", "rowcol")


@dataclass(frozen=True)
class RetrievalMetrics:
    recall: float
    precision: float
    f1: float


@dataclass
class InstanceRecord:
    question: str
    table_id: str
    answer: list[str] | None
    matched: bool
    failed: bool
    prompt_tokens: int
    encoder_tokens: int
    column_metrics: RetrievalMetrics | None = None
    cell_metrics: RetrievalMetrics | None = None


@dataclass
class MethodReport:
    method: str
    dataset: str
    accuracy: float
    n_instances: int
    records: list[InstanceRecord] = field(default_factory=list)
    column_metrics: RetrievalMetrics | None = None
    cell_metrics: RetrievalMetrics | None = None
    total_prompt_tokens: int = 0
    total_encoder_tokens: int = 0

    def to_dict(self) -> dict:
        def metrics_dict(m: RetrievalMetrics | None):
            return None if m is None else {"recall": m.recall, "precision": m.precision,
                                           "f1": m.f1}

        return {
            "method": self.method,
            "dataset": self.dataset,
            "accuracy": self.accuracy,
            "n_instances": self.n_instances,
            "column_metrics": metrics_dict(self.column_metrics),
            "cell_metrics": metrics_dict(self.cell_metrics),
            "total_prompt_tokens": self.total_prompt_tokens,
            "total_encoder_tokens": self.total_encoder_tokens,
            "records": [
                {
                    "question": r.question,
                    "table_id": r.table_id,
                    "answer": r.answer,
                    "matched": r.matched,
                    "failed": r.failed,
                    "prompt_tokens": r.prompt_tokens,
                    "encoder_tokens": r.encoder_tokens,
                    "column_metrics": metrics_dict(r.column_metrics),
                    "cell_metrics": metrics_dict(r.cell_metrics),
                }
                for r in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)

    def summary_csv_row(self) -> dict:
        def fmt(m: RetrievalMetrics | None, part: str) -> str:
            return "" if m is None else f"{getattr(m, part):.6f}"

        mean_prompt = self.total_prompt_tokens / self.n_instances if self.n_instances else 0.0
        return {
            "method": self.method,
            "dataset": self.dataset,
            "accuracy": f"{self.accuracy:.6f}",
            "mean_prompt_tokens": f"{mean_prompt:.1f}",
            "encoder_tokens": str(self.total_encoder_tokens),
            "column_recall": fmt(self.column_metrics, "recall"),
            "column_precision": fmt(self.column_metrics, "precision"),
            "column_f1": fmt(self.column_metrics, "f1"),
            "cell_recall": fmt(self.cell_metrics, "recall"),
            "cell_precision": fmt(self.cell_metrics, "precision"),
            "cell_f1": fmt(self.cell_metrics, "f1"),
        }


def retrieval_metrics(predicted: set, gold: set) -> RetrievalMetrics:
    """Set recall/precision/F1; F1 is 0 when precision + recall is 0."""
    if not gold:
        raise EmptyGoldError("gold set must be non-empty")
    overlap = len(predicted & gold)
    recall = overlap / len(gold)
    precision = overlap / len(predicted) if predicted else 0.0
    f1 = (2 * precision * recall / (precision + recall)) if precision + recall > 0 else 0.0
    return RetrievalMetrics(recall=recall, precision=precision, f1=f1)


def _normalized_pairs(pairs) -> set[tuple[str, str]]:
    return {(col, normalize_answer_part(value)) for col, value in pairs}


def _mean_metrics(values: list[RetrievalMetrics]) -> RetrievalMetrics | None:
    if not values:
        return None
    n = len(values)
    return RetrievalMetrics(
        recall=sum(m.recall for m in values) / n,
        precision=sum(m.precision for m in values) / n,
        f1=sum(m.f1 for m in values) / n,
    )


class _PromptPlan:
    """What one method produced for one instance before solving."""

    def __init__(self, prompt, pred_columns: set[str], pred_cells: set[tuple[str, str]],
                 cell_queries: list[str] | None = None):
        self.prompt = prompt
        self.pred_columns = pred_columns
        self.pred_cells = pred_cells
        self.cell_queries = cell_queries or []


def _all_pairs(table: Table) -> set[tuple[str, str]]:
    return {(p.column_name, p.value) for p in distinct_pairs_by_freq(table)}


class BenchmarkRunner:
    """Evaluates one manifest with one prompting method.

    Schema and cell databases are built once per table and reused across
    instances; their encoder cost is charged to the first instance that
    touches the table.
    """

    def __init__(self, manifest: DatasetManifest, config, lm, encoder=None):
        self.manifest = manifest
        self.config = config
        self.lm = lm
        self.encoder = encoder
        self._tables: dict[str, Table] = {}
        self._dbs: dict[str, tuple] = {}

    def _table(self, table_id: str) -> Table:
        if table_id not in self._tables:
            self._tables[table_id] = self.manifest.load_table(table_id)
        return self._tables[table_id]

    def _databases(self, table_id: str):
        if table_id not in self._dbs:
            table = self._table(table_id)
            self._dbs[table_id] = (
                build_schema_db(table, self.encoder),
                build_cell_db(table, self.config.budget, self.encoder),
            )
        return self._dbs[table_id]

    def _plan(self, method: str, instance: QAInstance, idx: int) -> _PromptPlan:
        table = self._table(instance.table_id)
        question = instance.question
        if method == "tablerag":
            schema_db, cell_db = self._databases(instance.table_id)
            bundle = expand_queries(question, table.title, self.lm)
            rconfig = RetrievalConfig(k=self.config.k, mode=self.config.mode,
                                      hybrid_weight=self.config.hybrid_weight)
            schema_hits = multi_query_retrieve(bundle.schema_queries, rconfig.k,
                                               schema_db, rconfig, self.encoder)
            cell_hits = multi_query_retrieve(bundle.cell_queries, rconfig.k,
                                             cell_db, rconfig, self.encoder)
            prompt = assemble_prompt(table.title, question, schema_hits, cell_hits,
                                     bundle.cell_queries)
            return _PromptPlan(
                prompt,
                {h.entry.payload.column_name for h in schema_hits},
                {(h.entry.payload.column_name, h.entry.payload.value) for h in cell_hits},
                bundle.cell_queries,
            )
        if method == "read_table":
            prompt = read_table_prompt(table, question, self.config.context_limit_tokens)
            return _PromptPlan(prompt, set(table.column_names), _all_pairs(table))
        if method == "read_schema":
            return _PromptPlan(read_schema_prompt(table, question),
                               set(table.column_names), set())
        if method == "rand_row":
            sub = rand_row_sample(table, self.config.baseline_k, self.config.seed + idx)
            prompt = sub_table_prompt(
                table.title, question, sub,
                "Since you cannot view the table directly, here is a random sample of rows "
                "from the table.")
            return _PromptPlan(prompt, set(sub.column_names), _all_pairs(sub))
        if method == "rowcol":
            result = rowcol_retrieve(table, question, self.config.baseline_k,
                                     self.config.budget, self.encoder)
            prompt = sub_table_prompt(
                table.title, question, result.table,
                "Since you cannot view the table directly, here is a sub-table with the rows "
                "and columns most relevant to the question.")
            return _PromptPlan(prompt, set(result.table.column_names),
                               _all_pairs(result.table))
        raise ValueError(f"unknown method {method!r}")

    def _encoder_tokens(self) -> int:
        return self.encoder.tokens_used if self.encoder is not None else 0

    def run(self, method: str) -> MethodReport:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
        records: list[InstanceRecord] = []
        column_metrics: list[RetrievalMetrics] = []
        cell_metrics: list[RetrievalMetrics] = []
        for idx, instance in enumerate(self.manifest.instances):
            tokens_before = self._encoder_tokens()
            plan = self._plan(method, instance, idx)
            answer = None
            if plan.prompt is not None:
                answer, _ = solve_with_voting(
                    self.lm, self._table(instance.table_id), plan.prompt,
                    n_votes=self.config.n_votes, max_steps=self.config.max_steps,
                    temperature=self.config.solver_temperature)
            matched = answer is not None and normalize_and_match(answer, instance.gold_answer)
            record = InstanceRecord(
                question=instance.question,
                table_id=instance.table_id,
                answer=answer.parts if answer else None,
                matched=matched,
                failed=answer is None,
                prompt_tokens=plan.prompt.token_count if plan.prompt else 0,
                encoder_tokens=self._encoder_tokens() - tokens_before,
            )
            if instance.gold_columns:
                record.column_metrics = retrieval_metrics(plan.pred_columns,
                                                          set(instance.gold_columns))
                column_metrics.append(record.column_metrics)
            if instance.gold_cells:
                record.cell_metrics = retrieval_metrics(
                    _normalized_pairs(plan.pred_cells),
                    _normalized_pairs(instance.gold_cells))
                cell_metrics.append(record.cell_metrics)
            records.append(record)
            logger.info("[%s] %s -> %s (matched=%s)", method, instance.question,
                        record.answer, matched)
        n = len(records)
        return MethodReport(
            method=method,
            dataset=self.manifest.name,
            accuracy=(sum(r.matched for r in records) / n) if n else 0.0,
            n_instances=n,
            records=records,
            column_metrics=_mean_metrics(column_metrics),
            cell_metrics=_mean_metrics(cell_metrics),
            total_prompt_tokens=sum(r.prompt_tokens for r in records),
            total_encoder_tokens=sum(r.encoder_tokens for r in records),
        )


def run_benchmark(manifest: DatasetManifest, method: str, config, lm,
                  encoder=None) -> MethodReport:
    """Evaluate every manifest instance with one method and aggregate."""
    return BenchmarkRunner(manifest, config, lm, encoder).run(method)
