"""Command-line entry point.

Commands: build (persist schema/cell indexes for a CSV), ask (answer one
question against built indexes), eval (run a benchmark manifest with one
method), expand (grow a table synthetically).

Exit codes: 0 success, 1 configuration or I/O problem, 2 solver failure,
3 remote LM failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .config import RunConfig, load_config, make_chat_model, make_encoder
from .corpus import build_cell_db, build_schema_db, load_index, save_index
from .errors import (
    FormatError,
    InvalidTargetError,
    RemoteError,
    ScriptExhaustedError,
    TabqaError,
)
from .evaluate import METHODS, run_benchmark
from .expand import expand_queries
from .ingest import load_manifest, load_table_csv, save_table_csv
from .retrieval import RetrievalConfig, multi_query_retrieve
from .solver import assemble_prompt, solve_with_voting, trace_to_jsonl
from .synth import expand_table_synthetic
from .table import table_stats

logger = logging.getLogger(__name__)

SCHEMA_INDEX_FILE = "schema.idx"
CELL_INDEX_FILE = "cell.idx"
STATS_FILE = "stats.json"
META_FILE = "meta.json"


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a JSON config file")
    parser.add_argument("--k", type=int, help="retrieval limit K")
    parser.add_argument("--budget", type=int, help="cell encoding budget B")
    parser.add_argument("--votes", type=int, help="solver runs per question")
    parser.add_argument("--mode", choices=("embed", "bm25", "hybrid"), help="retrieval mode")
    parser.add_argument("--hybrid-weight", type=float, help="embed weight for hybrid mode")
    parser.add_argument("--seed", type=int, help="seed for all randomized steps")
    parser.add_argument("--mock-lm", metavar="SCRIPT.json", help="scripted chat model playback file")
    parser.add_argument("--mock-encoder", action="store_true", default=None,
                        help="use the deterministic hashing encoder")
    parser.add_argument("--context-limit", type=int, help="token limit for read_table")
    parser.add_argument("--max-steps", type=int, help="solver step limit")


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    return config.merged({
        "k": args.k,
        "budget": args.budget,
        "n_votes": args.votes,
        "mode": args.mode,
        "hybrid_weight": args.hybrid_weight,
        "seed": args.seed,
        "mock_lm_script": args.mock_lm,
        "mock_encoder": args.mock_encoder,
        "context_limit_tokens": args.context_limit,
        "max_steps": args.max_steps,
    })


def cmd_build(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    table = load_table_csv(args.csv, args.title)
    encoder = make_encoder(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_index(build_schema_db(table, encoder), out_dir / SCHEMA_INDEX_FILE)
    save_index(build_cell_db(table, config.budget, encoder), out_dir / CELL_INDEX_FILE)
    stats = table_stats(table)
    (out_dir / STATS_FILE).write_text(
        json.dumps(dataclasses.asdict(stats), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    meta = {
        "title": args.title,
        "csv_path": str(Path(args.csv).resolve()),
        "encoder_dim": encoder.dim,
        "budget": config.budget,
    }
    (out_dir / META_FILE).write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"built indexes for {stats.n_rows}x{stats.n_cols} table "
          f"({stats.n_distinct} distinct pairs) in {out_dir}")
    return 0


def cmd_ask(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    index_dir = Path(args.index)
    meta = json.loads((index_dir / META_FILE).read_text(encoding="utf-8"))
    table = load_table_csv(meta["csv_path"], meta["title"])
    schema_db = load_index(index_dir / SCHEMA_INDEX_FILE)
    cell_db = load_index(index_dir / CELL_INDEX_FILE)

    lm = make_chat_model(config)
    encoder = make_encoder(config) if config.mode in ("embed", "hybrid") else None
    bundle = expand_queries(args.question, meta["title"], lm)
    rconfig = RetrievalConfig(k=config.k, mode=config.mode,
                              hybrid_weight=config.hybrid_weight)
    schema_hits = multi_query_retrieve(bundle.schema_queries, rconfig.k, schema_db,
                                       rconfig, encoder)
    cell_hits = multi_query_retrieve(bundle.cell_queries, rconfig.k, cell_db,
                                     rconfig, encoder)
    prompt = assemble_prompt(meta["title"], args.question, schema_hits, cell_hits,
                             bundle.cell_queries)
    answer, traces = solve_with_voting(lm, table, prompt, n_votes=config.n_votes,
                                       max_steps=config.max_steps,
                                       temperature=config.solver_temperature)
    if args.trace:
        for trace in traces:
            print(trace_to_jsonl(trace))
    if answer is None:
        print("no answer: all solver runs failed", file=sys.stderr)
        return 2
    print(f"Answer: {', '.join(answer.parts)}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    if args.method not in METHODS:
        print(f"unknown method {args.method!r}; choose from: {', '.join(METHODS)}",
              file=sys.stderr)
        return 1
    manifest = load_manifest(args.manifest)
    lm = make_chat_model(config)
    needs_encoder = args.method in ("tablerag", "rowcol")
    encoder = make_encoder(config) if needs_encoder else None
    report = run_benchmark(manifest, args.method, config, lm, encoder)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    row = report.summary_csv_row()
    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(row), lineterminator="\n")
        writer.writeheader()
        writer.writerow(row)
    print(f"{report.method} on {report.dataset}: accuracy {report.accuracy:.3f} "
          f"({report.n_instances} instances)")
    return 0


def cmd_expand(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    title = args.title if args.title is not None else Path(args.csv).stem
    table = load_table_csv(args.csv, title)
    expanded, mapping = expand_table_synthetic(table, args.rows, args.cols, config.seed)
    save_table_csv(expanded, args.out)
    map_path = args.map_out if args.map_out else f"{args.out}.map.json"
    Path(map_path).write_text(
        json.dumps(mapping.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"expanded {table.n_rows}x{table.n_cols} -> {expanded.n_rows}x{expanded.n_cols}; "
          f"map in {map_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tabqa",
                                     description="Retrieval-augmented table question answering")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build schema and cell indexes for a CSV table")
    p_build.add_argument("--csv", required=True, help="table CSV path")
    p_build.add_argument("--title", required=True, help="table title used in prompts")
    p_build.add_argument("--out", required=True, help="output directory for index files")
    _add_common_flags(p_build)
    p_build.set_defaults(func=cmd_build)

    p_ask = sub.add_parser("ask", help="answer one question against built indexes")
    p_ask.add_argument("--index", required=True, help="directory produced by build")
    p_ask.add_argument("--question", required=True)
    p_ask.add_argument("--trace", action="store_true", help="print the JSON-lines trace")
    _add_common_flags(p_ask)
    p_ask.set_defaults(func=cmd_ask)

    p_eval = sub.add_parser("eval", help="run a benchmark manifest with one method")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--method", required=True,
                        help=f"one of: {', '.join(METHODS)}")
    p_eval.add_argument("--out", required=True, help="output directory for the report")
    _add_common_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_expand = sub.add_parser("expand", help="synthetically expand a table")
    p_expand.add_argument("--csv", required=True)
    p_expand.add_argument("--rows", type=int, required=True)
    p_expand.add_argument("--cols", type=int, required=True)
    p_expand.add_argument("--out", required=True, help="output CSV path")
    p_expand.add_argument("--map-out", help="output path for the position map JSON")
    p_expand.add_argument("--title", help="title for the expanded table")
    _add_common_flags(p_expand)
    p_expand.set_defaults(func=cmd_expand)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScriptExhaustedError, RemoteError) as exc:
        print(f"LM failure: {exc}", file=sys.stderr)
        return 3
    except InvalidTargetError as exc:
        print(f"invalid expansion target: {exc}", file=sys.stderr)
        return 1
    except (FormatError, TabqaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
