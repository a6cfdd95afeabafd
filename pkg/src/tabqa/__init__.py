"""Retrieval-augmented question answering over large tables."""

from .table import (
    CellPair,
    ColumnDType,
    ColumnSchema,
    CorpusStats,
    Table,
    build_schema,
    distinct_pairs_by_freq,
    infer_column_type,
    table_stats,
)
from .ingest import DatasetManifest, QAInstance, load_manifest, load_table_csv, save_table_csv
from .gateway import (
    HashingEncoder,
    LmEndpointConfig,
    RemoteChatModel,
    RemoteEncoder,
    ScriptedChatModel,
    count_tokens,
)
from .corpus import (
    EncodingBudget,
    IndexEntry,
    VectorIndex,
    build_cell_db,
    build_schema_db,
    cell_key_text,
    load_index,
    save_index,
)
from .retrieval import (
    RetrievalConfig,
    ScoredHit,
    bm25_topk,
    hybrid_topk,
    multi_query_retrieve,
    vector_topk,
)
from .expand import QueryBundle, expand_cell_queries, expand_queries, expand_schema_queries, parse_json_list
from .interpreter import TableEnv, interpret_action
from .solver import (
    Answer,
    ReActStep,
    SolverPrompt,
    SolverTrace,
    assemble_prompt,
    extract_final_answer,
    majority_vote,
    normalize_and_match,
    react_loop,
    solve_with_voting,
)
from .baselines import (
    RowColResult,
    rand_row_sample,
    read_schema_prompt,
    read_table_prompt,
    rowcol_retrieve,
)
from .synth import ExpansionMap, expand_table_synthetic
from .evaluate import MethodReport, RetrievalMetrics, retrieval_metrics, run_benchmark
from .config import RunConfig, load_config, make_chat_model, make_encoder

__version__ = "0.1.0"
