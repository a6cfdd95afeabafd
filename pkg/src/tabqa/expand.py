"""Query expansion: one question becomes separate schema and cell queries.

The two prompts are versioned text assets rendered by plain substitution
(the templates contain literal braces, so str.format is off the table).
Malformed LM output never aborts the pipeline; the raw question becomes the
single fallback query.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources

from .errors import ParseFailureError

logger = logging.getLogger(__name__)

MAX_QUERIES = 10
EXPANSION_TEMPERATURE = 0.0


def _load_template(name: str) -> str:
    return resources.files("tabqa.prompts").joinpath(name).read_text(encoding="utf-8").rstrip("\n")


_SCHEMA_TEMPLATE = _load_template("schema_queries.txt")
_CELL_TEMPLATE = _load_template("cell_queries.txt")


@dataclass(frozen=True)
class QueryBundle:
    schema_queries: list[str]
    cell_queries: list[str]
    used_fallback: bool = False


def render_schema_query_prompt(title: str, question: str) -> str:
    return _SCHEMA_TEMPLATE.replace("{title}", title).replace("{question}", question)


def render_cell_query_prompt(title: str, question: str) -> str:
    return _CELL_TEMPLATE.replace("{title}", title).replace("{question}", question)


def parse_json_list(reply: str) -> list[str]:
    """Extract the first JSON array of strings anywhere in the reply.

    Elements are trimmed and empties dropped. Raises ParseFailureError when
    no such array exists.
    """
    decoder = json.JSONDecoder()
    start = reply.find("[")
    while start != -1:
        try:
            value, _ = decoder.raw_decode(reply, start)
        except ValueError:
            value = None
        if isinstance(value, list) and all(isinstance(item, str) for item in value):
            return [item.strip() for item in value if item.strip()]
        start = reply.find("[", start + 1)
    raise ParseFailureError("reply contains no JSON array of strings")


def _dedup_capped(items: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
        if len(out) == MAX_QUERIES:
            break
    return out


def _expand(prompt: str, question: str, lm) -> tuple[list[str], bool]:
    reply = lm.chat_complete(prompt, temperature=EXPANSION_TEMPERATURE)
    try:
        queries = _dedup_capped(parse_json_list(reply))
    except ParseFailureError:
        logger.debug("query expansion reply not parseable, falling back to the question")
        queries = []
    if not queries:
        return [question], True
    return queries, False


def expand_schema_queries(question: str, table_title: str, lm) -> list[str]:
    """Column-name queries for one question; falls back to [question]."""
    queries, _ = _expand(render_schema_query_prompt(table_title, question), question, lm)
    return queries


def expand_cell_queries(question: str, table_title: str, lm) -> list[str]:
    """Cell-keyword queries for one question; falls back to [question]."""
    queries, _ = _expand(render_cell_query_prompt(table_title, question), question, lm)
    return queries


def expand_queries(question: str, table_title: str, lm) -> QueryBundle:
    """Run both expansions and bundle the results."""
    schema_queries, schema_fb = _expand(
        render_schema_query_prompt(table_title, question), question, lm)
    cell_queries, cell_fb = _expand(
        render_cell_query_prompt(table_title, question), question, lm)
    return QueryBundle(schema_queries, cell_queries, used_fallback=schema_fb or cell_fb)
