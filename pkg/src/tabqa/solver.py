"""Prompt assembly and the ReAct solver loop.

The solver prompt renders retrieved schema and cell hits into a fixed
template; the loop alternates LM calls with the deterministic table
expression interpreter until a final answer appears or the step budget runs
out. Repeated runs are combined by majority voting and judged by a
numeric-tolerant exact match.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources

from .gateway import count_tokens
from .interpreter import TableEnv, interpret_action
from .retrieval import ScoredHit
from .table import ColumnDType, ColumnSchema, Table
from .errors import NoFinalAnswerError

DEFAULT_MAX_STEPS = 10
DEFAULT_SOLVER_TEMPERATURE = 0.8
STOP_SEQUENCES = ["Observation:"]

FINAL_MARKER = "Final Answer:"
ACTION_MARKER = "Action:"
THOUGHT_MARKER = "Thought:"

PROMPT_DTYPE_NAMES = {
    ColumnDType.INTEGER: "int64",
    ColumnDType.FLOAT: "float64",
    ColumnDType.DATETIME: "datetime64[ns]",
    ColumnDType.CATEGORICAL: "object",
}

_CURRENCY = "$€£"
_NUM_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

SOLVER_TEMPLATE = (
    resources.files("tabqa.prompts").joinpath("solver.txt")
    .read_text(encoding="utf-8").rstrip("\n")
)


@dataclass(frozen=True)
class SolverPrompt:
    text: str
    token_count: int
    included_schema_hits: int
    included_cell_hits: int


@dataclass(frozen=True)
class ReActStep:
    thought: str
    action: str | None
    observation: str
    final: bool = False


@dataclass(frozen=True)
class Answer:
    raw: str
    parts: list[str]
    normalized: list[str]


@dataclass
class SolverTrace:
    steps: list[ReActStep]
    answer: Answer | None
    failure: str | None
    total_prompt_tokens: int


def schema_result_line(schema: ColumnSchema) -> str:
    """Render one schema hit the way the solver prompt expects.

    Categorical columns list example values Python-repr style; numeric and
    datetime columns carry min/max.
    """
    name = json.dumps(schema.column_name, ensure_ascii=False)
    dtype = json.dumps(PROMPT_DTYPE_NAMES[schema.dtype])
    if schema.dtype is ColumnDType.CATEGORICAL:
        examples = ", ".join(repr(v) for v in (schema.top_values or []))
        return f'{{"column_name": {name}, "dtype": {dtype}, "cell_examples": [{examples}]}}'
    lo = json.dumps(schema.min_value, ensure_ascii=False)
    hi = json.dumps(schema.max_value, ensure_ascii=False)
    return f'{{"column_name": {name}, "dtype": {dtype}, "min": {lo}, "max": {hi}}}'


def cell_result_line(column_name: str, cell_value: str) -> str:
    return json.dumps({"column_name": column_name, "cell_value": cell_value},
                      ensure_ascii=False)


def _lines_or_none(lines: list[str]) -> str:
    return "\n".join(lines) if lines else "(none)"


def assemble_prompt(title: str, question: str, schema_hits: list[ScoredHit],
                    cell_hits: list[ScoredHit], cell_queries: list[str]) -> SolverPrompt:
    """Render the solver template with retrieved schema and cell results."""
    schema_lines = [schema_result_line(h.entry.payload) for h in schema_hits]
    cell_lines = [
        cell_result_line(h.entry.payload.column_name, h.entry.payload.value)
        for h in cell_hits
    ]
    text = (
        SOLVER_TEMPLATE
        .replace("{title}", title)
        .replace("{question}", question)
        .replace("{schema_results}", _lines_or_none(schema_lines))
        .replace("{cell_queries}", ", ".join(cell_queries))
        .replace("{cell_results}", _lines_or_none(cell_lines))
    )
    return SolverPrompt(text, count_tokens(text), len(schema_hits), len(cell_hits))


def _split_outside_quotes(text: str) -> list[str]:
    parts: list[str] = []
    buf: list[str] = []
    quote: str | None = None
    for ch in text:
        if quote is not None:
            buf.append(ch)
            if ch == quote:
                quote = None
        elif ch in "'\"":
            buf.append(ch)
            quote = ch
        elif ch == ",":
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return parts


def _strip_outer_quotes(text: str) -> str:
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1].strip()
    return text


def normalize_answer_part(text: str) -> str:
    """Lowercase, trim, drop currency symbols and digit-group separators."""
    s = _strip_outer_quotes(text.strip()).lower()
    for symbol in _CURRENCY:
        s = s.replace(symbol, "")
    s = re.sub(r"(?<=\d),(?=\d)", "", s)
    return s.strip()


def extract_final_answer(reply: str) -> Answer:
    """Answer from the text after the last 'Final Answer:' marker."""
    idx = reply.rfind(FINAL_MARKER)
    if idx == -1:
        raise NoFinalAnswerError("reply carries no 'Final Answer:' marker")
    tail = reply[idx + len(FINAL_MARKER):].strip()
    parts = [_strip_outer_quotes(p.strip()) for p in _split_outside_quotes(tail)]
    parts = [p for p in parts if p]
    if not parts:
        raise NoFinalAnswerError("'Final Answer:' marker carries no answer")
    return Answer(raw=tail, parts=parts, normalized=[normalize_answer_part(p) for p in parts])


def _parse_reply(reply: str) -> tuple[str, str | None, bool]:
    """Split a reply into (thought, action, is_final)."""
    final_idx = reply.find(FINAL_MARKER)
    action_idx = reply.find(ACTION_MARKER)
    cut_candidates = [i for i in (final_idx, action_idx) if i != -1]
    cut = min(cut_candidates) if cut_candidates else len(reply)
    thought_idx = reply.find(THOUGHT_MARKER)
    if thought_idx != -1 and thought_idx < cut:
        thought = reply[thought_idx + len(THOUGHT_MARKER):cut].strip()
    else:
        thought = reply[:cut].strip()
    if final_idx != -1:
        return thought, None, True
    if action_idx != -1:
        action_text = reply[action_idx + len(ACTION_MARKER):]
        action = action_text.split("\n", 1)[0].strip()
        return thought, action, False
    return thought, None, False


def react_loop(lm, table: Table, prompt: SolverPrompt,
               max_steps: int = DEFAULT_MAX_STEPS,
               temperature: float = DEFAULT_SOLVER_TEMPERATURE) -> SolverTrace:
    """Run the thought/action/observation loop against one table.

    Each turn sends the conversation so far (stopping generation before any
    "Observation:" the model might hallucinate), parses out the action, runs
    it through the interpreter, and feeds the observation back. Interpreter
    errors become observations, not exceptions; hitting max_steps marks the
    trace failed.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    env = TableEnv(table)
    conversation = prompt.text
    steps: list[ReActStep] = []
    total_prompt_tokens = 0
    for _ in range(max_steps):
        reply = lm.chat_complete(conversation, temperature=temperature,
                                 stop_sequences=STOP_SEQUENCES)
        total_prompt_tokens += count_tokens(conversation)
        thought, action, is_final = _parse_reply(reply)
        if is_final:
            steps.append(ReActStep(thought=thought, action=None, observation="", final=True))
            try:
                answer = extract_final_answer(reply)
            except NoFinalAnswerError as exc:
                return SolverTrace(steps, None, str(exc), total_prompt_tokens)
            return SolverTrace(steps, answer, None, total_prompt_tokens)
        if action is not None:
            observation = interpret_action(env, action)
        else:
            action = ""
            observation = "Error: reply must contain an Action or Final Answer line"
        steps.append(ReActStep(thought=thought, action=action, observation=observation))
        conversation = f"{conversation}\n{reply.strip()}\nObservation: {observation}\n"
    return SolverTrace(steps, None, f"step limit exceeded after {max_steps} steps",
                       total_prompt_tokens)


def trace_to_jsonl(trace: SolverTrace) -> str:
    """One JSON line per step plus a final outcome line."""
    lines = []
    for i, step in enumerate(trace.steps, start=1):
        lines.append(json.dumps(
            {"step": i, "thought": step.thought, "action": step.action,
             "observation": step.observation, "final": step.final},
            ensure_ascii=False, sort_keys=True))
    outcome = {
        "answer": trace.answer.parts if trace.answer else None,
        "failure": trace.failure,
        "total_prompt_tokens": trace.total_prompt_tokens,
    }
    lines.append(json.dumps(outcome, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines)


def _vote_key(answer: Answer) -> tuple[str, ...]:
    return tuple(sorted(answer.normalized))


def majority_vote(answers: list[Answer | None]) -> Answer | None:
    """Modal answer by normalized parts; ties go to the earliest occurrence.

    Failed runs arrive as None and are excluded; all-failed yields None.
    """
    valid = [a for a in answers if a is not None]
    if not valid:
        return None
    counts: Counter[tuple[str, ...]] = Counter(_vote_key(a) for a in valid)
    first_seen: dict[tuple[str, ...], int] = {}
    for i, a in enumerate(valid):
        first_seen.setdefault(_vote_key(a), i)
    winner = max(counts, key=lambda k: (counts[k], -first_seen[k]))
    return valid[first_seen[winner]]


def _as_number(text: str) -> float | None:
    return float(text) if _NUM_RE.match(text) else None


def _parts_equal(a: str, b: str) -> bool:
    if a == b:
        return True
    fa, fb = _as_number(a), _as_number(b)
    if fa is None or fb is None:
        return False
    return math.isclose(fa, fb, rel_tol=1e-6, abs_tol=1e-12)


def normalize_and_match(pred: Answer, gold: list[str]) -> bool:
    """Exact match over normalized answer multisets.

    Parts that both parse as numbers compare under relative tolerance 1e-6;
    everything else must match as strings. Multisets must match exactly.
    """
    gold_norm = [normalize_answer_part(g) for g in gold]
    if len(pred.normalized) != len(gold_norm):
        return False
    remaining = list(gold_norm)
    for part in pred.normalized:
        for j, g in enumerate(remaining):
            if _parts_equal(part, g):
                del remaining[j]
                break
        else:
            return False
    return True


def solve_with_voting(lm, table: Table, prompt: SolverPrompt, n_votes: int,
                      max_steps: int = DEFAULT_MAX_STEPS,
                      temperature: float = DEFAULT_SOLVER_TEMPERATURE,
                      ) -> tuple[Answer | None, list[SolverTrace]]:
    """Run the solver n_votes times (fresh environment each run) and vote."""
    traces = [react_loop(lm, table, prompt, max_steps, temperature) for _ in range(n_votes)]
    return majority_vote([t.answer for t in traces]), traces
