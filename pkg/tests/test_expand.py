"""Query expansion: golden prompt rendering, JSON list parsing, fallbacks."""

from __future__ import annotations

import pytest

from tabqa.errors import ParseFailureError
from tabqa.expand import (
    expand_cell_queries,
    expand_queries,
    expand_schema_queries,
    parse_json_list,
    render_cell_query_prompt,
    render_schema_query_prompt,
)
from tabqa.gateway import ScriptedChatModel

TITLE = "amazon seller order status prediction orders data"
QUESTION = "What is the average price for leather wallets?"

SCHEMA_PROMPT_GOLDEN = '''Given a large table regarding "amazon seller order status prediction orders data", I want to answer a question: "What is the average price for leather wallets?"
Since I cannot view the table directly, please suggest some column names that might contain the necessary data to answer this question.
Please answer with a list of column names in JSON format without any additional explanation.
Example:
["column1", "column2", "column3"]'''

CELL_PROMPT_GOLDEN = '''Given a large table regarding "amazon seller order status prediction orders data", I want to answer a question: "What is the average price for leather wallets?"
Please extract some keywords which might appear in the table cells and help answer the question.
The keywords should be categorical values rather than numerical values.
The keywords should be contained in the question.
Please answer with a list of keywords in JSON format without any additional explanation.
Example:
["keyword1", "keyword2", "keyword3"]'''


class TestPromptRendering:
    def test_schema_prompt_byte_identical(self):
        assert render_schema_query_prompt(TITLE, QUESTION) == SCHEMA_PROMPT_GOLDEN

    def test_cell_prompt_byte_identical(self):
        assert render_cell_query_prompt(TITLE, QUESTION) == CELL_PROMPT_GOLDEN


class TestParseJsonList:
    def test_plain_array(self):
        assert parse_json_list('["a","b"]') == ["a", "b"]

    def test_array_embedded_in_prose(self):
        assert parse_json_list('Sure! ["a"] hope this helps') == ["a"]

    def test_no_array_raises(self):
        with pytest.raises(ParseFailureError):
            parse_json_list("no list here")

    def test_first_string_array_wins(self):
        assert parse_json_list('[1, 2] then ["x", "y"]') == ["x", "y"]

    def test_elements_trimmed_and_empties_dropped(self):
        assert parse_json_list('["  a  ", "", "b"]') == ["a", "b"]

    def test_empty_array_is_empty_list(self):
        assert parse_json_list("[]") == []

    def test_inner_string_array_found_inside_nested(self):
        # the inner ["a"] is the first well-formed string array by position
        assert parse_json_list('[["a"], "ignored"] ["b"]') == ["a"]

    def test_number_array_skipped_for_later_string_array(self):
        assert parse_json_list("counts [3, 4] then [\"b\"]") == ["b"]


def scripted(reply: str) -> ScriptedChatModel:
    return ScriptedChatModel([{"prompt_contains": "", "reply": reply}])


class TestExpansion:
    def test_schema_completion_from_fixture(self):
        lm = scripted('["product_name", "category", "price"]')
        assert expand_schema_queries(QUESTION, TITLE, lm) == [
            "product_name", "category", "price"]

    def test_cell_completion_from_fixture(self):
        reply = ('["leather wallets", "average price", "amazon seller", '
                 '"order status prediction", "orders data"]')
        queries = expand_cell_queries(QUESTION, TITLE, scripted(reply))
        assert "leather wallets" in queries
        assert "average price" in queries

    def test_prose_reply_falls_back_to_question(self):
        lm = scripted("I think the relevant columns are price and category.")
        assert expand_schema_queries(QUESTION, TITLE, lm) == [QUESTION]

    def test_empty_array_falls_back(self):
        assert expand_cell_queries(QUESTION, TITLE, scripted("[]")) == [QUESTION]

    def test_long_reply_capped_at_ten(self):
        reply = "[" + ", ".join(f'"col{i}"' for i in range(15)) + "]"
        queries = expand_schema_queries(QUESTION, TITLE, scripted(reply))
        assert queries == [f"col{i}" for i in range(10)]

    def test_duplicates_deduplicated_keeping_first(self):
        queries = expand_cell_queries(QUESTION, TITLE, scripted('["a", "b", "a", "c"]'))
        assert queries == ["a", "b", "c"]

    def test_bundle_sets_fallback_flag(self):
        lm = ScriptedChatModel([
            {"prompt_contains": "column names", "reply": '["price"]'},
            {"prompt_contains": "keywords", "reply": "no json"},
        ])
        bundle = expand_queries(QUESTION, TITLE, lm)
        assert bundle.schema_queries == ["price"]
        assert bundle.cell_queries == [QUESTION]
        assert bundle.used_fallback

    def test_bundle_without_fallback(self):
        lm = ScriptedChatModel([
            {"prompt_contains": "column names", "reply": '["price"]'},
            {"prompt_contains": "keywords", "reply": '["wallets"]'},
        ])
        bundle = expand_queries(QUESTION, TITLE, lm)
        assert not bundle.used_fallback

    def test_deterministic_with_scripted_lm(self):
        def run():
            lm = ScriptedChatModel([
                {"prompt_contains": "column names", "reply": '["price", "category"]'},
                {"prompt_contains": "keywords", "reply": '["wallet"]'},
            ])
            return expand_queries(QUESTION, TITLE, lm)
        assert run() == run()
