"""Table expression interpreter: operations, chaining, errors, totality."""

from __future__ import annotations

import random
import statistics

from tabqa.interpreter import TableEnv, interpret_action, parse_number
from tabqa.table import ColumnDType, Table

from conftest import make_random_table


def env_for(table: Table) -> TableEnv:
    return TableEnv(table)


class TestParseNumber:
    def test_plain(self):
        assert parse_number("42") == 42.0

    def test_currency_and_separators(self):
        assert parse_number("$1,234.50") == 1234.5

    def test_not_a_number(self):
        assert parse_number("wallet") is None

    def test_nan_token_rejected(self):
        assert parse_number("nan") is None
        assert parse_number("inf") is None


class TestSingleOps:
    def test_contains_then_mean(self, wallet_table):
        env = env_for(wallet_table)
        obs = interpret_action(env, 'contains(description, "wallet") |> agg(price, mean)')
        assert obs == "200"

    def test_contains_is_case_insensitive(self, wallet_table):
        env = env_for(wallet_table)
        obs = interpret_action(env, 'contains(description, "WALLET") |> agg(price, count)')
        assert obs == "3"

    def test_agg_on_non_numeric_column(self, wallet_table):
        env = env_for(wallet_table)
        obs = interpret_action(env, "agg(description, mean)")
        assert obs.startswith("Error:")
        assert "not numeric" in obs

    def test_head_zero_renders_empty_table(self, wallet_table):
        env = env_for(wallet_table)
        obs = interpret_action(env, "head(0)")
        assert obs.splitlines()[0] == "description,price,order_status"
        assert "(0 rows x 3 columns)" in obs

    def test_table_rendering_caps_at_five_rows(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "head(9)")
        lines = obs.splitlines()
        assert len(lines) == 1 + 5 + 1  # header, five rows, summary
        assert "(9 rows x 3 columns)" in obs

    def test_project(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "project(price) |> head(1)")
        assert obs.splitlines()[0] == "price"
        assert obs.splitlines()[1] == "100"

    def test_distinct(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "distinct(order_status)")
        assert obs.splitlines()[:3] == ["order_status", "Delivered", "Returned"]

    def test_sort_desc_then_head(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "sort(price, desc) |> head(1) |> project(price)")
        assert obs.splitlines()[1] == "450"

    def test_filter_numeric(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "filter(price, >, 250) |> agg(price, count)")
        assert obs == "2"  # 450 and 300

    def test_filter_string_equality(self, wallet_table):
        obs = interpret_action(env_for(wallet_table),
                               "filter(order_status, ==, Returned) |> agg(price, count)")
        assert obs == "3"

    def test_quoted_literal_with_comma(self):
        table = Table("t", ["name", "v"], [["a,b", "plain"], ["1", "2"]])
        obs = interpret_action(env_for(table), 'filter(name, ==, "a,b") |> agg(v, count)')
        assert obs == "1"

    def test_agg_sum_and_minmax(self, wallet_table):
        env = env_for(wallet_table)
        assert interpret_action(env, 'contains(description, wallet) |> agg(price, sum)') == "600"
        assert interpret_action(env, "agg(price, min)") == "12"
        assert interpret_action(env, "agg(price, max)") == "450"

    def test_datetime_min_keeps_surface_form(self):
        table = Table("t", ["d"], [["2021-05-06", "2020-01-01"]])
        assert interpret_action(env_for(table), "agg(d, min)") == "2020-01-01"

    def test_twelve_significant_digits(self):
        table = Table("t", ["x"], [["1", "1", "1", "1", "1", "1", "1", "1", "1",
                                    "1", "1", "5313.5"]])
        obs = interpret_action(env_for(table), "agg(x, mean)")
        assert obs == f"{(11 + 5313.5) / 12:.12g}"


class TestCastPersistence:
    def test_cast_persists_across_steps(self):
        table = Table("t", ["amount"], [["$100", "$200", "$300"]])
        env = env_for(table)
        assert env.dtypes["amount"] is ColumnDType.CATEGORICAL
        first = interpret_action(env, "cast(amount, float)")
        assert not first.startswith("Error:")
        assert env.dtypes["amount"] is ColumnDType.FLOAT
        assert interpret_action(env, "agg(amount, mean)") == "200"

    def test_cast_mid_chain_applies_immediately(self):
        table = Table("t", ["amount"], [["$10", "$20"]])
        env = env_for(table)
        obs = interpret_action(env, "cast(amount, float) |> agg(amount, sum)")
        assert obs == "30"

    def test_unknown_dtype(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "cast(price, complex)")
        assert obs.startswith("Error:")


class TestErrors:
    def test_unknown_column(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "agg(nope, mean)")
        assert obs == "Error: unknown column 'nope'"

    def test_unknown_operation(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "explode(price)")
        assert obs == "Error: unknown operation 'explode'"

    def test_parse_failure(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "just some text")
        assert obs.startswith("Error: cannot parse")

    def test_unknown_operator(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "filter(price, ~=, 3)")
        assert obs.startswith("Error: unknown operator")

    def test_chain_after_aggregate(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "agg(price, mean) |> head(1)")
        assert obs == "Error: cannot chain after an aggregate"

    def test_bad_head_argument(self, wallet_table):
        obs = interpret_action(env_for(wallet_table), "head(lots)")
        assert obs.startswith("Error:")

    def test_solver_continues_semantics_never_raise(self, wallet_table):
        env = env_for(wallet_table)
        for bad in ["", "head()", "filter(price)", "agg(price, median)",
                    'contains("unterminated', "sort(price, sideways)", "|>", "()"]:
            obs = interpret_action(env, bad)
            assert obs.startswith("Error:"), bad


class TestTotalityFuzz:
    def test_random_actions_never_raise(self):
        rng = random.Random(99)
        table = make_random_table(rng, 8, 3)
        env = env_for(table)
        ops = ["filter", "project", "agg", "sort", "head", "distinct", "cast", "contains"]
        fragments = ["c0", "c1", "zzz", "mean", "asc", "5", "-1", "'a,b'", "==", ">", "x|y"]
        for _ in range(300):
            n_stages = rng.randint(1, 3)
            stages = []
            for _ in range(n_stages):
                op = rng.choice(ops)
                args = ", ".join(rng.choice(fragments) for _ in range(rng.randint(0, 4)))
                stages.append(f"{op}({args})")
            action = " |> ".join(stages)
            obs = interpret_action(env, action)
            assert isinstance(obs, str)

    def test_oracle_mean_matches_statistics_module(self, wallet_table):
        prices = [100.0, 200.0, 300.0]
        expected = statistics.mean(prices)
        obs = interpret_action(env_for(wallet_table),
                               "contains(description, wallet) |> agg(price, mean)")
        assert float(obs) == expected
