"""Table core: type inference, schema summaries, distinct pairs, stats."""

from __future__ import annotations

import random
from collections import Counter

import pytest

from tabqa.table import (
    CellPair,
    ColumnDType,
    CorpusStats,
    Table,
    build_schema,
    distinct_pairs_by_freq,
    infer_column_type,
    is_null,
    table_stats,
)

from conftest import make_random_table


def brute_force_pairs(table: Table) -> list[CellPair]:
    """Independent oracle: plain set-and-count over all cells."""
    counts: Counter = Counter()
    for name, cells in zip(table.column_names, table.columns):
        for cell in cells:
            if not is_null(cell):
                counts[(name, cell.strip())] += 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    return [CellPair(c, v, f) for (c, v), f in ordered]


class TestInferColumnType:
    def test_all_integers(self):
        assert infer_column_type(["1", "2", "3"]) is ColumnDType.INTEGER

    def test_mixed_unparseable_is_categorical(self):
        assert infer_column_type(["1.5", "2", "x"]) is ColumnDType.CATEGORICAL

    def test_iso_dates(self):
        assert infer_column_type(["2020-01-01", "2021-05-06"]) is ColumnDType.DATETIME

    def test_floats(self):
        assert infer_column_type(["1.5", "2", "3e2"]) is ColumnDType.FLOAT

    def test_all_null_is_categorical(self):
        assert infer_column_type(["", "NA", "null"]) is ColumnDType.CATEGORICAL

    def test_nulls_ignored_for_typing(self):
        assert infer_column_type(["1", "", "N/A", "3"]) is ColumnDType.INTEGER

    def test_permutation_invariant(self):
        rng = random.Random(7)
        pools = [["1", "2", "x"], ["1", "2.5"], ["2020-01-01", "2020-02-02"], ["a", "b"]]
        for pool in pools:
            values = [rng.choice(pool) for _ in range(30)]
            shuffled = list(values)
            rng.shuffle(shuffled)
            assert infer_column_type(values) is infer_column_type(shuffled)

    def test_datetime_with_time_part(self):
        assert infer_column_type(["2020-01-01T10:30:00"]) is ColumnDType.DATETIME

    def test_compact_digits_are_not_dates(self):
        # "20200101" parses as an integer, never as a date
        assert infer_column_type(["20200101"]) is ColumnDType.INTEGER


class TestBuildSchema:
    def test_integer_min_max(self):
        table = Table("t", ["quantity"], [["1", "2", "3", "4"]])
        (schema,) = build_schema(table)
        assert schema.dtype is ColumnDType.INTEGER
        assert schema.min_value == 1
        assert schema.max_value == 4

    def test_categorical_top3_by_frequency(self):
        cells = ["$449.00", "$449.00", "$449.00", "$399.00", "$399.00",
                 "$549.00", "$549.00", "$10.00"]
        table = Table("t", ["item_total"], [cells])
        (schema,) = build_schema(table)
        assert schema.top_values == ["$449.00", "$399.00", "$549.00"]

    def test_categorical_ties_break_lexicographically(self):
        table = Table("t", ["c"], [["b", "a", "c", "a", "b", "c"]])
        (schema,) = build_schema(table)
        assert schema.top_values == ["a", "b", "c"]

    def test_all_null_column(self):
        table = Table("t", ["c"], [["", "NA", ""]])
        (schema,) = build_schema(table)
        assert schema.dtype is ColumnDType.CATEGORICAL
        assert schema.top_values == []
        assert schema.null_count == 3

    def test_datetime_min_max_keep_surface_form(self):
        table = Table("t", ["d"], [["2021-05-06", "2020-01-01", "2020-06-15"]])
        (schema,) = build_schema(table)
        assert schema.min_value == "2020-01-01"
        assert schema.max_value == "2021-05-06"

    def test_one_schema_per_column_in_order(self):
        table = Table("t", ["a", "b"], [["1"], ["x"]])
        schemas = build_schema(table)
        assert [s.column_name for s in schemas] == ["a", "b"]


class TestDistinctPairs:
    def test_direct_count(self):
        table = Table("t", ["A"], [["x", "x", "y"]])
        assert distinct_pairs_by_freq(table) == [CellPair("A", "x", 2), CellPair("A", "y", 1)]

    def test_tie_break_by_column_then_value(self):
        table = Table("t", ["A", "B"], [["x"], ["x"]])
        assert distinct_pairs_by_freq(table) == [CellPair("A", "x", 1), CellPair("B", "x", 1)]

    def test_all_distinct_worst_case(self):
        table = Table("t", ["a", "b"], [["1", "2"], ["3", "4"]])
        pairs = distinct_pairs_by_freq(table)
        assert len(pairs) == 4

    def test_matches_brute_force_on_random_tables(self):
        rng = random.Random(11)
        for _ in range(50):
            table = make_random_table(rng, rng.randint(1, 20), rng.randint(1, 6))
            assert distinct_pairs_by_freq(table) == brute_force_pairs(table)

    def test_frequencies_sum_to_non_null_cells(self):
        rng = random.Random(13)
        for _ in range(20):
            table = make_random_table(rng, rng.randint(1, 15), rng.randint(1, 5))
            pairs = distinct_pairs_by_freq(table)
            non_null = sum(
                1 for col in table.columns for cell in col if not is_null(cell)
            )
            assert sum(p.frequency for p in pairs) == non_null

    def test_row_shuffle_leaves_ranking_unchanged(self):
        rng = random.Random(17)
        table = make_random_table(rng, 25, 4)
        perm = list(range(table.n_rows))
        rng.shuffle(perm)
        shuffled = Table(
            title=table.title,
            column_names=list(table.column_names),
            columns=[[col[i] for i in perm] for col in table.columns],
        )
        assert distinct_pairs_by_freq(table) == distinct_pairs_by_freq(shuffled)

    def test_nulls_excluded(self):
        table = Table("t", ["A"], [["x", "", "NA", "x"]])
        assert distinct_pairs_by_freq(table) == [CellPair("A", "x", 2)]


class TestTableStats:
    def test_small_example(self):
        table = Table("t", ["a", "b"], [["1", "1", "2"], ["x", "x", "y"]])
        stats = table_stats(table)
        assert stats == CorpusStats(n_rows=3, n_cols=2, n_cells=6, n_distinct=4,
                                    n_categorical_cols=1)

    def test_single_cell(self):
        stats = table_stats(Table("t", ["a"], [["7"]]))
        assert stats.n_cells == 1
        assert stats.n_distinct <= 1

    def test_distinct_matches_set_oracle_on_random_table(self):
        rng = random.Random(19)
        table = make_random_table(rng, 20, 10)
        oracle = {
            (name, cell.strip())
            for name, cells in zip(table.column_names, table.columns)
            for cell in cells if not is_null(cell)
        }
        assert table_stats(table).n_distinct == len(oracle)

    def test_distinct_bounded_by_cells(self):
        rng = random.Random(23)
        for _ in range(30):
            table = make_random_table(rng, rng.randint(1, 12), rng.randint(1, 6))
            stats = table_stats(table)
            assert stats.n_distinct <= stats.n_cells


class TestTableInvariants:
    def test_ragged_columns_rejected(self):
        with pytest.raises(ValueError):
            Table("t", ["a", "b"], [["1"], ["2", "3"]])

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            Table("t", ["a", "a"], [["1"], ["2"]])

    def test_zero_columns_rejected(self):
        with pytest.raises(ValueError):
            Table("t", [], [])

    def test_zero_rows_allowed(self):
        table = Table("t", ["a"], [[]])
        assert table.n_rows == 0
        assert table.n_cols == 1
