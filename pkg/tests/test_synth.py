"""Synthetic expansion: embedding contract, determinism, answer invariance."""

from __future__ import annotations

import random
import statistics

import pytest

from tabqa.errors import InvalidTargetError
from tabqa.interpreter import TableEnv, interpret_action
from tabqa.synth import expand_table_synthetic
from tabqa.table import Table, table_stats


def base_table() -> Table:
    return Table(
        title="purchases",
        column_names=["type", "amount"],
        columns=[["gadget", "tool", "gadget"], ["10", "99", "30"]],
    )


class TestEmbeddingContract:
    def test_original_cells_land_at_mapped_positions(self):
        table = base_table()
        expanded, mapping = expand_table_synthetic(table, 50, 50, seed=1)
        assert expanded.n_rows == 50
        assert expanded.n_cols == 50
        for j, name in enumerate(table.column_names):
            col_pos = mapping.column_positions[name]
            assert expanded.column_names[col_pos] == name
            for i, row_pos in enumerate(mapping.row_positions):
                assert expanded.columns[col_pos][row_pos] == table.columns[j][i]

    def test_filler_columns_named_extra(self):
        expanded, mapping = expand_table_synthetic(base_table(), 10, 10, seed=2)
        original_positions = set(mapping.column_positions.values())
        for pos, name in enumerate(expanded.column_names):
            if pos not in original_positions:
                assert name.startswith("extra_")

    def test_same_seed_identical(self):
        a, map_a = expand_table_synthetic(base_table(), 40, 20, seed=3)
        b, map_b = expand_table_synthetic(base_table(), 40, 20, seed=3)
        assert a == b
        assert map_a == map_b

    def test_different_seed_differs(self):
        a, _ = expand_table_synthetic(base_table(), 40, 20, seed=4)
        b, _ = expand_table_synthetic(base_table(), 40, 20, seed=5)
        assert a != b

    def test_invalid_targets(self):
        with pytest.raises(InvalidTargetError):
            expand_table_synthetic(base_table(), 2, 50, seed=0)
        with pytest.raises(InvalidTargetError):
            expand_table_synthetic(base_table(), 50, 1, seed=0)


class TestAnswerInvariance:
    QUERY = "filter(type, ==, gadget) |> agg(amount, mean)"

    def test_filter_aggregate_answer_preserved(self):
        table = base_table()
        gold = [("type", "gadget")]
        before = interpret_action(TableEnv(table), self.QUERY)
        assert float(before) == statistics.mean([10, 30])
        for seed in range(10):
            expanded, _ = expand_table_synthetic(table, 100, 100, seed=seed,
                                                 avoid_cells=gold)
            after = interpret_action(TableEnv(expanded), self.QUERY)
            assert after == before, f"seed {seed}"

    def test_substring_collisions_are_avoided(self):
        table = Table("t", ["desc", "price"],
                      [["red wallet", "blue sock", "big wallet"], ["5", "7", "15"]])
        action = "contains(desc, wallet) |> agg(price, mean)"
        before = interpret_action(TableEnv(table), action)
        expanded, _ = expand_table_synthetic(table, 80, 40, seed=6,
                                             avoid_cells=[("desc", "wallet")])
        assert interpret_action(TableEnv(expanded), action) == before

    def test_single_valued_column_falls_back(self):
        table = Table("t", ["kind", "x"], [["same", "same"], ["1", "2"]])
        expanded, mapping = expand_table_synthetic(table, 20, 10, seed=7,
                                                   avoid_cells=[("kind", "same")])
        kind_pos = mapping.column_positions["kind"]
        original_rows = set(mapping.row_positions)
        filler_cells = [cell for i, cell in enumerate(expanded.columns[kind_pos])
                        if i not in original_rows]
        assert all("same" not in cell for cell in filler_cells)


class TestDistinctValueSparsity:
    def test_distinct_far_below_cells_at_100(self):
        rng = random.Random(8)
        for seed in range(5):
            rows = rng.randint(3, 12)
            base = Table(
                "t", ["a", "b"],
                [[f"x{rng.randrange(6)}" for _ in range(rows)],
                 [str(rng.randrange(50)) for _ in range(rows)]],
            )
            expanded, _ = expand_table_synthetic(base, 100, 100, seed=seed)
            stats = table_stats(expanded)
            assert stats.n_distinct < 0.1 * stats.n_cells

    def test_distinct_bounded_at_larger_scale(self):
        expanded, _ = expand_table_synthetic(base_table(), 300, 150, seed=9)
        stats = table_stats(expanded)
        assert stats.n_distinct < 0.1 * stats.n_cells
