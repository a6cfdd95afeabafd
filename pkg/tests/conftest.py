"""Shared fixtures: small tables, random table generator, scripted LM helpers."""

from __future__ import annotations

import random

import pytest

from tabqa.table import Table


def make_random_table(rng: random.Random, n_rows: int, n_cols: int,
                      value_pool: int = 12) -> Table:
    """Random table whose cells come from a small pool, so duplicates happen."""
    names = [f"c{j}" for j in range(n_cols)]
    columns = [
        [f"v{rng.randrange(value_pool)}" for _ in range(n_rows)]
        for _ in range(n_cols)
    ]
    return Table(title="random", column_names=names, columns=columns)


@pytest.fixture
def wallet_table() -> Table:
    """Ten-row toy table with three wallet rows priced 100/200/300."""
    descriptions = [
        "Leather Wallet brown",
        "Steel water bottle",
        "Canvas Wallet slim",
        "Desk lamp white",
        "Travel wallet zip",
        "Wool scarf",
        "Ceramic mug",
        "Notebook A5",
        "Phone stand",
        "Backpack 20L",
    ]
    prices = ["100", "450", "200", "80", "300", "45", "25", "12", "30", "90"]
    status = ["Delivered", "Delivered", "Returned", "Delivered", "Delivered",
              "Returned", "Delivered", "Delivered", "Returned", "Delivered"]
    return Table(
        title="amazon seller order status prediction orders data",
        column_names=["description", "price", "order_status"],
        columns=[descriptions, prices, status],
    )
