"""Shared helpers for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import product

from fairdiv import Allocation, Instance, instance_from_rows


def random_instance(
    rng: random.Random,
    n: int,
    m: int,
    max_denominator: int = 10,
    force_unit_max: bool = False,
) -> Instance:
    """Random instance with values in [0, 1] and small denominators.

    With ``force_unit_max`` every agent gets at least one good of value
    exactly 1 (the perfect-predictions shape).
    """
    rows = []
    for _ in range(n):
        d = rng.randint(1, max_denominator)
        row = [Fraction(rng.randint(0, d), d) for _ in range(m)]
        if force_unit_max and m > 0:
            row[rng.randrange(m)] = Fraction(1)
        rows.append(row)
    return instance_from_rows(rows)


def all_allocations(n: int, m: int):
    """Every complete allocation of m goods to n agents."""
    for owners in product(range(1, n + 1), repeat=m):
        yield Allocation(owners)
