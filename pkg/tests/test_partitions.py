import itertools
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from kuramoto_inverse.exceptions import InvalidRange
from kuramoto_inverse.partitions import enumerate_odd_partitions, multinomial_multiplicity


def ordered_tuples(total, count):
    """Every ordered tuple of ``count`` odd positives summing to ``total`` (explicit listing)."""
    if count == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - (count - 1) + 1, 2):
        for rest in ordered_tuples(total - first, count - 1):
            yield (first,) + rest


def ordered_tuple_count(j, k):
    return sum(1 for _ in ordered_tuples(2 * j + 1, 2 * k + 1))


def test_ordered_tuples_small_cases_by_product():
    for j in range(1, 4):
        for k in range(1, j + 1):
            odds = range(1, 2 * j + 2, 2)
            direct = sum(1 for t in itertools.product(odds, repeat=2 * k + 1) if sum(t) == 2 * j + 1)
            assert direct == ordered_tuple_count(j, k)


@pytest.mark.parametrize(
    "j, k, expected",
    [
        (1, 1, [((1, 1, 1), 1)]),
        (2, 1, [((3, 1, 1), 3)]),
        (3, 2, [((3, 1, 1, 1, 1), 5)]),
        (3, 1, [((5, 1, 1), 3), ((3, 3, 1), 3)]),
    ],
)
def test_known_partitions(j, k, expected):
    assert [(p.parts, p.multiplicity) for p in enumerate_odd_partitions(j, k)] == expected


@pytest.mark.parametrize("j, k", [(1, 0), (2, 3), (0, 0), (3, -1)])
def test_invalid_range(j, k):
    with pytest.raises(InvalidRange):
        enumerate_odd_partitions(j, k)


@pytest.mark.parametrize("j", range(1, 11))
def test_multiplicities_count_ordered_tuples(j):
    for k in range(1, j + 1):
        parts = enumerate_odd_partitions(j, k)
        assert sum(p.multiplicity for p in parts) == ordered_tuple_count(j, k)


def test_large_j_against_composition_count():
    # ordered tuples of 2k+1 odd parts summing to 2j+1 <-> compositions of j-k into 2k+1
    # non-negative parts, counted by C(j+k, 2k)
    from math import comb

    for j in range(1, 11):
        for k in range(1, j + 1):
            total = sum(p.multiplicity for p in enumerate_odd_partitions(j, k))
            assert total == comb(j + k, 2 * k)


@given(st.integers(1, 12), st.data())
def test_partition_invariants(j, data):
    k = data.draw(st.integers(1, j))
    parts = enumerate_odd_partitions(j, k)
    seen = set()
    for p in parts:
        assert len(p.parts) == 2 * k + 1
        assert sum(p.parts) == 2 * j + 1
        assert all(v % 2 == 1 and v >= 1 for v in p.parts)
        assert list(p.parts) == sorted(p.parts, reverse=True)
        assert p.multiplicity == multinomial_multiplicity(p.parts)
        assert p.counts == dict(Counter(p.parts))
        seen.add(p.parts)
    assert len(seen) == len(parts)
    assert [p.parts for p in parts] == sorted((p.parts for p in parts), reverse=True)
