"""Odd-part integer partitions indexing the inverse-series recursion."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from math import factorial, prod

from .exceptions import InvalidRange


@dataclass(frozen=True)
class OddPartition:
    """A multiset of odd parts (stored in non-increasing order).

    ``multiplicity`` is the number of distinct ordered tuples that
    rearrange ``parts``.
    """

    parts: tuple
    multiplicity: int

    @property
    def counts(self) -> dict:
        """Part value -> number of occurrences."""
        return dict(Counter(self.parts))


def multinomial_multiplicity(parts) -> int:
    counts = Counter(parts)
    return factorial(len(parts)) // prod(factorial(c) for c in counts.values())


def _descending_odd(total, count, largest):
    # non-increasing sequences of `count` odd parts, each <= largest, summing to total
    if count == 0:
        if total == 0:
            yield ()
        return
    # every remaining part is >= 1, and parity of the sum must work out
    top = min(largest, total - (count - 1))
    if top % 2 == 0:
        top -= 1
    for first in range(top, 0, -2):
        if first * count < total:
            break
        for rest in _descending_odd(total - first, count - 1, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _enumerate(j: int, k: int) -> tuple:
    return tuple(
        OddPartition(parts, multinomial_multiplicity(parts))
        for parts in _descending_odd(2 * j + 1, 2 * k + 1, 2 * j + 1)
    )


def enumerate_odd_partitions(j: int, k: int) -> list[OddPartition]:
    """All multisets of ``2k+1`` odd positive integers summing to ``2j+1``.

    Results are listed in lexicographically decreasing order of their
    (non-increasing) part tuples.

    >>> [(p.parts, p.multiplicity) for p in enumerate_odd_partitions(3, 1)]
    [((5, 1, 1), 3), ((3, 3, 1), 3)]
    """
    j, k = int(j), int(k)
    if j < 1 or k < 1 or k > j:
        raise InvalidRange(f"need 1 <= k <= j, got j={j}, k={k}")
    return list(_enumerate(j, k))
