"""Taylor expansion of the inverse Kuramoto map and the approximate tests built on it."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .exceptions import InvalidRange, OverflowGuard
from .graph import OperatorSet
from .partitions import enumerate_odd_partitions
from .validation import check_in_cutset_space, check_vector, project_mean

#: Default truncation order; order 2 gives the fifth-order test T5.
DEFAULT_ORDER = 2
MAX_ORDER = 50


def hadamard_power(x, p: int) -> np.ndarray:
    """Elementwise ``p``-th power; ``p = 0`` gives the all-ones vector."""
    if p < 0:
        raise InvalidRange(f"Hadamard power must be non-negative, got {p}")
    x = np.asarray(x)
    if p == 0:
        return np.ones_like(x)
    out = x.copy()
    for _ in range(p - 1):
        out = out * x
    return out


@dataclass(frozen=True)
class SeriesExpansion:
    """Evaluated odd terms ``A_1(eta), A_3(eta), ..., A_{2N+1}(eta)``.

    ``terms[j]`` is the homogeneous degree-``2j+1`` edge-space term and
    ``node_terms[j] = L^+ B A terms[j]`` its node-space image.
    """

    eta: np.ndarray
    terms: tuple
    node_terms: tuple
    order: int

    def partial_sum(self, n: int | None = None) -> np.ndarray:
        """Edge-space partial sum of terms ``0..n`` (all terms by default)."""
        n = self.order if n is None else n
        if not 0 <= n <= self.order:
            raise InvalidRange(f"partial sum order {n} outside [0, {self.order}]")
        return np.sum(self.terms[: n + 1], axis=0)

    def node_partial_sum(self, n: int | None = None) -> np.ndarray:
        n = self.order if n is None else n
        if not 0 <= n <= self.order:
            raise InvalidRange(f"partial sum order {n} outside [0, {self.order}]")
        return np.sum(self.node_terms[: n + 1], axis=0)

    def partial_sums(self) -> np.ndarray:
        """Array of shape ``(order + 1, m)`` with every edge-space partial sum."""
        return np.cumsum(np.asarray(self.terms), axis=0)

    def term_norms(self) -> np.ndarray:
        return np.array([np.max(np.abs(t)) if t.size else 0.0 for t in self.terms])


@lru_cache(maxsize=None)
def _recursion_plan(j: int) -> tuple:
    """Signed weights and factor lists for the degree-``2j+1`` term.

    Each entry is ``(weight, ((term_index, count), ...))`` where the weight
    folds ``(-1)^(k+1) / (2k+1)!`` together with the partition multiplicity.
    """
    plan = []
    for k in range(1, j + 1):
        coef = (-1) ** (k + 1) / factorial(2 * k + 1)
        for part in enumerate_odd_partitions(j, k):
            factors = tuple(((value - 1) // 2, count) for value, count in Counter(part.parts).items())
            plan.append((coef * part.multiplicity, factors))
    return tuple(plan)


def _series_terms(P: np.ndarray, eta: np.ndarray, order: int) -> list[np.ndarray]:
    terms = [eta]
    powers = {}

    def power(index, count):
        key = (index, count)
        if key not in powers:
            powers[key] = terms[index] if count == 1 else power(index, count - 1) * terms[index]
        return powers[key]

    for j in range(1, order + 1):
        acc = np.zeros_like(eta)
        for weight, factors in _recursion_plan(j):
            (i0, c0), *rest = factors
            prod = weight * power(i0, c0)
            for index, count in rest:
                prod = prod * power(index, count)
            acc += prod
        terms.append(P @ acc)
    return terms


def expand(ops: OperatorSet, eta, order: int = DEFAULT_ORDER, check: bool = True) -> SeriesExpansion:
    """Evaluate the inverse-map Taylor terms up to degree ``2*order + 1`` at ``eta``.

    ``eta`` must lie in the cutset space ``Img(B^T)``; the check can be
    skipped with ``check=False`` when the caller built ``eta`` as ``B^T y``.
    """
    order = int(order)
    if order < 0:
        raise InvalidRange(f"order must be non-negative, got {order}")
    if order > MAX_ORDER:
        raise OverflowGuard(f"order {order} exceeds the supported maximum {MAX_ORDER}")
    eta = check_vector(eta, ops.m, "eta")
    if check:
        check_in_cutset_space(eta, ops.P)
    terms = _series_terms(ops.P, eta, order)
    node_terms = [ops.Lpinv_B_A @ t for t in terms]
    return SeriesExpansion(eta=eta, terms=tuple(terms), node_terms=tuple(node_terms), order=order)


def flow_injection(ops: OperatorSet, omega) -> np.ndarray:
    """``eta = B^T L^+ omega`` after projecting ``omega`` onto the zero-sum subspace."""
    omega = project_mean(check_vector(omega, ops.n, "omega"))
    return ops.BT_Lpinv @ omega


def approximate_manifold(ops: OperatorSet, omega, n: int = DEFAULT_ORDER) -> np.ndarray:
    """Node-space approximation ``S_{2n+1}`` of the synchronization manifold."""
    exp = expand(ops, flow_injection(ops, omega), n, check=False)
    return exp.node_partial_sum()


def approximate_test(ops: OperatorSet, omega, n: int = DEFAULT_ORDER,
                     gamma: float = np.pi / 4) -> tuple[bool, float]:
    """The order-``2n+1`` approximate synchronization test.

    Returns ``(verdict, margin)`` where ``margin = gamma - ||partial sum||_inf``.
    """
    if not 0 <= gamma < np.pi / 2:
        raise InvalidRange(f"gamma must lie in [0, pi/2), got {gamma}")
    exp = expand(ops, flow_injection(ops, omega), n, check=False)
    size = float(np.max(np.abs(exp.partial_sum()))) if ops.m else 0.0
    return size <= gamma, gamma - size
