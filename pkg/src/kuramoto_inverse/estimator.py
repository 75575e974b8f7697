"""scikit-learn compatible wrappers around the series tests and the Newton oracle.

Both estimators are fitted on a network (a :class:`Network`, an
:class:`OperatorSet` or a symmetric weighted adjacency matrix) and then
consume injection profiles as an ``(n_samples, n_nodes)`` array.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .certificate import certificate, cutset_norm, gamma_star
from .exceptions import DimensionMismatch, InvalidRange, OracleFailed
from .graph import Network, OperatorSet, build_operators
from .series import DEFAULT_ORDER, expand, flow_injection
from .sweep import INIT_CHOICES, solve_equilibrium


def _as_operators(X) -> OperatorSet:
    if isinstance(X, OperatorSet):
        return X
    if isinstance(X, Network):
        return build_operators(X)
    return build_operators(Network.from_adjacency(check_array(X)))


class _NetworkEstimator(BaseEstimator):
    def fit(self, X, y=None):
        """Build the graph operators for network ``X``."""
        self._validate_params()
        self.ops_ = _as_operators(X)
        self.n_features_in_ = self.ops_.n
        self.norm_P_ = cutset_norm(self.ops_)
        self.gamma_star_ = gamma_star(self.norm_P_)
        self.tree_edges_ = self.ops_.tree_edges
        return self

    def _validate_params(self):
        gamma = self.gamma
        if not 0 <= gamma < math.pi / 2:
            raise InvalidRange(f"gamma must lie in [0, pi/2), got {gamma}")

    def _check_omega(self, Omega):
        check_is_fitted(self, "ops_")
        Omega = check_array(Omega, dtype=float)
        if Omega.shape[1] != self.n_features_in_:
            raise DimensionMismatch(
                f"X has {Omega.shape[1]} columns, network has {self.n_features_in_} nodes"
            )
        return Omega - Omega.mean(axis=1, keepdims=True)

    def score(self, X, y):
        """Fraction of samples whose verdict matches ``y``."""
        return float(np.mean(self.predict(X) == np.asarray(y, dtype=bool)))


class ApproximateSyncTest(TransformerMixin, _NetworkEstimator):
    """Truncated inverse-series synchronization test of degree ``2*order + 1``.

    ``transform`` returns the approximate manifolds, ``decision_function``
    the margins ``gamma - ||partial sum||_inf`` and ``predict`` the verdicts.
    """

    def __init__(self, order: int = DEFAULT_ORDER, gamma: float = math.pi / 4):
        self.order = order
        self.gamma = gamma

    def _validate_params(self):
        super()._validate_params()
        if int(self.order) < 0:
            raise InvalidRange(f"order must be non-negative, got {self.order}")

    def _expansions(self, Omega):
        for omega in self._check_omega(Omega):
            yield expand(self.ops_, flow_injection(self.ops_, omega), self.order, check=False)

    def transform(self, X):
        return np.array([e.node_partial_sum() for e in self._expansions(X)]).reshape(-1, self.n_features_in_)

    def decision_function(self, X):
        sizes = [np.max(np.abs(e.partial_sum()), initial=0.0) for e in self._expansions(X)]
        return self.gamma - np.asarray(sizes, dtype=float)

    def predict(self, X):
        return self.decision_function(X) >= 0

    def certify(self, X) -> list:
        """Convergence certificates (Omega / Omega^s membership) per sample."""
        return [certificate(self.ops_, omega) for omega in self._check_omega(X)]


class NewtonSyncOracle(TransformerMixin, _NetworkEstimator):
    """Exact equilibrium solver exposed with the same interface as :class:`ApproximateSyncTest`.

    ``transform`` returns the equilibria (NaN rows where none is found) and
    ``predict`` whether one exists with every edge angle at most ``gamma``.
    """

    def __init__(self, gamma: float = math.pi / 4, init: str = "s5"):
        self.gamma = gamma
        self.init = init

    def _validate_params(self):
        super()._validate_params()
        if self.init not in INIT_CHOICES:
            raise InvalidRange(f"init must be one of {INIT_CHOICES}, got {self.init!r}")

    def _solve(self, X):
        out = []
        for omega in self._check_omega(X):
            try:
                out.append(solve_equilibrium(self.ops_, omega, self.init))
            except OracleFailed:
                out.append(None)
        return out

    def transform(self, X):
        rows = [np.full(self.n_features_in_, np.nan) if r is None else r.theta_star for r in self._solve(X)]
        return np.array(rows).reshape(-1, self.n_features_in_)

    def decision_function(self, X):
        return np.array([-np.inf if r is None else self.gamma - r.in_gamma for r in self._solve(X)])

    def predict(self, X):
        return self.decision_function(X) >= 0
