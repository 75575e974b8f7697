"""Convergence and solvability certificates for the inverse-map series."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .graph import OperatorSet
from .validation import MEAN_TOL, check_vector, project_mean


def g_function(x: float) -> float:
    """Certificate radius as a function of ``||P||_inf``.

    ``g(x) = (y + sin y)/2 - x (y - sin y)/2`` with ``y = arccos((x-1)/(x+1))``;
    decreasing from ``g(1) = 1`` towards 0.
    """
    x = float(x)
    if not x >= 1.0:
        raise DomainError(f"g is defined on [1, inf), got {x}")
    y = math.acos((x - 1.0) / (x + 1.0))
    s = math.sin(y)
    return (y + s) / 2.0 - x * (y - s) / 2.0


def gamma_star(norm_P: float) -> float:
    """Uniqueness cohesion angle ``arccos((p - 1)/(p + 1))`` for ``p = ||P||_inf``."""
    if not norm_P >= 1.0:
        raise DomainError(f"||P||_inf must be >= 1, got {norm_P}")
    return math.acos((norm_P - 1.0) / (norm_P + 1.0))


def cutset_norm(ops: OperatorSet) -> float:
    """``||P||_inf`` with round-off below 1 clamped (the norm is at least 1 exactly)."""
    value = ops.norm_P_inf
    if 1.0 - 1e-9 <= value < 1.0:
        return 1.0
    return value


@dataclass(frozen=True)
class SyncCertificate:
    norm_P: float
    gamma_star: float
    g_value: float
    omega_bound: float
    omega_s_bound: float
    flow_norm: float
    tree_flow_norm: float
    in_omega: bool
    omega_margin: float
    in_omega_s: bool
    omega_s_margin: float
    tree_edges: tuple

    def as_dict(self) -> dict:
        return {
            "norm_P": self.norm_P,
            "gamma_star": self.gamma_star,
            "g_value": self.g_value,
            "omega_bound": self.omega_bound,
            "omega_s_bound": self.omega_s_bound,
            "flow_norm": self.flow_norm,
            "tree_flow_norm": self.tree_flow_norm,
            "in_omega": self.in_omega,
            "omega_margin": self.omega_margin,
            "in_omega_s": self.in_omega_s,
            "omega_s_margin": self.omega_s_margin,
            "tree_edges": list(self.tree_edges),
        }


def certificate(ops: OperatorSet, omega) -> SyncCertificate:
    """Evaluate the Omega / Omega^s membership tests for ``omega``.

    ``Omega`` bounds ``||B^T L^+ omega||_inf`` by ``g(||P||_inf)``;
    ``Omega^s`` bounds the spanning-tree flows ``||B_s^T L^+ omega||_inf``
    by ``g(||P||_inf) / ||B_sharp||_inf``.  Boundaries count as inside.
    """
    node = ops.L_pinv @ project_mean(check_vector(omega, ops.n, "omega"))
    eta = ops.B.T @ node
    xi = ops.B_s.T @ node
    norm_P = cutset_norm(ops)
    g = g_function(norm_P)
    bound_s = g / ops.norm_Bsharp_inf if ops.norm_Bsharp_inf > 0 else math.inf
    flow = float(np.max(np.abs(eta))) if eta.size else 0.0
    tree_flow = float(np.max(np.abs(xi))) if xi.size else 0.0
    return SyncCertificate(
        norm_P=norm_P,
        gamma_star=gamma_star(norm_P),
        g_value=g,
        omega_bound=g,
        omega_s_bound=bound_s,
        flow_norm=flow,
        tree_flow_norm=tree_flow,
        in_omega=flow <= g,
        omega_margin=g - flow,
        in_omega_s=tree_flow <= bound_s,
        omega_s_margin=bound_s - tree_flow,
        tree_edges=ops.tree_edges,
    )


def in_cohesive_set(ops: OperatorSet, x, gamma: float) -> bool:
    """True iff ``x`` sums to zero (within 1e-9) and every edge difference is at most ``gamma``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (ops.n,) or abs(float(np.sum(x))) > MEAN_TOL:
        return False
    if ops.m == 0:
        return gamma >= 0
    return float(np.max(np.abs(ops.B.T @ x))) <= gamma
