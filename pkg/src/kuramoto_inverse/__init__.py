"""Taylor expansion of the inverse Kuramoto map and approximate synchronization tests."""
from .cases import CaseData, load_case, parse_matpower, random_network, to_kuramoto
from .certificate import SyncCertificate, certificate, g_function, gamma_star, in_cohesive_set
from .estimator import ApproximateSyncTest, NewtonSyncOracle
from .graph import Network, OperatorSet, build_operators, matrix_inf_norm, spanning_tree_operators, weighted_laplacian
from .oracle import (
    EquilibriumResult,
    kuramoto_map,
    newton_solve,
    q_operator_apply,
    q_operator_inverse_apply,
    simulate,
)
from .partitions import OddPartition, enumerate_odd_partitions
from .series import SeriesExpansion, approximate_manifold, approximate_test, expand, hadamard_power

__version__ = "0.1.0"

__all__ = [
    "ApproximateSyncTest", "CaseData", "EquilibriumResult", "Network", "NewtonSyncOracle",
    "OddPartition", "OperatorSet", "SeriesExpansion", "SyncCertificate", "approximate_manifold",
    "approximate_test", "build_operators", "certificate", "enumerate_odd_partitions", "expand",
    "g_function", "gamma_star", "hadamard_power", "in_cohesive_set", "kuramoto_map", "load_case",
    "matrix_inf_norm", "newton_solve", "parse_matpower", "q_operator_apply",
    "q_operator_inverse_apply", "random_network", "simulate", "spanning_tree_operators",
    "to_kuramoto", "weighted_laplacian",
]
