"""Graph-derived linear operators for weighted oscillator networks.

All matrices are dense numpy arrays.  Edge ``e = (i, j)`` with ``i < j`` is
oriented ``i -> j`` so that ``(B^T x)_e = x_i - x_j``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import (
    DimensionMismatch,
    DisconnectedGraph,
    InvalidNetwork,
    NonPositiveWeight,
)

#: Relative eigenvalue cutoff used for the Laplacian pseudoinverse.
PINV_CUTOFF = 1e-9


@dataclass(frozen=True)
class Network:
    """Weighted undirected connected graph with a fixed edge orientation.

    ``edges`` holds ``(i, j, weight)`` triples; endpoints are normalised so
    that ``i < j``.  Construction fails for disconnected graphs, self-loops,
    duplicate edges or non-positive weights.
    """

    n: int
    edges: tuple = field(default=())

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise InvalidNetwork("a network needs at least one node")
        norm = []
        seen = set()
        for idx, edge in enumerate(self.edges):
            try:
                i, j, w = edge
            except (TypeError, ValueError):
                raise InvalidNetwork(f"edge {idx} is not an (i, j, weight) triple") from None
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise InvalidNetwork(f"edge {idx} is a self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidNetwork(f"edge {idx} = ({i}, {j}) has an endpoint outside [0, {n})")
            if not (w > 0 and np.isfinite(w)):
                raise NonPositiveWeight(f"edge {idx} = ({i}, {j}) has weight {w}")
            i, j = min(i, j), max(i, j)
            if (i, j) in seen:
                raise InvalidNetwork(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            norm.append((i, j, w))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(norm))
        if n > 1 and _bfs_tree(n, self.edges) is None:
            raise DisconnectedGraph(f"network with {n} nodes and {len(norm)} edges is disconnected")

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def incidence(self) -> np.ndarray:
        B = np.zeros((self.n, self.m))
        for e, (i, j, _) in enumerate(self.edges):
            B[i, e] = 1.0
            B[j, e] = -1.0
        B.setflags(write=False)
        return B

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.array([e[2] for e in self.edges], dtype=float)
        w.setflags(write=False)
        return w

    @classmethod
    def from_adjacency(cls, adjacency) -> "Network":
        """Build from a symmetric weighted adjacency matrix (upper triangle is read)."""
        A = np.asarray(adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"adjacency must be square, got {A.shape}")
        if not np.allclose(A, A.T):
            raise InvalidNetwork("adjacency matrix is not symmetric")
        iu, ju = np.nonzero(np.triu(A, k=1))
        return cls(A.shape[0], tuple((int(i), int(j), float(A[i, j])) for i, j in zip(iu, ju)))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            A[i, j] = A[j, i] = w
        return A


def _bfs_tree(n, edges):
    """Edge indices of the BFS spanning tree rooted at 0, or None if disconnected.

    Neighbours are scanned in input edge order, which makes the tree
    deterministic.
    """
    nbrs = [[] for _ in range(n)]
    for e, (i, j, _) in enumerate(edges):
        nbrs[i].append((e, j))
        nbrs[j].append((e, i))
    parent_edge = [-1] * n
    visited = [False] * n
    visited[0] = True
    queue = deque([0])
    tree = []
    while queue:
        u = queue.popleft()
        for e, v in nbrs[u]:
            if not visited[v]:
                visited[v] = True
                parent_edge[v] = e
                tree.append(e)
                queue.append(v)
    if len(tree) != n - 1:
        return None
    return tree, parent_edge


@dataclass(frozen=True)
class OperatorSet:
    """Immutable bundle of the matrices derived from a :class:`Network`."""

    network: Network
    B: np.ndarray
    A_diag: np.ndarray
    L: np.ndarray
    L_pinv: np.ndarray
    P: np.ndarray
    B_s: np.ndarray
    B_sharp: np.ndarray
    tree_edges: tuple
    norm_P_inf: float
    norm_Bsharp_inf: float

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def m(self) -> int:
        return self.network.m

    @cached_property
    def BT_Lpinv(self) -> np.ndarray:
        """``B^T L^+``, the map from balanced injections to edge space."""
        M = self.B.T @ self.L_pinv
        M.setflags(write=False)
        return M

    @cached_property
    def Lpinv_B_A(self) -> np.ndarray:
        """``L^+ B A``, the map from edge space back to node space."""
        M = self.L_pinv @ self.B @ self.A_diag
        M.setflags(write=False)
        return M


def matrix_inf_norm(M) -> float:
    """Maximum absolute row sum (moduli for complex entries)."""
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(M), axis=1)))


def laplacian_pinv(L: np.ndarray, cutoff: float = PINV_CUTOFF):
    """Pseudoinverse and numerical rank of a symmetric PSD matrix."""
    lam, V = np.linalg.eigh(L)
    lam_max = float(np.max(np.abs(lam))) if lam.size else 0.0
    keep = lam > cutoff * lam_max if lam_max > 0 else np.zeros_like(lam, dtype=bool)
    pinv = (V[:, keep] / lam[keep]) @ V[:, keep].T
    return (pinv + pinv.T) / 2, int(np.count_nonzero(keep))


def spanning_tree_operators(net: Network):
    """Incidence ``B_s`` of the BFS spanning tree and ``B_sharp`` with ``B_sharp B_s^T = B^T``.

    Row ``e`` of ``B_sharp`` writes edge ``e`` as the signed sum of the
    tree edges on the tree path between its endpoints, so the entries are
    exactly -1, 0 or 1.  Tree columns follow input edge order.

    Returns ``(B_s, B_sharp, tree_edges)``.
    """
    found = _bfs_tree(net.n, net.edges)
    if found is None:
        raise DisconnectedGraph("no spanning tree: network is disconnected")
    tree, parent_edge = found
    tree = sorted(tree)
    col = {e: c for c, e in enumerate(tree)}
    B = net.incidence
    B_s = B[:, tree].copy()

    # path_to_root[v] is the row vector r with r . (B_s^T x) = x_v - x_0
    path_to_root = np.zeros((net.n, len(tree)))
    order = _bfs_order(net.n, parent_edge, net.edges)
    for v in order[1:]:
        e = parent_edge[v]
        i, j, _ = net.edges[e]
        parent = j if i == v else i
        sign = 1.0 if i == v else -1.0  # tree edge i->j reads x_i - x_j
        path_to_root[v] = path_to_root[parent]
        path_to_root[v, col[e]] += sign

    B_sharp = np.empty((net.m, len(tree)))
    for e, (i, j, _) in enumerate(net.edges):
        B_sharp[e] = path_to_root[i] - path_to_root[j]
    B_s.setflags(write=False)
    B_sharp.setflags(write=False)
    return B_s, B_sharp, tuple(tree)


def _bfs_order(n, parent_edge, edges):
    children = [[] for _ in range(n)]
    for v in range(1, n):
        i, j, _ = edges[parent_edge[v]]
        children[j if i == v else i].append(v)
    order, queue = [], deque([0])
    while queue:
        u = queue.popleft()
        order.append(u)
        queue.extend(children[u])
    return order


def build_operators(net: Network) -> OperatorSet:
    """Compute Laplacian, pseudoinverse, cutset projection and tree operators."""
    B = net.incidence
    w = net.weights
    A_diag = np.diag(w)
    L = (B * w) @ B.T
    L_pinv, rank = laplacian_pinv(L)
    if rank < net.n - 1:
        raise DisconnectedGraph(f"rank(L) = {rank} < n - 1 = {net.n - 1}")
    P = B.T @ L_pinv @ (B * w)
    B_s, B_sharp, tree = spanning_tree_operators(net)
    for M in (A_diag, L, L_pinv, P):
        M.setflags(write=False)
    return OperatorSet(
        network=net,
        B=B,
        A_diag=A_diag,
        L=L,
        L_pinv=L_pinv,
        P=P,
        B_s=B_s,
        B_sharp=B_sharp,
        tree_edges=tree,
        norm_P_inf=matrix_inf_norm(P),
        norm_Bsharp_inf=matrix_inf_norm(B_sharp),
    )


def weighted_laplacian(net: Network, w) -> np.ndarray:
    """``B A diag(w) B^T`` over the complex numbers."""
    w = np.asarray(w, dtype=complex)
    if w.ndim != 1 or w.shape[0] != net.m:
        raise DimensionMismatch(f"w must have length m = {net.m}, got shape {w.shape}")
    B = net.incidence
    return (B * (net.weights * w)) @ B.T


def numerical_rank(M, rel_tol: float = 1e-9) -> int:
    """Count of singular values above ``rel_tol * sigma_max``."""
    s = np.linalg.svd(np.asarray(M), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))
