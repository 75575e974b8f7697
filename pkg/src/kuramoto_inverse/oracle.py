"""Ground truth: forward map, Newton equilibrium solver, RK4 dynamics, Q operators."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, LeftDomain, NoConvergence, RankDeficient
from .graph import OperatorSet, numerical_rank, weighted_laplacian
from .validation import check_in_cutset_space, check_vector, project_mean

DEFAULT_GAMMA_CAP = math.pi / 2 - 1e-6
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50
MAX_HALVINGS = 30


@dataclass(frozen=True)
class EquilibriumResult:
    theta_star: np.ndarray
    residual_inf: float
    iterations: int
    in_gamma: float
    stable: bool

    def as_dict(self) -> dict:
        return {
            "theta_star": self.theta_star.tolist(),
            "residual_inf": self.residual_inf,
            "iterations": self.iterations,
            "max_edge_angle": self.in_gamma,
            "stable": self.stable,
        }


def sinc(z):
    """Unnormalised sinc, ``sin(z)/z`` with ``sinc(0) = 1``; accepts complex input."""
    z = np.asarray(z)
    out = np.ones_like(z, dtype=complex if np.iscomplexobj(z) else float)
    nz = z != 0
    out[nz] = np.sin(z[nz]) / z[nz]
    return out


def kuramoto_map(ops: OperatorSet, x) -> np.ndarray:
    """Edge-space Kuramoto map ``P sin(B^T x)``."""
    x = check_vector(x, ops.n, "x")
    return ops.P @ np.sin(ops.B.T @ x)


def nodal_residual(ops: OperatorSet, omega: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """``omega - B A sin(B^T theta)``."""
    w = ops.network.weights
    return omega - ops.B @ (w * np.sin(ops.B.T @ theta))


def _max_edge(ops, theta):
    return float(np.max(np.abs(ops.B.T @ theta))) if ops.m else 0.0


def is_stable(ops: OperatorSet, theta, rel_tol: float = 1e-8) -> bool:
    """Jacobian test: ``B A [cos(B^T theta)] B^T`` is PSD with a single zero eigenvalue."""
    lam = np.linalg.eigvalsh(weighted_laplacian(ops.network, np.cos(ops.B.T @ theta)).real)
    lam_max = float(np.max(np.abs(lam)))
    if ops.n == 1:
        return True
    if lam[0] < -1e-10:
        return False
    return int(np.count_nonzero(lam < rel_tol * lam_max)) == 1


def newton_solve(
    ops: OperatorSet,
    omega,
    x0=None,
    gamma_cap: float = DEFAULT_GAMMA_CAP,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EquilibriumResult:
    """Damped Newton on the nodal balance ``omega = B A sin(B^T theta)`` over ``1^perp``.

    The default starting point is the linearised solution ``L^+ omega``.
    Steps are halved (at most 30 times) whenever the residual grows or an
    edge difference leaves ``[-gamma_cap, gamma_cap]``.

    Raises:
        LeftDomain: no acceptable step stays inside the cap.
        NoConvergence: ``max_iter`` iterations without reaching ``tol``.
    """
    omega = project_mean(check_vector(omega, ops.n, "omega"))
    if x0 is None:
        theta = ops.L_pinv @ omega
    else:
        theta = check_vector(x0, ops.n, "x0")
        theta = theta - theta.mean()
    if _max_edge(ops, theta) > gamma_cap:
        raise LeftDomain(f"initial guess has max edge angle {_max_edge(ops, theta):.4f} > cap {gamma_cap:.4f}")

    n = ops.n
    ones = np.full((n, n), 1.0 / n)
    w = ops.network.weights
    F = nodal_residual(ops, omega, theta)
    res = float(np.max(np.abs(F)))
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NoConvergence(f"no convergence after {max_iter} iterations (residual {res:.3e})")
        it += 1
        J = (ops.B * (w * np.cos(ops.B.T @ theta))) @ ops.B.T
        # J is singular along 1_n; the rank-one shift fixes the step inside 1^perp
        step = np.linalg.solve(J + ones, F)
        step -= step.mean()
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand = theta + t * step
            if _max_edge(ops, cand) <= gamma_cap:
                F_new = nodal_residual(ops, omega, cand)
                res_new = float(np.max(np.abs(F_new)))
                if res_new < res or res_new <= tol:
                    break
            t /= 2
        else:
            if _max_edge(ops, theta + 2 * t * step) > gamma_cap:
                raise LeftDomain(f"iterate {it} left the cap {gamma_cap:.4f} after {MAX_HALVINGS} halvings")
            raise NoConvergence(f"line search stalled at iteration {it} (residual {res:.3e})")
        theta, F, res = cand - cand.mean(), F_new, res_new

    if it and res > 0:
        # one extra full step drives the residual to round-off; kept only if it helps
        J = (ops.B * (w * np.cos(ops.B.T @ theta))) @ ops.B.T
        cand = theta + np.linalg.solve(J + ones, F)
        cand -= cand.mean()
        if _max_edge(ops, cand) <= gamma_cap:
            res_new = float(np.max(np.abs(nodal_residual(ops, omega, cand))))
            if res_new < res:
                theta, res = cand, res_new

    return EquilibriumResult(
        theta_star=theta,
        residual_inf=res,
        iterations=it,
        in_gamma=_max_edge(ops, theta),
        stable=is_stable(ops, theta),
    )


@dataclass(frozen=True)
class SimulationResult:
    final_phases: np.ndarray
    final_frequencies: np.ndarray
    frequency_spread: float
    t_end: float
    steps: int


def simulate(ops: OperatorSet, omega, theta0, t_end: float = 100.0, dt: float = 0.01) -> SimulationResult:
    """Fixed-step RK4 integration of the Kuramoto dynamics in the rotating frame."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    omega = project_mean(check_vector(omega, ops.n, "omega"))
    theta = check_vector(theta0, ops.n, "theta0").copy()
    B, w = ops.B, ops.network.weights

    def rhs(th):
        return omega - B @ (w * np.sin(B.T @ th))

    steps = int(round(t_end / dt))
    for _ in range(steps):
        k1 = rhs(theta)
        k2 = rhs(theta + 0.5 * dt * k1)
        k3 = rhs(theta + 0.5 * dt * k2)
        k4 = rhs(theta + dt * k3)
        theta = theta + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    freq = rhs(theta)
    return SimulationResult(
        final_phases=theta - theta.mean(),
        final_frequencies=freq,
        frequency_spread=float(freq.max() - freq.min()),
        t_end=steps * dt,
        steps=steps,
    )


def q_operator_apply(ops: OperatorSet, y, x) -> np.ndarray:
    """``Q_y x = P [sinc(y)] x`` for ``x`` in the complex cutset space."""
    y = check_vector(y, ops.m, "y", dtype=complex)
    x = check_vector(x, ops.m, "x", dtype=complex)
    check_in_cutset_space(x, ops.P, name="x")
    return ops.P @ (sinc(y) * x)


def q_operator_inverse_apply(ops: OperatorSet, z, v) -> np.ndarray:
    """Inverse of ``Q_z`` on the cutset space: ``B^T (L_sinc(z))^+ B A v``."""
    z = check_vector(z, ops.m, "z", dtype=complex)
    v = check_vector(v, ops.m, "v", dtype=complex)
    if z.size and float(np.max(np.abs(z))) > math.pi / 2 + 1e-12:
        raise DomainError(f"||z||_inf = {np.max(np.abs(z)):.4f} exceeds pi/2")
    check_in_cutset_space(v, ops.P, name="v")
    L_sinc = weighted_laplacian(ops.network, sinc(z))
    rank = numerical_rank(L_sinc)
    if rank < ops.n - 1:
        raise RankDeficient(f"rank(L_sinc(z)) = {rank} < n - 1 = {ops.n - 1}")
    return ops.B.T @ (np.linalg.pinv(L_sinc, rcond=1e-12) @ (ops.B @ (ops.network.weights * v)))
