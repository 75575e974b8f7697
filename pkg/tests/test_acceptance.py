"""Exit criteria. Each test prints one PASS/FAIL line with its runtime."""
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from kuramoto_inverse.cases import load_case, random_network, to_kuramoto
from kuramoto_inverse.certificate import certificate, g_function, gamma_star, in_cohesive_set
from kuramoto_inverse.graph import Network, build_operators, numerical_rank, weighted_laplacian
from kuramoto_inverse.oracle import (
    is_stable,
    newton_solve,
    nodal_residual,
    q_operator_apply,
    q_operator_inverse_apply,
    sinc,
)
from kuramoto_inverse.series import approximate_manifold, expand, flow_injection
from kuramoto_inverse.sweep import accuracy_protocol, error_table

from conftest import arcsin_poly, random_cut_vector, random_instances, remark_terms


@contextmanager
def criterion(capsys, name, budget):
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield
        elapsed = time.perf_counter() - start
        if elapsed >= budget:
            raise AssertionError(f"{name}: runtime {elapsed:.2f}s exceeds {budget}s")
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        with capsys.disabled():
            print(f"\n[{status}] {name} ({elapsed:.2f}s / {budget}s)")


def test_arcsin_equivalence(capsys):
    rng = np.random.default_rng(2024)
    with criterion(capsys, "arcsin equivalence, N<=6, 1000 inputs, 1e-12", 1.0):
        worst = 0.0
        a = 2.5
        ops = build_operators(Network(2, ((0, 1, a),)))
        for t in rng.uniform(-0.9, 0.9, 1000):
            # omega = (w, -w) gives an edge flow w / a
            exp = expand(ops, flow_injection(ops, [a * t, -a * t]), 6, check=False)
            assert exp.eta[0] == pytest.approx(t, rel=1e-14)
            sums = exp.partial_sums()[:, 0]
            for N in range(7):
                worst = max(worst, abs(sums[N] - arcsin_poly(exp.eta[0], N)))
        assert worst <= 1e-12, worst


def test_remark_closed_forms(capsys):
    rng = np.random.default_rng(7)
    instances = random_instances(100, seed=70, n_range=(2, 10))
    with criterion(capsys, "closed-form A3/A5/A7 agreement on 100 instances, 1e-12", 5.0):
        for ops in instances:
            eta = random_cut_vector(ops, rng, rng.uniform(0.1, 1.0))
            exp = expand(ops, eta, 3)
            for got, want in zip(exp.terms, remark_terms(ops.P, eta)):
                assert np.max(np.abs(got - want)) <= 1e-12


def test_inverse_map_residual_order(capsys):
    rng = np.random.default_rng(11)
    instances = random_instances(10, seed=110, n_range=(3, 10))
    scales = np.logspace(np.log10(0.03), np.log10(0.3), 8)
    with criterion(capsys, "residual slope within 0.5 of 2N+3 for N in {0,1,2}", 10.0):
        for ops in instances:
            direction = random_cut_vector(ops, rng, 1.0)
            for N in (0, 1, 2):
                res = []
                for s in scales:
                    eta = s * direction
                    partial = expand(ops, eta, N).partial_sum()
                    res.append(np.max(np.abs(ops.P @ np.sin(partial) - eta)))
                slope = np.polyfit(np.log(scales), np.log(res), 1)[0]
                assert abs(slope - (2 * N + 3)) <= 0.5, (N, slope)


def test_projection_algebra(capsys):
    rng = np.random.default_rng(5)
    with criterion(capsys, "projection algebra on 100 random graphs, 1e-10", 5.0):
        for k in range(100):
            n = int(rng.integers(2, 13))
            ops = build_operators(random_network(n, float(rng.uniform(0.15, 0.9)), (0.1, 10.0), seed=500 + k))
            centering = np.eye(n) - np.ones((n, n)) / n
            assert np.max(np.abs(ops.P @ ops.P - ops.P)) <= 1e-10
            assert np.max(np.abs(ops.P @ ops.B.T - ops.B.T)) <= 1e-10
            assert np.max(np.abs(ops.B_sharp @ ops.B_s.T - ops.B.T)) <= 1e-10
            assert np.max(np.abs(ops.L @ ops.L_pinv - centering)) <= 1e-10


def test_g_function(capsys):
    with criterion(capsys, "g(1)=1, strictly decreasing on [1,100], g(1e6)<1e-2", 1.0):
        assert abs(g_function(1.0) - 1.0) <= 1e-14
        values = np.array([g_function(x) for x in np.linspace(1, 100, 1000)])
        assert np.all(np.diff(values) < 0)
        assert g_function(1e6) < 1e-2


def test_q_operator_identity(capsys):
    rng = np.random.default_rng(13)
    instances = random_instances(100, seed=130, n_range=(2, 8))
    with criterion(capsys, "Q_z(Q_z^-1 v) = v on 100 real/complex z, 1e-9; rank n-1", 5.0):
        for k, ops in enumerate(instances):
            z = rng.normal(size=ops.m)
            if k % 2:
                z = z + 1j * rng.normal(size=ops.m)
            z *= rng.uniform(0.05, 1.0) * (math.pi / 2) / np.max(np.abs(z))
            v = ops.B.T @ (rng.normal(size=ops.n) + 1j * rng.normal(size=ops.n))
            assert numerical_rank(weighted_laplacian(ops.network, sinc(z))) == ops.n - 1
            back = q_operator_apply(ops, z, q_operator_inverse_apply(ops, z, v))
            assert np.max(np.abs(back - v)) <= 1e-9


def _tail_start(norms):
    """Smallest j0 with the term norms strictly decreasing from j0 on."""
    j0 = len(norms) - 1
    while j0 > 0 and norms[j0] < norms[j0 - 1]:
        j0 -= 1
    return j0


def test_convergence_certificate(capsys):
    rng = np.random.default_rng(17)
    instances = random_instances(50, seed=170, n_range=(3, 10))
    with criterion(capsys, "series converges inside Omega^s; Newton from S5 in <=10 iterations", 30.0):
        for ops in instances:
            omega = rng.normal(size=ops.n)
            omega -= omega.mean()
            cert = certificate(ops, omega)
            # strictly inside: deep enough that 25 terms resolve the limit to 1e-8
            omega *= rng.uniform(0.3, 0.7) * cert.omega_s_bound / cert.tree_flow_norm
            cert = certificate(ops, omega)
            assert cert.in_omega_s and cert.in_omega
            exp = expand(ops, flow_injection(ops, omega), 25, check=False)
            norms = exp.term_norms()
            nonzero = norms[norms > 1e-300]
            assert _tail_start(nonzero) <= 5
            x_star = exp.node_partial_sum()
            assert np.max(np.abs(nodal_residual(ops, omega, x_star))) <= 1e-8
            assert in_cohesive_set(ops, x_star - x_star.mean(), cert.gamma_star)
            res = newton_solve(ops, omega, approximate_manifold(ops, omega, 2))
            assert res.iterations <= 10


def test_uniqueness_and_stability(capsys):
    rng = np.random.default_rng(19)
    instances = random_instances(20, seed=190, n_range=(3, 10))
    with criterion(capsys, "multi-start Newton agreement 1e-8, single-zero PSD Jacobian", 30.0):
        for ops in instances:
            omega = rng.normal(size=ops.n)
            omega -= omega.mean()
            omega *= rng.uniform(0.2, 0.6) / np.max(np.abs(ops.BT_Lpinv @ omega))
            ref = newton_solve(ops, omega)
            gamma = min(max(ref.in_gamma + 0.3, 0.5), 1.4)
            assert ref.stable and ref.in_gamma <= gamma
            lam = np.linalg.eigvalsh(weighted_laplacian(ops.network, np.cos(ops.B.T @ ref.theta_star)).real)
            assert lam.min() >= -1e-10
            assert np.count_nonzero(lam < 1e-8 * lam.max()) == 1
            converged = 0
            for _ in range(20):
                x0 = rng.normal(size=ops.n)
                x0 -= x0.mean()
                x0 *= rng.uniform(0, gamma) / np.max(np.abs(ops.B.T @ x0))
                try:
                    res = newton_solve(ops, omega, x0)
                except Exception:
                    continue
                converged += 1
                assert np.max(np.abs(res.theta_star - ref.theta_star)) <= 1e-8
                assert is_stable(ops, res.theta_star)
            assert converged > 0


def test_table_one_desk_scale(capsys):
    with criterion(capsys, "T5 agreement >= 95% at pi/4 and lower at pi/2-0.01 (case9, case14)", 60.0):
        lines = []
        for name in ("case9", "case14"):
            net, omega = to_kuramoto(load_case(name), 1.0)
            ops = build_operators(net)
            quarter = accuracy_protocol(ops, omega, math.pi / 4, orders=(2,)).agreement(2)
            near_half = accuracy_protocol(ops, omega, math.pi / 2 - 0.01, orders=(2,)).agreement(2)
            lines.append(f"    {name}: T5 agreement {quarter:.2%} (pi/4), {near_half:.2%} (pi/2-0.01)")
            assert quarter >= 0.95
            assert near_half < quarter
        with capsys.disabled():
            print("\n" + "\n".join(lines))


def test_error_decay(capsys):
    rng = np.random.default_rng(23)
    net9, omega9 = to_kuramoto(load_case("case9"), 1.0)
    cases = [(build_operators(net9), omega9)]
    for ops in random_instances(10, seed=230, n_range=(4, 10)):
        omega = rng.normal(size=ops.n)
        cases.append((ops, omega - omega.mean()))
    with criterion(capsys, "E_{2n+1} strictly decreasing for n<=4 inside Omega^s", 30.0):
        for ops, omega in cases:
            cert = certificate(ops, omega)
            omega = omega * 0.95 * cert.omega_s_bound / cert.tree_flow_norm
            assert certificate(ops, omega).in_omega_s
            errors = [r["error"] for r in error_table(ops, omega, 4)]
            assert all(b < a for a, b in zip(errors, errors[1:])), errors
