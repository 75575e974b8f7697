"""K-scaling sweeps comparing the approximate tests with the Newton oracle."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .certificate import certificate
from .exceptions import KuramotoError, LeftDomain, NoConvergence, OracleFailed
from .graph import OperatorSet
from .oracle import DEFAULT_GAMMA_CAP, EquilibriumResult, newton_solve
from .series import approximate_test, expand, flow_injection

INIT_CHOICES = ("zero", "linear", "s5")
CONTINUATION_STEPS = 20

CSV_COLUMNS = ("K", "flow_norm", "order", "test_verdict", "test_margin",
               "oracle_verdict", "oracle_max_angle", "error", "test_time", "oracle_time", "note")


def initial_guess(ops: OperatorSet, omega, init: str = "s5") -> np.ndarray:
    if init == "zero":
        return np.zeros(ops.n)
    eta = flow_injection(ops, omega)
    if init == "linear":
        return ops.L_pinv @ (omega - np.mean(omega))
    if init == "s5":
        return expand(ops, eta, 2, check=False).node_partial_sum()
    raise ValueError(f"init must be one of {INIT_CHOICES}, got {init!r}")


def solve_equilibrium(ops: OperatorSet, omega, init: str = "s5",
                      gamma_cap: float = DEFAULT_GAMMA_CAP) -> EquilibriumResult:
    """Newton from ``init`` with fallbacks: linear guess, then continuation in the injection scale.

    Raises OracleFailed when no equilibrium inside the cap is found.
    """
    omega = np.asarray(omega, dtype=float)
    omega = omega - omega.mean()
    tried = []
    for guess in dict.fromkeys((init, "linear", "zero")):
        try:
            return newton_solve(ops, omega, initial_guess(ops, omega, guess), gamma_cap=gamma_cap)
        except (LeftDomain, NoConvergence) as exc:
            tried.append(f"{guess}: {exc}")
    theta = np.zeros(ops.n)
    try:
        for s in np.linspace(0, 1, CONTINUATION_STEPS + 1)[1:]:
            result = newton_solve(ops, s * omega, theta, gamma_cap=gamma_cap)
            theta = result.theta_star
        return result
    except (LeftDomain, NoConvergence) as exc:
        tried.append(f"continuation: {exc}")
    raise OracleFailed("; ".join(tried))


def oracle_verdict(ops: OperatorSet, omega, gamma: float, init: str = "s5"):
    """``(exists, result)``: whether an equilibrium with all edge angles <= gamma exists."""
    try:
        result = solve_equilibrium(ops, omega, init)
    except OracleFailed:
        return False, None
    return result.in_gamma <= gamma, result


def oracle_threshold(ops: OperatorSet, omega_nom, gamma: float, rel_tol: float = 1e-6) -> float:
    """Largest scale K for which ``K * omega_nom`` has an equilibrium inside S(gamma).

    Uses warm-started continuation up to the first failure, then bisection.
    """
    omega_nom = np.asarray(omega_nom, dtype=float)
    omega_nom = omega_nom - omega_nom.mean()
    eta = flow_injection(ops, omega_nom)
    if not np.any(np.abs(eta) > 0):
        return math.inf

    def attempt(K, theta0):
        try:
            res = newton_solve(ops, K * omega_nom, theta0)
        except (LeftDomain, NoConvergence):
            return None
        return res if res.in_gamma <= gamma else None

    # first-order guess of where the largest edge flow reaches sin(gamma)
    K_hi = math.sin(gamma) / float(np.max(np.abs(eta)))
    K_lo, theta_lo = 0.0, np.zeros(ops.n)
    step = K_hi / 10
    K = step
    while True:
        res = attempt(K, theta_lo)
        if res is None:
            K_hi = K
            break
        K_lo, theta_lo = K, res.theta_star
        K += step
        if K > 1e6 * step:
            return math.inf
    while K_hi - K_lo > rel_tol * K_hi:
        mid = 0.5 * (K_lo + K_hi)
        res = attempt(mid, theta_lo)
        if res is None:
            K_hi = mid
        else:
            K_lo, theta_lo = mid, res.theta_star
    return K_lo


def test_threshold(ops: OperatorSet, omega_nom, gamma: float, order: int,
                   K_max: float, rel_tol: float = 1e-9) -> float:
    """Smallest K at which the order-``2*order+1`` test first fails, searched on ``(0, K_max]``.

    The series terms are homogeneous, so ``A_{2j+1}(K eta) = K^{2j+1} A_{2j+1}(eta)``.
    Returns ``inf`` if the test passes on a fine grid up to ``K_max``.
    """
    exp = expand(ops, flow_injection(ops, omega_nom), order, check=False)
    terms = np.asarray(exp.terms)
    powers = 2 * np.arange(order + 1) + 1

    def size(K):
        return float(np.max(np.abs((K ** powers) @ terms)))

    grid = np.linspace(0, K_max, 2001)[1:]
    prev = 0.0
    for K in grid:
        if size(K) > gamma:
            lo, hi = prev, K
            while hi - lo > rel_tol * hi:
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if size(mid) <= gamma else (lo, mid)
            return lo
        prev = K
    return math.inf


@dataclass
class SweepRow:
    K: float
    flow_norm: float
    tests: dict  # order -> (verdict, margin)
    oracle_verdict: bool
    oracle_max_angle: float | None
    errors: dict  # order -> E_{2n+1}, nan without a ground truth
    test_times: dict
    oracle_time: float
    note: str = ""


@dataclass
class SweepReport:
    gamma: float
    orders: tuple
    rows: list
    summary: dict = field(default_factory=dict)

    def agreement(self, order: int) -> float:
        if not self.rows:
            return float("nan")
        hits = sum(r.tests[order][0] == r.oracle_verdict for r in self.rows)
        return hits / len(self.rows)

    def csv_rows(self):
        for r in self.rows:
            for n in self.orders:
                verdict, margin = r.tests[n]
                yield {
                    "K": r.K,
                    "flow_norm": r.flow_norm,
                    "order": n,
                    "test_verdict": int(verdict),
                    "test_margin": margin,
                    "oracle_verdict": int(r.oracle_verdict),
                    "oracle_max_angle": "" if r.oracle_max_angle is None else r.oracle_max_angle,
                    "error": r.errors[n],
                    "test_time": r.test_times[n],
                    "oracle_time": r.oracle_time,
                    "note": r.note,
                }

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "orders": list(self.orders),
            "rows": [
                {
                    "K": r.K,
                    "flow_norm": r.flow_norm,
                    "tests": {str(n): {"verdict": v, "margin": m} for n, (v, m) in r.tests.items()},
                    "oracle_verdict": r.oracle_verdict,
                    "oracle_max_angle": r.oracle_max_angle,
                    "errors": {str(n): e for n, e in r.errors.items()},
                    "test_times": {str(n): t for n, t in r.test_times.items()},
                    "oracle_time": r.oracle_time,
                    "note": r.note,
                }
                for r in self.rows
            ],
            "summary": self.summary,
        }


def sweep_row(ops: OperatorSet, omega_nom, K: float, orders, gamma: float, init: str = "s5") -> SweepRow:
    omega = K * omega_nom
    tests, times = {}, {}
    for n in orders:
        t0 = time.perf_counter()
        tests[n] = approximate_test(ops, omega, n, gamma)
        times[n] = time.perf_counter() - t0
    t0 = time.perf_counter()
    note = ""
    try:
        result = solve_equilibrium(ops, omega, init)
    except OracleFailed as exc:
        result, note = None, str(exc)
    oracle_time = time.perf_counter() - t0
    errors = {}
    if result is not None:
        exp = expand(ops, flow_injection(ops, omega), max(orders), check=False)
        for n in orders:
            errors[n] = float(np.max(np.abs(exp.node_partial_sum(n) - result.theta_star)))
    else:
        errors = {n: float("nan") for n in orders}
    return SweepRow(
        K=float(K),
        flow_norm=float(np.max(np.abs(flow_injection(ops, omega)))) if ops.m else 0.0,
        tests=tests,
        oracle_verdict=result is not None and result.in_gamma <= gamma,
        oracle_max_angle=None if result is None else result.in_gamma,
        errors=errors,
        test_times=times,
        oracle_time=oracle_time,
        note=note,
    )


def _refine(predicate, lo, hi, rel_tol=1e-6):
    # predicate(lo) != predicate(hi); returns the boundary location
    p_lo = predicate(lo)
    while hi - lo > rel_tol * max(abs(hi), 1e-300):
        mid = 0.5 * (lo + hi)
        if predicate(mid) == p_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_sweep(ops: OperatorSet, omega_nom, Ks, orders=(2,), gamma: float = math.pi / 4,
              init: str = "s5") -> SweepReport:
    """Evaluate tests and oracle on every K; rows failing internally are recorded, not raised."""
    omega_nom = np.asarray(omega_nom, dtype=float)
    omega_nom = omega_nom - omega_nom.mean()
    orders = tuple(sorted(set(int(n) for n in orders)))
    rows = []
    for K in sorted(float(k) for k in Ks):
        try:
            rows.append(sweep_row(ops, omega_nom, K, orders, gamma, init))
        except KuramotoError as exc:
            rows.append(SweepRow(K, float("nan"), {n: (False, float("nan")) for n in orders}, False,
                                 None, {n: float("nan") for n in orders}, {n: 0.0 for n in orders},
                                 0.0, note=f"{type(exc).__name__}: {exc}"))
    report = SweepReport(gamma=gamma, orders=orders, rows=rows)
    report.summary = _summarise(ops, omega_nom, report, init)
    return report


def _first_switch(rows, verdict):
    for a, b in zip(rows, rows[1:]):
        if verdict(a) and not verdict(b):
            return a.K, b.K
    return None


def _summarise(ops, omega_nom, report: SweepReport, init: str) -> dict:
    rows, gamma = report.rows, report.gamma
    summary = {"agreement": {}, "k_test": {}, "time_ratio": {}}
    bracket = _first_switch(rows, lambda r: r.oracle_verdict)
    summary["k_oracle"] = (
        _refine(lambda K: oracle_verdict(ops, K * omega_nom, gamma, init)[0], *bracket)
        if bracket else None
    )
    for n in report.orders:
        summary["agreement"][str(n)] = report.agreement(n)
        bracket = _first_switch(rows, lambda r: r.tests[n][0])
        summary["k_test"][str(n)] = (
            _refine(lambda K: approximate_test(ops, K * omega_nom, n, gamma)[0], *bracket)
            if bracket else None
        )
        ratios = [r.test_times[n] / r.oracle_time for r in rows if r.oracle_time > 0]
        summary["time_ratio"][str(n)] = float(np.mean(ratios)) if ratios else None
    return summary


def accuracy_grid(ops: OperatorSet, omega_nom, gamma: float, n_points: int = 200) -> np.ndarray:
    """``n_points`` equally spaced K values ending at 1.2 times the oracle threshold."""
    k_hat = oracle_threshold(ops, omega_nom, gamma)
    if not math.isfinite(k_hat):
        raise OracleFailed("oracle threshold is unbounded (zero injections?)")
    return np.linspace(0, 1.2 * k_hat, n_points + 1)[1:]


def accuracy_protocol(ops: OperatorSet, omega_nom, gamma: float, orders=(2,), n_points: int = 200,
                      init: str = "s5") -> SweepReport:
    """Threshold-agreement accuracy of the approximate tests against the oracle."""
    return run_sweep(ops, omega_nom, accuracy_grid(ops, omega_nom, gamma, n_points), orders, gamma, init)


def error_table(ops: OperatorSet, omega, max_order: int, init: str = "s5") -> list[dict]:
    """``E_{2n+1} = ||S_{2n+1} - theta*||_inf`` for ``n = 0..max_order``.

    Raises OracleFailed when the oracle finds no equilibrium.
    """
    omega = np.asarray(omega, dtype=float)
    omega = omega - omega.mean()
    theta = solve_equilibrium(ops, omega, init).theta_star
    exp = expand(ops, flow_injection(ops, omega), max_order, check=False)
    cert = certificate(ops, omega)
    return [
        {
            "order": n,
            "degree": 2 * n + 1,
            "error": float(np.max(np.abs(exp.node_partial_sum(n) - theta))),
            "in_omega_s": cert.in_omega_s,
            "tree_flow_norm": cert.tree_flow_norm,
            "omega_s_bound": cert.omega_s_bound,
        }
        for n in range(max_order + 1)
    ]
