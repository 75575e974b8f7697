"""Command-line front end: ``kuramoto-inverse {analyze,approx,solve,sweep,errors}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import cases
from .certificate import certificate, cutset_norm, g_function, gamma_star
from .exceptions import (
    DomainError,
    InvalidRange,
    KuramotoError,
    LeftDomain,
    NoConvergence,
    OracleFailed,
    ParseError,
)
from .graph import build_operators
from .series import approximate_test, expand, flow_injection
from .sweep import CSV_COLUMNS, INIT_CHOICES, accuracy_grid, error_table, run_sweep, solve_equilibrium

EXIT_OK, EXIT_INPUT, EXIT_NO_CONVERGENCE, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _load(args):
    """Return (label, OperatorSet, nominal omega or None)."""
    sources = [s for s in (args.case, args.network, args.random) if s is not None]
    if len(sources) != 1:
        raise InputError("give exactly one of --case, --network or --random")
    if args.case is not None:
        data = cases.load_case(args.case)
        if args.merge_series:
            data = data.eliminate_series_buses()
        net, omega = cases.to_kuramoto(data, 1.0)
        return data.name, build_operators(net), omega
    if args.network is not None:
        with open(args.network) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        if "buses" in raw:
            data = cases.case_from_json(raw)
            net, omega = cases.to_kuramoto(data, 1.0)
            return data.name, build_operators(net), omega
        net, omega = cases.network_from_json(raw)
        return args.network, build_operators(net), omega
    n = args.random
    net = cases.random_network(n, args.p, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    omega = rng.uniform(-1, 1, n)
    return f"random(n={n}, p={args.p}, seed={args.seed})", build_operators(net), omega - omega.mean()


def _scaled_omega(args, ops, omega_nom):
    if omega_nom is None:
        raise InputError("this input has no injection profile (add \"omega\" to the network file)")
    return args.K * omega_nom


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _emit(args, payload: dict, rows: list[dict] | None = None, columns=None):
    out = io.StringIO()
    if args.format == "json":
        json.dump(payload, out, indent=2, default=_json_default)
        out.write("\n")
    elif args.format == "csv":
        table = rows if rows is not None else [{k: v for k, v in payload.items() if not isinstance(v, (dict, list))}]
        cols = list(columns or (table[0].keys() if table else []))
        writer = csv.DictWriter(out, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for r in table:
            writer.writerow({k: _csv_cell(r.get(k)) for k in cols})
    else:
        for key, value in payload.items():
            if isinstance(value, dict):
                out.write(f"{key}:\n")
                for k, v in value.items():
                    out.write(f"  {k:<22} {_fmt(v)}\n")
            elif key != "rows":
                out.write(f"{key:<24} {_fmt(value)}\n")
        if rows:
            cols = list(columns or rows[0].keys())
            out.write("  ".join(f"{c:>14}" for c in cols) + "\n")
            for r in rows:
                out.write("  ".join(f"{_fmt(r.get(c)):>14}" for c in cols) + "\n")
    text = out.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def cmd_analyze(args):
    label, ops, omega_nom = _load(args)
    norm_P = cutset_norm(ops)
    g = g_function(norm_P)
    payload = {
        "source": label,
        "n": ops.n,
        "m": ops.m,
        "norm_P_inf": norm_P,
        "gamma_star": gamma_star(norm_P),
        "g_norm_P": g,
        "norm_Bsharp_inf": ops.norm_Bsharp_inf,
        "omega_bound": g,
        "omega_s_bound": g / ops.norm_Bsharp_inf if ops.norm_Bsharp_inf else math.inf,
        "spanning_tree_edges": [list(ops.network.edges[e][:2]) for e in ops.tree_edges],
    }
    if omega_nom is not None:
        payload["certificate"] = certificate(ops, args.K * omega_nom).as_dict()
        payload["certificate"]["K"] = args.K
    _emit(args, payload)
    return EXIT_OK


def cmd_approx(args):
    label, ops, omega_nom = _load(args)
    omega = _scaled_omega(args, ops, omega_nom)
    orders = sorted(set(args.order or [2]))
    exp = expand(ops, flow_injection(ops, omega), max(orders), check=False)
    results, rows = {}, []
    for n in orders:
        verdict, margin = approximate_test(ops, omega, n, args.gamma)
        manifold = exp.node_partial_sum(n)
        results[str(n)] = {"degree": 2 * n + 1, "verdict": verdict, "margin": margin, "S": manifold.tolist()}
        rows.append({"order": n, "degree": 2 * n + 1, "verdict": verdict, "margin": margin})
    payload = {"source": label, "K": args.K, "gamma": args.gamma, "tests": results,
               "certificate": certificate(ops, omega).as_dict()}
    if args.format == "json":
        _emit(args, payload)
    else:
        _emit(args, {"source": label, "K": args.K, "gamma": args.gamma}, rows)
    return EXIT_OK


def cmd_solve(args):
    label, ops, omega_nom = _load(args)
    omega = _scaled_omega(args, ops, omega_nom)
    result = solve_equilibrium(ops, omega, args.init)
    payload = {"source": label, "K": args.K, "gamma": args.gamma, "init": args.init,
               "in_S_gamma": result.in_gamma <= args.gamma, **result.as_dict()}
    if args.format != "json":
        payload.pop("theta_star")
        rows = [{"node": k, "theta": float(t)} for k, t in enumerate(result.theta_star)]
        _emit(args, payload, rows)
    else:
        _emit(args, payload)
    return EXIT_OK


def cmd_sweep(args):
    label, ops, omega_nom = _load(args)
    if omega_nom is None:
        raise InputError("sweep needs an injection profile")
    orders = sorted(set(args.order or [2]))
    k_min, k_max = args.K_min, args.K_max
    if args.K_range:
        k_min, k_max = args.K_range
    if k_max is None:
        Ks = accuracy_grid(ops, omega_nom, args.gamma, args.steps)
    else:
        k_min = k_max / args.steps if k_min is None else k_min
        if not 0 < k_min <= k_max:
            raise InputError("K range must satisfy 0 < K-min <= K-max")
        Ks = np.linspace(k_min, k_max, args.steps)
    report = run_sweep(ops, omega_nom, Ks, orders, args.gamma, args.init)
    if args.format == "json":
        _emit(args, {"source": label, **report.as_dict()})
    elif args.format == "csv":
        _emit(args, {}, list(report.csv_rows()), CSV_COLUMNS)
    else:
        _emit(args, {"source": label, "gamma": args.gamma, "summary": _flat_summary(report.summary)},
              list(report.csv_rows()), CSV_COLUMNS[:7])
    return EXIT_OK


def _flat_summary(summary):
    flat = {"k_oracle": summary.get("k_oracle")}
    for key in ("agreement", "k_test", "time_ratio"):
        for n, v in summary.get(key, {}).items():
            flat[f"{key}[T{2 * int(n) + 1}]"] = v
    return flat


def cmd_errors(args):
    label, ops, omega_nom = _load(args)
    omega = _scaled_omega(args, ops, omega_nom)
    max_order = max(args.order) if args.order else 4
    rows = error_table(ops, omega, max_order, args.init)
    payload = {"source": label, "K": args.K, "rows": rows}
    if args.format == "json":
        _emit(args, payload)
    else:
        _emit(args, {"source": label, "K": args.K}, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kuramoto-inverse",
        description="Taylor-series synchronization tests for Kuramoto oscillator networks.",
    )
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("input")
    src.add_argument("--case", help="MATPOWER .m file, case JSON, or bundled name (case9, case14, ...)")
    src.add_argument("--network", help="native network JSON {n, edges: [[i, j, w], ...], omega: [...]}")
    src.add_argument("--random", type=int, metavar="N", help="random connected network on N nodes")
    src.add_argument("--p", type=float, default=0.3, help="edge probability for --random (default 0.3)")
    src.add_argument("--seed", type=int, default=0)
    src.add_argument("--merge-series", action="store_true",
                     help="fold series-compensation buses with negative reactance (needed for case300)")
    common.add_argument("--K", type=float, default=1.0, help="injection scale factor (default 1)")
    common.add_argument("--gamma", type=float, default=math.pi / 4, help="cohesion angle in radians")
    common.add_argument("--order", type=int, action="append", help="series order n (repeatable)")
    common.add_argument("--init", choices=INIT_CHOICES, default="s5", help="oracle initial guess")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--out", help="write output to this file instead of stdout")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="graph operators and certificate bounds").set_defaults(func=cmd_analyze)
    sub.add_parser("approx", parents=[common], help="approximate tests and manifolds").set_defaults(func=cmd_approx)
    sub.add_parser("solve", parents=[common], help="Newton oracle equilibrium").set_defaults(func=cmd_solve)
    sw = sub.add_parser("sweep", parents=[common], help="K sweep of tests versus oracle")
    sw.add_argument("--K-min", dest="K_min", type=float)
    sw.add_argument("--K-max", dest="K_max", type=float)
    sw.add_argument("--K-range", dest="K_range", type=float, nargs=2, metavar=("MIN", "MAX"))
    sw.add_argument("--steps", type=int, default=200)
    sw.set_defaults(func=cmd_sweep)
    sub.add_parser("errors", parents=[common], help="manifold errors E_{2n+1} against the oracle").set_defaults(func=cmd_errors)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.K > 0:
        parser.error("--K must be positive")
    if not 0 <= args.gamma < math.pi / 2:
        parser.error("--gamma must lie in [0, pi/2)")
    try:
        return args.func(args)
    except (InputError, ParseError, InvalidRange, DomainError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OracleFailed, NoConvergence, LeftDomain) as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except KuramotoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AssertionError, FloatingPointError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
