"""Power-grid case ingestion (MATPOWER M-files, native JSON) and random test networks."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .exceptions import DisconnectedCase, InvalidRange, NonPositiveReactance, ParseError
from .graph import Network, _bfs_tree

BUNDLED_CASES = ("case9", "case14", "case30", "case57", "case118", "case300")

# MATPOWER column indices (0-based)
BUS_I, BUS_TYPE, PD, VM = 0, 1, 2, 7
GEN_BUS, PG, VG, GEN_STATUS = 0, 1, 5, 7
F_BUS, T_BUS, BR_X, BR_STATUS = 0, 1, 3, 10
ISOLATED = 4


@dataclass(frozen=True)
class Bus:
    id: int
    type: str  # "load" or "generator"
    vm: float
    p_nom: float  # per-unit net injection (generation minus demand)


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    x: float


@dataclass(frozen=True)
class CaseData:
    name: str
    base_mva: float
    buses: tuple
    branches: tuple

    def __post_init__(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ParseError(f"case {self.name!r} has duplicate bus ids")
        known = set(ids)
        for br in self.branches:
            if br.from_bus not in known or br.to_bus not in known:
                raise ParseError(f"branch {br.from_bus}-{br.to_bus} references an unknown bus")
        index = {b: k for k, b in enumerate(ids)}
        edges = [(index[br.from_bus], index[br.to_bus], 1.0) for br in self.branches]
        if len(ids) > 1 and _bfs_tree(len(ids), edges) is None:
            raise DisconnectedCase(f"case {self.name!r} is not connected")

    @property
    def n(self) -> int:
        return len(self.buses)

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def nominal_injections(self) -> np.ndarray:
        return np.array([b.p_nom for b in self.buses])

    def eliminate_series_buses(self) -> "CaseData":
        """Fold zero-injection degree-2 buses that touch a non-positive reactance.

        The two incident branches are replaced by one branch whose reactance
        is their sum (series compensation capacitors in larger cases).
        """
        buses = {b.id: b for b in self.buses}
        branches = list(self.branches)
        changed = True
        while changed:
            changed = False
            for br in branches:
                if br.x > 0:
                    continue
                for mid in (br.from_bus, br.to_bus):
                    incident = [b for b in branches if mid in (b.from_bus, b.to_bus)]
                    if len(incident) != 2 or buses[mid].p_nom != 0:
                        continue
                    ends = [b.to_bus if b.from_bus == mid else b.from_bus for b in incident]
                    if ends[0] == ends[1]:
                        continue
                    merged = Branch(ends[0], ends[1], incident[0].x + incident[1].x)
                    branches = [b for b in branches if b not in incident]
                    branches = _merge_parallel(branches + [merged])
                    del buses[mid]
                    changed = True
                    break
                if changed:
                    break
        return replace(self, buses=tuple(b for b in self.buses if b.id in buses),
                       branches=tuple(branches))


def _merge_parallel(branches):
    """Combine parallel branches through their summed susceptance 1/x."""
    order, susceptance = [], {}
    for br in branches:
        key = (br.from_bus, br.to_bus) if br.from_bus <= br.to_bus else (br.to_bus, br.from_bus)
        if key not in susceptance:
            order.append((key, br))
            susceptance[key] = 0.0
        susceptance[key] += 1.0 / br.x
    out = []
    for key, first in order:
        out.append(Branch(first.from_bus, first.to_bus, 1.0 / susceptance[key]))
    return out


_ASSIGN = re.compile(r"^\s*mpc\.(\w+)\s*=\s*(.*)$")
_FUNC = re.compile(r"^\s*function\s+(?:\w+\s*=\s*)?(\w+)")


def _strip_comment(line):
    pos = line.find("%")
    return line if pos < 0 else line[:pos]


def _parse_tables(text):
    """Return ({name: (rows, first_line)}, {name: scalar}, function name)."""
    tables, scalars, fname = {}, {}, None
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        raw = lines[i]
        lineno = i + 1
        m = _FUNC.match(raw)
        if m and fname is None:
            fname = m.group(1)
        line = _strip_comment(raw)
        m = _ASSIGN.match(line)
        i += 1
        if not m:
            continue
        key, rhs = m.group(1), m.group(2).strip()
        if not rhs.startswith("["):
            rhs = rhs.rstrip(";").strip()
            try:
                scalars[key] = float(rhs)
            except ValueError:
                scalars[key] = rhs.strip("'\"")
            continue
        body = [(rhs[1:], lineno)]
        while "]" not in body[-1][0]:
            if i >= len(lines):
                raise ParseError(f"unterminated matrix mpc.{key}", lineno)
            body.append((_strip_comment(lines[i]), i + 1))
            i += 1
        last, ln = body[-1]
        body[-1] = (last[: last.index("]")], ln)
        rows = []
        for chunk, ln in body:
            for piece in chunk.split(";"):
                tokens = piece.replace(",", " ").split()
                if not tokens:
                    continue
                try:
                    rows.append(([float(t) for t in tokens], ln))
                except ValueError:
                    raise ParseError(f"non-numeric entry in mpc.{key}: {piece.strip()!r}", ln) from None
        tables[key] = (rows, lineno)
    return tables, scalars, fname


def _require(tables, key, min_cols):
    if key not in tables:
        raise ParseError(f"missing mpc.{key} table")
    rows, _ = tables[key]
    for values, ln in rows:
        if len(values) < min_cols:
            raise ParseError(f"mpc.{key} row has {len(values)} columns, need at least {min_cols}", ln)
    return rows


def parse_matpower(text: str, name: str | None = None) -> CaseData:
    """Parse a MATPOWER case file.

    Generator buses take their voltage magnitude from the in-service
    generator setpoint ``Vg``; all other buses use ``Vm`` from the bus
    table.  Out-of-service branches are dropped and parallel branches are
    merged.  Isolated buses (type 4) are discarded.
    """
    tables, scalars, fname = _parse_tables(text)
    base = float(scalars.get("baseMVA", 100.0))
    bus_rows = _require(tables, "bus", VM + 1)
    gen_rows = _require(tables, "gen", GEN_STATUS + 1) if "gen" in tables else []
    br_rows = _require(tables, "branch", BR_STATUS + 1)

    gen_p, gen_v = {}, {}
    for values, _ in gen_rows:
        if values[GEN_STATUS] <= 0:
            continue
        bus = int(values[GEN_BUS])
        gen_p[bus] = gen_p.get(bus, 0.0) + values[PG]
        gen_v.setdefault(bus, values[VG])

    buses, isolated = [], set()
    for values, ln in bus_rows:
        bid = int(values[BUS_I])
        if int(values[BUS_TYPE]) == ISOLATED:
            isolated.add(bid)
            continue
        is_gen = bid in gen_p
        vm = gen_v[bid] if is_gen else values[VM]
        if not vm > 0:
            raise ParseError(f"bus {bid} has non-positive voltage magnitude {vm}", ln)
        buses.append(Bus(bid, "generator" if is_gen else "load", float(vm),
                         (gen_p.get(bid, 0.0) - values[PD]) / base))

    known = {b.id for b in buses} | isolated
    branches = []
    for values, ln in br_rows:
        f, t = int(values[F_BUS]), int(values[T_BUS])
        if f not in known or t not in known:
            raise ParseError(f"branch {f}-{t} references an unknown bus", ln)
        if values[BR_STATUS] <= 0 or f in isolated or t in isolated:
            continue
        if values[BR_X] == 0:
            raise ParseError(f"branch {f}-{t} has zero reactance", ln)
        branches.append(Branch(f, t, float(values[BR_X])))
    return CaseData(
        name=name or fname or "case",
        base_mva=base,
        buses=tuple(buses),
        branches=tuple(_merge_parallel(branches)),
    )


def to_kuramoto(case: CaseData, K: float = 1.0) -> tuple[Network, np.ndarray]:
    """Lossless reduction to a Kuramoto network with injections scaled by ``K``.

    Edge weights are ``|V_j| |V_l| / x_jl``; the returned injection vector is
    ``K * p_nom`` projected onto the zero-sum subspace.
    """
    if not K > 0:
        raise InvalidRange(f"K must be positive, got {K}")
    index = {b.id: k for k, b in enumerate(case.buses)}
    vm = np.array([b.vm for b in case.buses])
    edges = []
    for br in case.branches:
        if not br.x > 0:
            raise NonPositiveReactance(
                f"branch {br.from_bus}-{br.to_bus} has reactance {br.x}; "
                "try CaseData.eliminate_series_buses() for series compensation"
            )
        i, j = index[br.from_bus], index[br.to_bus]
        edges.append((i, j, vm[i] * vm[j] / br.x))
    omega = K * case.nominal_injections()
    return Network(case.n, tuple(edges)), omega - omega.mean()


def case_to_json(case: CaseData) -> dict:
    return {
        "name": case.name,
        "base_mva": case.base_mva,
        "buses": [{"id": b.id, "type": b.type, "vm": b.vm, "p_nom": b.p_nom} for b in case.buses],
        "branches": [{"from": br.from_bus, "to": br.to_bus, "x": br.x} for br in case.branches],
    }


def case_from_json(data: dict) -> CaseData:
    try:
        buses = tuple(
            Bus(int(b["id"]), b.get("type", "load"), float(b["vm"]), float(b["p_nom"]))
            for b in data["buses"]
        )
        branches = tuple(Branch(int(br["from"]), int(br["to"]), float(br["x"])) for br in data["branches"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed case JSON: {exc}") from None
    return CaseData(str(data.get("name", "case")), float(data.get("base_mva", 100.0)), buses, branches)


def bundled_case_text(name: str) -> str:
    if name not in BUNDLED_CASES:
        raise KeyError(f"unknown bundled case {name!r}; choose from {', '.join(BUNDLED_CASES)}")
    return resources.files("kuramoto_inverse.data").joinpath(f"{name}.m").read_text()


def load_case(source) -> CaseData:
    """Load a bundled case by name (``"case9"``) or a ``.m`` / ``.json`` file."""
    if isinstance(source, str) and source in BUNDLED_CASES:
        return parse_matpower(bundled_case_text(source), name=source)
    path = Path(source)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            return case_from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return parse_matpower(text, name=path.stem)


def network_to_json(net: Network, omega=None) -> dict:
    data = {"n": net.n, "edges": [[i, j, w] for i, j, w in net.edges]}
    if omega is not None:
        data["omega"] = [float(v) for v in omega]
    return data


def network_from_json(data: dict) -> tuple[Network, np.ndarray | None]:
    """Native network file: ``{"n": int, "edges": [[i, j, w], ...], "omega": [...]}``."""
    try:
        net = Network(int(data["n"]), tuple(tuple(e) for e in data["edges"]))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed network JSON: {exc}") from None
    omega = data.get("omega")
    return net, None if omega is None else np.asarray(omega, dtype=float)


def random_network(n: int, p: float, weight_range=(0.1, 10.0), seed=None) -> Network:
    """Erdos-Renyi graph conditioned on connectivity, deterministic per ``seed``.

    After 1000 disconnected draws a random spanning tree is added to the last one.
    """
    if n < 2 or not 0 < p <= 1:
        raise InvalidRange(f"need n >= 2 and 0 < p <= 1, got n={n}, p={p}")
    rng = np.random.default_rng(seed)
    lo, hi = weight_range
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for _ in range(1000):
        mask = rng.random(len(pairs)) < p
        chosen = [pr for pr, keep in zip(pairs, mask) if keep]
        if _bfs_tree(n, [(i, j, 1.0) for i, j in chosen]) is not None:
            break
    else:
        perm = rng.permutation(n)
        present = set(chosen)
        for k in range(1, n):
            a, b = int(perm[k]), int(perm[rng.integers(k)])
            present.add((min(a, b), max(a, b)))
        chosen = sorted(present)
    weights = rng.uniform(lo, hi, size=len(chosen))
    return Network(n, tuple((i, j, float(w)) for (i, j), w in zip(chosen, weights)))
