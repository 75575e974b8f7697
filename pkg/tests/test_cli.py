import csv
import io
import json
import math

import numpy as np
import pytest

from kuramoto_inverse.cases import network_to_json
from kuramoto_inverse.cli import main
from kuramoto_inverse.graph import Network
from kuramoto_inverse.sweep import CSV_COLUMNS


@pytest.fixture
def two_bus_file(tmp_path):
    path = tmp_path / "edge.json"
    path.write_text(json.dumps(network_to_json(Network(2, ((0, 1, 1.0),)), [0.5, -0.5])))
    return str(path)


@pytest.fixture
def triangle_file(tmp_path):
    path = tmp_path / "tri.json"
    net = Network(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)))
    path.write_text(json.dumps(network_to_json(net, [0.2, -0.1, -0.1])))
    return str(path)


def run_json(capsys, *argv):
    assert main([*argv, "--format", "json"]) == 0
    return json.loads(capsys.readouterr().out)


def test_analyze_tree(capsys, two_bus_file):
    out = run_json(capsys, "analyze", "--network", two_bus_file)
    assert out["norm_P_inf"] == pytest.approx(1.0)
    assert out["gamma_star"] == pytest.approx(math.pi / 2)
    assert out["g_norm_P"] == pytest.approx(1.0)
    assert out["spanning_tree_edges"] == [[0, 1]]


def test_analyze_triangle(capsys, triangle_file):
    out = run_json(capsys, "analyze", "--network", triangle_file)
    # P = I - cc^T/3 for the 3-cycle: row sums of |.| are 2/3 + 1/3 + 1/3
    assert out["norm_P_inf"] == pytest.approx(4 / 3)
    assert out["gamma_star"] == pytest.approx(math.acos((1 / 3) / (7 / 3)))


def test_analyze_case9(capsys):
    out = run_json(capsys, "analyze", "--case", "case9")
    assert out["n"] == 9 and out["m"] == 9
    assert out["norm_P_inf"] == pytest.approx(1.998824911868394, rel=1e-10)
    assert out["certificate"]["in_omega"]


def test_approx(capsys, two_bus_file):
    out = run_json(capsys, "approx", "--network", two_bus_file, "--K", "1.4", "--order", "0", "--order", "2")
    t5 = out["tests"]["2"]
    assert t5["verdict"]
    assert t5["margin"] == pytest.approx(math.pi / 4 - (0.7 + 0.7 ** 3 / 6 + 3 * 0.7 ** 5 / 40))
    S = np.array(t5["S"])
    assert S[0] - S[1] == pytest.approx(0.7 + 0.7 ** 3 / 6 + 3 * 0.7 ** 5 / 40)


def test_solve(capsys, two_bus_file):
    out = run_json(capsys, "solve", "--network", two_bus_file, "--init", "linear")
    theta = out["theta_star"]
    assert theta[0] - theta[1] == pytest.approx(math.asin(0.5), abs=1e-12)
    assert out["stable"]


def test_solve_no_convergence(capsys, two_bus_file):
    assert main(["solve", "--network", two_bus_file, "--K", "3"]) == 2


def test_input_errors(capsys, tmp_path):
    assert main(["analyze", "--case", str(tmp_path / "missing.m")]) == 1
    bad = tmp_path / "bad.m"
    bad.write_text("mpc.bus = [\n1 2 x\n];\n")
    assert main(["analyze", "--case", str(bad)]) == 1
    assert main(["analyze", "--case", "case300"]) == 1  # negative reactance without --merge-series
    assert main(["analyze", "--case", "case300", "--merge-series"]) == 0


def test_errors_csv(capsys, two_bus_file):
    assert main(["errors", "--network", two_bus_file, "--order", "4", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    errors = [float(r["error"]) for r in rows]
    assert [int(r["order"]) for r in rows] == [0, 1, 2, 3, 4]
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_sweep_csv_and_json_round_trip(capsys, tmp_path, two_bus_file):
    out_csv = tmp_path / "s.csv"
    assert main(["sweep", "--network", two_bus_file, "--K-range", "0.1", "2.4", "--steps", "12",
                 "--order", "2", "--gamma", "1.5", "--format", "csv", "--out", str(out_csv)]) == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    assert len(rows) == 12
    Ks = [float(r["K"]) for r in rows]
    assert Ks == sorted(Ks) and Ks[0] == 0.1

    report = run_json(capsys, "sweep", "--network", two_bus_file, "--K-range", "0.1", "2.4",
                      "--steps", "12", "--order", "2", "--gamma", "1.5")
    for row, rec in zip(rows, report["rows"]):
        assert float(row["K"]) == rec["K"]
        assert float(row["test_margin"]) == rec["tests"]["2"]["margin"]
        assert bool(int(row["oracle_verdict"])) == rec["oracle_verdict"]
    assert 0 <= report["summary"]["agreement"]["2"] <= 1


def test_table_output(capsys):
    assert main(["analyze", "--random", "6", "--p", "0.5", "--seed", "3"]) == 0
    assert "norm_P_inf" in capsys.readouterr().out


def test_bad_gamma():
    with pytest.raises(SystemExit):
        main(["approx", "--case", "case9", "--gamma", "2"])
