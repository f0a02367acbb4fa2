import csv
import io
import json
import math
import subprocess
import sys

import pytest

from cubeharmonic.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_dictator_bundle(capsys):
    code, out, _ = run(["analyze", "--family", "dictator:i=1", "--n", "4"], capsys)
    assert code == 0
    data = json.loads(out)
    names = [r["name"] for r in data["reports"]]
    assert names == ["poincare", "talagrand1", "talagrand2", "kkl"]
    kkl = data["reports"][3]
    assert kkl["ratio"] == pytest.approx(1.0 / (0.25 * math.log(4) / 4))
    assert data["influences"]["first"] == [1.0, 0.0, 0.0, 0.0]
    assert data["alternative"]["branch"] == "single"


def test_analyze_tribes_has_pair_matrix(capsys):
    code, out, _ = run(["analyze", "--family", "tribes:k=2,m=2"], capsys)
    data = json.loads(out)
    pair = data["influences"]["pair"]
    assert len(pair) == 4 and pair[0][2] == 0.125 and pair[0][1] == 0.375


def test_analyze_csv_columns(capsys):
    code, out, _ = run(["analyze", "--family", "majority", "--n", "5", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["name", "n", "param_s0", "lhs", "rhs", "ratio"]
    assert [r[0] for r in rows[1:]] == ["poincare", "talagrand1", "talagrand2", "kkl"]


def test_analyze_table_file(tmp_path, capsys):
    p = tmp_path / "f.txt"
    p.write_text("n=2\n0001\n")
    code, out, _ = run(["analyze", "--table", str(p)], capsys)
    assert code == 0 and json.loads(out)["boolean"] is True
    p.write_text("n=1\n0.5\n-2\n")
    code, out, _ = run(["analyze", "--table", str(p)], capsys)
    data = json.loads(out)
    assert code == 0 and data["boolean"] is False and "influences" not in data


@pytest.mark.parametrize("argv,code", [
    (["analyze", "--family", "tribes:k="], 2),
    (["analyze", "--family", "dictator", "--n", "30"], 3),
    (["analyze"], 2),
    (["analyze", "--family", "dictator:i=9", "--n", "3"], 2),
    (["analyze", "--family", "dictator", "--n", "3", "--s0", "0.5"], 2),
    (["frobnicate"], 2),
    (["search", "kkl", "--n", "13"], 3),
    (["sweep", "--family", "tribes-auto", "--n-max", str(2**21)], 3),
    (["sweep", "--family", "dictator", "--metric", "influence-closed-form"], 2),
])
def test_exit_codes(argv, code, capsys):
    assert run(argv, capsys)[0] == code


def test_parse_error_reports_location(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("n=2\n01x1\n")
    code, _, err = run(["analyze", "--table", str(p)], capsys)
    assert code == 2 and "line 2, column 3" in err


def test_sweep_tribes_closed_form(capsys):
    code, out, _ = run(["sweep", "--family", "tribes-auto"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["n"]) for r in rows] == [2**e for e in range(4, 21)]
    assert list(rows[0])[:6] == ["name", "n", "param_s0", "lhs", "rhs", "ratio"]
    for r in rows:
        assert float(r["ratio"]) == pytest.approx(float(r["lhs"]) * int(r["n"]) / math.log2(int(r["n"])))


def test_sweep_majority_kkl(capsys):
    code, out, _ = run(["sweep", "--family", "majority", "--metric", "kkl", "--n-min", "3", "--n-max", "15"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["n"]) for r in rows] == list(range(3, 16, 2))
    lhs = [float(r["lhs"]) for r in rows]
    assert all(a > b for a, b in zip(lhs, lhs[1:]))


def test_sweep_json_and_file(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, _, _ = run(["sweep", "--family", "random:p=0.3", "--metric", "talagrand2", "--n-max", "5",
                      "--format", "json", "--out", str(out), "--seed", "4"], capsys)
    data = json.loads(out.read_text())
    assert code == 0 and data["family"] == "random:p=0.3,seed=4" and len(data["rows"]) == 5


def test_verify_suites_pass(capsys):
    code, out, _ = run(["verify", "identities", "--n-max", "6"], capsys)
    assert code == 0 and "kappa=0.5" in out and "kappa2=0.5" in out
    code, out, _ = run(["verify", "gaussian"], capsys)
    assert code == 0 and "PASS variance_taylor" in out


def test_verify_rejects_corrupted_table(tmp_path, capsys):
    p = tmp_path / "corrupt.txt"
    p.write_text("n=3\n0 1 0.5 3 0 1 1 0\n")
    code, out, _ = run(["verify", "inequalities", "--n-max", "5", "--table", str(p)], capsys)
    assert code == 1
    assert "FAIL supplied_table" in out
    assert f"reproduce: cubeharmonic verify inequalities --n-max 5 --seed 0 --s0 0.00390625 --table {p}" in out


def test_search_writes_witness(tmp_path, capsys):
    w = tmp_path / "best.txt"
    code, out, _ = run(["search", "talagrand1", "--n", "6", "--budget", "10000", "--seed", "42",
                        "--witness", str(w)], capsys)
    data = json.loads(out)
    assert code == 0 and data["best_ratio"] >= 0.25
    assert w.read_text() == f"n=6\n{data['best_table']}\n"


def test_search_poincare_bounded(capsys):
    code, out, _ = run(["search", "poincare", "--n", "5", "--budget", "500", "--format", "csv"], capsys)
    row = list(csv.DictReader(io.StringIO(out)))[0]
    assert float(row["best_ratio"]) <= 1.0


def test_config_file_defaults_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("# defaults\nseed = 7\nbudget=300\n")
    _, out, _ = run(["search", "poincare", "--n", "4", "--config", str(cfg)], capsys)
    assert json.loads(out)["seed"] == 7 and json.loads(out)["budget"] == 300
    _, out, _ = run(["search", "poincare", "--n", "4", "--config", str(cfg), "--seed", "2"], capsys)
    assert json.loads(out)["seed"] == 2
    cfg.write_text("nonsense=1\n")
    assert run(["search", "poincare", "--config", str(cfg)], capsys)[0] == 2
    cfg.write_text("just words\n")
    assert run(["search", "poincare", "--config", str(cfg)], capsys)[0] == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "cubeharmonic", "analyze", "--family", "parity", "--n", "2",
                          "--format", "csv"], capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[1].startswith("poincare,2,,0.25,0.5,0.5")


def test_verify_json_and_csv(capsys):
    code, out, _ = run(["verify", "gaussian", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["passed"] and len(doc["checks"]) == 10
    code, out, _ = run(["verify", "gaussian", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["name"] for r in rows] == [c["name"] for c in doc["checks"]]


def test_sweep_kkl_skips_undefined_dimensions(capsys):
    code, out, _ = run(["sweep", "--family", "majority", "--metric", "kkl", "--n-max", "7"], capsys)
    assert code == 0
    assert [int(r["n"]) for r in csv.DictReader(io.StringIO(out))] == [3, 5, 7]
