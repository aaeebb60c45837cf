import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from qkd3.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "qkd3", *args], capture_output=True, text=True, env=env
    )


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "12/12 checks passed" in out


def test_verify_dump(capsys):
    assert main(["verify", "--dump"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["vectors"]) == 21
    assert len(data["bases"]) == 13
    assert sum(v["multiplicity"] for v in data["vectors"]) == 39


def test_verify_bad_fixture(tmp_path, capsys):
    assert main(["verify", "--dump", "--out", str(tmp_path / "set.json")]) == 0
    data = json.loads((tmp_path / "set.json").read_text())
    victim = next(v for v in data["vectors"] if v["tag"] == "c1:green")
    victim["color"] = "red"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    assert main(["verify", "--fixture", str(bad)]) == 1
    out = capsys.readouterr().out
    assert "FAIL  coloring:orthogonal-pairs-bicolored" in out
    assert "c1:green" in out and "c1:red" in out


def test_verify_missing_fixture():
    res = run("verify", "--fixture", "/nonexistent/set.json")
    assert res.returncode == 1
    assert "cannot read fixture" in res.stderr


def test_metrics_csv_golden(capsys):
    assert main(["metrics", "--format", "csv"]) == 0
    assert capsys.readouterr().out == (GOLDEN / "metrics.csv").read_text()


def test_metrics_json(capsys):
    assert main(["metrics", "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["protocol"] for r in rows] == [
        "bb84-2basis",
        "six-state-3basis",
        "mub4-qutrit",
        "b13-v12",
        "b13-v21",
    ]
    assert set(rows[0]) == {"protocol", "unit", "i_eve", "i_bob", "e_bob", "x_breakeven"}


def test_metrics_table(capsys):
    assert main(["metrics"]) == 0
    out = capsys.readouterr().out
    assert "0.442765" in out and "0.71770" in out


def test_sweep_csv_golden(capsys):
    assert main(["sweep", "--points", "5", "--format", "csv"]) == 0
    assert capsys.readouterr().out == (GOLDEN / "sweep_5.csv").read_text()


def test_sweep_all_101(tmp_path):
    out = tmp_path / "fig2.csv"
    assert main(["sweep", "--protocol", "all", "--points", "101", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 5 * 101
    v12 = [r for r in rows if r["protocol"] == "b13-v12"]
    assert v12[0]["i_eve"] == "0.255510" and v12[0]["i_bob"] == "1.000000"


def test_sweep_unwritable():
    res = run("sweep", "--out", "/nonexistent/dir/out.csv")
    assert res.returncode == 1
    assert "cannot write" in res.stderr


def test_sweep_single_protocol_json(capsys):
    assert main(["sweep", "--protocol", "mub4", "--points", "3", "--format", "json"]) == 0
    (series,) = json.loads(capsys.readouterr().out)
    assert series["protocol"] == "mub4-qutrit"
    assert [p["x"] for p in series["points"]] == [0.0, 0.5, 1.0]


def test_simulate_deterministic_bytes():
    args = ("simulate", "--protocol", "b13-v21", "--rounds", "200000", "--seed", "42", "--format", "json")
    a, b = run(*args), run(*args)
    assert a.returncode == 0
    assert a.stdout == b.stdout


def test_simulate_threads_do_not_matter(capsys):
    base = ["simulate", "--protocol", "mub4", "--rounds", "300000", "--seed", "5", "--format", "json"]
    main(base + ["--threads", "1"])
    one = capsys.readouterr().out
    main(base + ["--threads", "7"])
    assert capsys.readouterr().out == one


def test_simulate_zero_fraction(capsys):
    assert main(["simulate", "--protocol", "mub4", "--rounds", "20000", "--intercept-fraction", "0", "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["bob_symbol_errors"] == 0
    assert rep["targets"]["error_rate"] == 0.0


def test_simulate_report_fields(capsys):
    assert main(["simulate", "--protocol", "mub4", "--rounds", "100000", "--seed", "1", "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    for key in ("error_rate", "eve_information", "sifting_rate", "targets", "z_scores", "rounds_sifted"):
        assert key in rep
    assert abs(rep["z_scores"]["error_rate"]) < 4


def test_simulate_csv(capsys):
    assert main(["simulate", "--protocol", "bb84", "--rounds", "1000", "--format", "csv"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["quantity", "empirical", "std_err", "analytic", "z"]


def test_dump_rounds(tmp_path, capsys):
    path = tmp_path / "rounds.csv"
    assert main(["simulate", "--protocol", "b13-v12", "--rounds", "500", "--dump-rounds", str(path)]) == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["round", "sifted", "alice_trit", "bob_trit", "eve_intercepted", "eve_correct"]
    assert len(rows) == 501


@pytest.mark.parametrize(
    "args",
    [
        ("simulate", "--protocol", "nope"),
        ("simulate", "--protocol", "mub4", "--intercept-fraction", "1.5"),
        ("simulate", "--protocol", "mub4", "--rounds", "0"),
        ("sweep", "--points", "1"),
        ("frobnicate",),
    ],
)
def test_usage_errors(args):
    res = run(*args)
    assert res.returncode == 2
    assert "usage" in res.stderr


def test_env_thread_hint(monkeypatch):
    env = dict(__import__("os").environ, QKD3_THREADS="3")
    args = ("simulate", "--protocol", "bb84", "--rounds", "70000", "--format", "json")
    assert run(*args, env=env).stdout == run(*args).stdout
