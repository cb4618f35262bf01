import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from treehardy.cli import CHECKS, dumps, main
from treehardy.scenarios import SCENARIOS


@pytest.fixture
def runner():
    return CliRunner()


def read_report(path):
    return json.loads((path / "report.json").read_text())


def test_nullcap_capacity_report(runner, tmp_path):
    res = runner.invoke(main, ["capacity", "--scenario", "nullcap", "--param", "N=10",
                               "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    cap = read_report(tmp_path)["checks"]["capacity"]["capacity_all_leaves"]
    assert abs(cap - 0.1) < 1e-11


def test_garbage_path_exits_2(runner, tmp_path):
    res = runner.invoke(main, ["report", "--tree", str(tmp_path / "missing.json")])
    assert res.exit_code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert runner.invoke(main, ["norm", "--tree", str(bad)]).exit_code == 2


def test_input_errors(runner):
    assert runner.invoke(main, ["check", "bogus", "--scenario", "random"]).exit_code == 2
    assert runner.invoke(main, ["report", "--scenario", "nope"]).exit_code == 2
    assert runner.invoke(main, ["report", "--scenario", "counterexample83",
                                "--param", "K=11"]).exit_code == 2
    assert runner.invoke(main, ["report"]).exit_code == 2


def test_counterexample_trend(runner, tmp_path):
    res = runner.invoke(main, ["check", "me_sb", "--scenario", "counterexample83",
                               "--param", "K=6", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    me = read_report(tmp_path)["checks"]["me_sb"]
    assert me["annotation"] == "divergence trend"
    ratios = [row["root_me_ratio"] for row in me["trend"]]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))


def test_generate_roundtrip(runner, tmp_path):
    gen = tmp_path / "gen"
    res = runner.invoke(main, ["generate", "bounded_boundary", "--param", "depth=4",
                               "--seed", "3", "--out", str(gen)])
    assert res.exit_code == 0, res.output
    a, b = tmp_path / "a", tmp_path / "b"
    direct = runner.invoke(main, ["check", "me_sb", "capacity", "--scenario", "bounded_boundary",
                                  "--param", "depth=4", "--seed", "3", "--out", str(a)])
    files = runner.invoke(main, ["check", "me_sb", "capacity", "--tree", str(gen / "tree.json"),
                                 "--measure", str(gen / "measure.json"),
                                 "--weights", str(gen / "weights.json"), "--out", str(b)])
    assert direct.exit_code == 0 and files.exit_code == 0, files.output
    ra, rb = read_report(a)["checks"], read_report(b)["checks"]
    assert ra["me_sb"]["me_constant"] == rb["me_sb"]["me_constant"]
    assert ra["capacity"]["capacity_all_leaves"] == rb["capacity"]["capacity_all_leaves"]


def test_build_and_default_measure(runner, tmp_path):
    assert runner.invoke(main, ["build", "--depth", "3", "--out", str(tmp_path)]).exit_code == 0
    res = runner.invoke(main, ["report", "--tree", str(tmp_path / "tree.json"), "--weights",
                               "exp:-1", "--out", str(tmp_path / "r")])
    assert res.exit_code == 0, res.output
    assert read_report(tmp_path / "r")["ok"]
    assert runner.invoke(main, ["build", "--depth", "99", "--out", str(tmp_path)]).exit_code == 2


def test_csv_table(runner, tmp_path):
    res = runner.invoke(main, ["report", "--scenario", "random", "--format", "csv",
                               "--out", str(tmp_path)])
    assert res.exit_code == 0
    header = (tmp_path / "table.csv").read_text().splitlines()[0]
    assert header.startswith("edge_id,d(alpha),tent,ratio")


@pytest.mark.parametrize("name", SCENARIOS)
def test_every_check_on_every_scenario(runner, tmp_path, name):
    res = runner.invoke(main, ["check", *CHECKS, "--scenario", name, "--depth", "2",
                               "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output


def test_determinism_subprocess(tmp_path):
    outs = []
    for run in ("one", "two"):
        d = tmp_path / run
        subprocess.run([sys.executable, "-m", "treehardy.cli", "report", "--scenario", "random",
                        "--param", "distribution=pareto", "--seed", "9", "--out", str(d)],
                       check=True, capture_output=True)
        outs.append((d / "report.json").read_bytes())
    assert outs[0] == outs[1]


def test_dumps_format():
    text = dumps({"a": 0.1, "b": [1, float("nan")]})
    assert '"a": 0.10000000000000001' in text and "[1, NaN]" in text
