import csv
import json
import subprocess
import sys

import pytest

from stochmakespan import DiscreteDistribution
from stochmakespan.cli import TABLE_HEADER, main
from stochmakespan.instances import InstanceFile, gen_random, save_instance
from stochmakespan.setsystem import LineFamily


@pytest.fixture
def one_task(tmp_path):
    path = tmp_path / "one.json"
    save_instance(InstanceFile(LineFamily(1, [[0, 0]]), [DiscreteDistribution.bernoulli(0.3)], 1), path)
    return path


def test_solve_trivial_instance(one_task, tmp_path):
    out = tmp_path / "r.json"
    assert main(["solve", str(one_task), "-o", str(out), "--samples", "1000"]) == 0
    doc = json.loads(out.read_text())
    assert doc["chosen"] == [0]
    assert doc["format"] == "stochmakespan-result/1"
    assert doc["estimate"]["mean"] == pytest.approx(0.3)
    assert doc["metadata"]["config"]["b"] == 4.0


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "nope.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_malformed_file_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "stochmakespan-instance/1"}')
    assert main(["solve", str(bad)]) == 2


def test_resource_limit_exit_code(tmp_path, capsys):
    path = tmp_path / "big.json"
    save_instance(gen_random("line", 40, seed=0, t=20), path)
    assert main(["compare-oracle", str(path), "--samples", "100"]) == 3


def test_solve_is_byte_identical_across_runs(tmp_path):
    inst = tmp_path / "i.json"
    assert main(["generate", "tree", "-o", str(inst), "--n", "9", "--seed", "4"]) == 0
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert main(["solve", str(inst), "-o", str(out), "--seed", "3", "--samples", "2000"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_generate_gap_instances(tmp_path):
    path = tmp_path / "g.json"
    assert main(["generate", "general-gap", "--q", "2", "-o", str(path)]) == 0
    assert json.loads(path.read_text())["family"]["kind"] == "explicit"
    assert main(["generate", "line-gap", "--depth", "21", "-o", str(path)]) == 2


def _table(text):
    lines = text.strip().splitlines()
    assert tuple(lines[0].split("\t")) == TABLE_HEADER
    rows = [line.split("\t") for line in lines[1:]]
    assert all(len(r) == len(TABLE_HEADER) for r in rows)
    return rows


def test_gap_table_general(capsys):
    assert main(["gap-experiment", "general", "--values", "2", "3", "4", "--samples", "20000"]) == 0
    rows = _table(capsys.readouterr().out)
    assert [int(r[0]) for r in rows] == [2, 3, 4]
    ratios = [float(r[5]) for r in rows]
    assert ratios == sorted(ratios)
    assert [r[2] for r in rows] == ["no", "yes", "yes"]


def test_gap_table_line(tmp_path, capsys):
    out = tmp_path / "t.tsv"
    assert main(["gap-experiment", "line", "--values", "1", "2", "3", "--samples", "20000", "-o", str(out)]) == 0
    rows = _table(out.read_text())
    makespans = [float(r[3]) for r in rows]
    assert makespans == sorted(makespans)
    assert all(r[2] == "yes" for r in rows)


def test_compare_oracle_full_selection(tmp_path, capsys):
    path = tmp_path / "i.json"
    save_instance(gen_random("line", 6, seed=2, t=6), path)
    ledger = tmp_path / "ledger.csv"
    assert main(["compare-oracle", str(path), "--ledger", str(ledger), "--samples", "1000"]) == 0
    assert main(["compare-oracle", str(path), "--ledger", str(ledger), "--samples", "1000"]) == 0
    rows = list(csv.DictReader(ledger.open()))
    assert len(rows) == 2
    assert float(rows[0]["ratio"]) == 1.0


def test_module_entry_point(one_task):
    proc = subprocess.run(
        [sys.executable, "-m", "stochmakespan", "solve", str(one_task), "--samples", "500"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["chosen"] == [0]
