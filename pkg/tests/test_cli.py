import csv
import json

import pytest

from d2dcache import cli
from d2dcache.cost import expected_cost
from d2dcache.experiments import CSV_HEADER
from d2dcache.model import load_instance, load_placement


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "inst.json"
    assert cli.main(["gen", "--U", "3", "--F", "6", "--C", "2", "--seed", "4",
                     "--out", str(path)]) == 0
    return path


def test_gen_flags_and_reproducibility(small, tmp_path):
    inst = load_instance(small)
    assert (inst.U, inst.F) == (3, 6) and inst.C.tolist() == [2, 2, 2]
    again = tmp_path / "again.json"
    cli.main(["gen", "--U", "3", "--F", "6", "--C", "2", "--seed", "4", "--out", str(again)])
    assert small.read_text() == again.read_text()


def test_gen_preset_value(tmp_path, capsys):
    assert cli.main(["gen", "--preset", "beta", "--value", "2", "--U", "4", "--F", "5"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["U"] == 4 and d["F"] == 5 and d["C"] == [5] * 4


def test_config_then_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"U": 5, "F": 7, "C": 3}))
    out = tmp_path / "i.json"
    cli.main(["gen", "--config", str(cfg), "--F", "4", "--out", str(out)])
    inst = load_instance(out)
    assert (inst.U, inst.F, int(inst.C[0])) == (5, 4, 3)


@pytest.mark.parametrize("method", ["acocp", "mauu", "popular", "random", "brute"])
def test_solve_then_eval(small, tmp_path, capsys, method):
    if method == "brute":
        tiny = tmp_path / "tiny.json"
        cli.main(["gen", "--U", "2", "--F", "2", "--C", "1", "--out", str(tiny)])
        small = tiny
    out = tmp_path / "x.json"
    assert cli.main(["solve", str(small), "--method", method, "--out", str(out)]) == 0
    x = load_placement(out)
    capsys.readouterr()
    assert cli.main(["eval", str(small), str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    cost = float(lines[0].split()[1])
    assert cost == pytest.approx(expected_cost(load_instance(small), x).total, rel=1e-15)
    assert sum(l.startswith("user ") for l in lines) == load_instance(small).U


def test_solve_reports_certificate(small, capsys):
    cli.main(["solve", str(small), "--method", "acocp"])
    out = capsys.readouterr().out
    assert "status optimal" in out and "gap" in out


def test_simulate(small, tmp_path, capsys):
    x = tmp_path / "x.json"
    cli.main(["solve", str(small), "--out", str(x)])
    capsys.readouterr()
    assert cli.main(["simulate", str(small), str(x), "--reps", "20000", "--seed", "1"]) == 0
    z = float(capsys.readouterr().out.split()[-1])
    assert abs(z) < 5


def test_sweep_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "C", "--values", "2", "3", "--seeds", "2", "--U", "3", "--F", "6",
                     "--methods", "mauu,popular", "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 1 + 2 * 2 * 2
    assert {r[3] for r in rows[1:]} == {"mauu", "popular"}


def test_sweep_config_section(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"U": 3, "F": 5, "sweep": {"figure": "beta", "values": [1, 2],
                                                         "seeds": 1, "methods": ["popular"]}}))
    assert cli.main(["sweep", "--config", str(cfg)]) == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert rows[0] == ",".join(CSV_HEADER)
    assert [r.split(",")[:2] for r in rows[1:]] == [["beta", "1"], ["beta", "2"]]


def test_unknown_preset():
    with pytest.raises(SystemExit):
        cli.main(["sweep", "nope"])


def test_export_lp(small, tmp_path):
    out = tmp_path / "m.lp"
    assert cli.main(["export-lp", str(small), "--out", str(out)]) == 0
    text = out.read_text()
    for head in ("Minimize", "Subject To", "Bounds", "Binary", "End"):
        assert head in text


def test_reduce(tmp_path, capsys):
    cnf = tmp_path / "f.cnf"
    cnf.write_text("p cnf 3 2\n1 2 3 0\n-1 -2 -3 0\n")
    out = tmp_path / "r.json"
    assert cli.main(["reduce", str(cnf), "--decide", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "users 8" in text and "satisfiable True" in text and "recovered True" in text
    assert load_instance(out).U == 8


def test_errors_exit_nonzero(tmp_path):
    assert cli.main(["eval", str(tmp_path / "missing.json"), str(tmp_path / "x.json")]) == 1
    bad = tmp_path / "bad.cnf"
    bad.write_text("1 2 3 0\n")
    assert cli.main(["reduce", str(bad)]) == 1
