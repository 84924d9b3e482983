import json

import pytest

from conftest import DATA, load_table
from onlinefair.cli import main
from onlinefair.core import load_instance, make_instance, save_instance
from onlinefair.generators import generate_organ_stream
from onlinefair.organs import dumps_events


@pytest.fixture
def food(tmp_path):
    path = tmp_path / "food.json"
    save_instance(make_instance([[1, 1, 0], [0, 1, 1], [1, 0, 1]]), path)
    return path


@pytest.fixture
def organs(tmp_path):
    path = tmp_path / "stream.jsonl"
    path.write_text(dumps_events(generate_organ_stream(40, 20, seed=2)))
    return path


def test_simulate_foodbank(food, capsys):
    assert main(["simulate", "--model", "foodbank", "--mechanism", "balanced-like", "--seed", "3", str(food)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["tool"] == "onlinefair" and report["config"]["seed"] == 3
    assert set(report["allocation"]) == {"x0", "x1", "x2"}


def test_simulate_organs_csv(organs, capsys):
    assert main(["simulate", "--model", "organs", "--mechanism", "soft", str(organs)]) == 0
    header, columns, *rows = capsys.readouterr().out.splitlines()
    assert header.startswith("# ") and json.loads(header[2:])["config"]["mechanism"] == "soft"
    assert columns == "organ_id,patient_id,gap,exact_blood,exact_index"
    assert rows


def test_missing_file(tmp_path, capsys):
    code = main(["simulate", "--model", "foodbank", "--mechanism", "like", str(tmp_path / "nope.json")])
    assert code == 2
    assert "nope.json" in capsys.readouterr().err


def test_bad_mechanism(food, capsys):
    assert main(["simulate", "--model", "foodbank", "--mechanism", "hard", str(food)]) == 2


def test_distribution(food, tmp_path, capsys):
    figs = tmp_path / "figs"
    assert main(["distribution", "--mechanism", "like", "--figures", str(figs), str(food)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["support_size"] == 8
    assert (figs / "ante_matrix.png").stat().st_size > 0


def test_distribution_budget(tmp_path, capsys):
    path = tmp_path / "big.json"
    save_instance(make_instance([[1] * 10] * 4), path)
    assert main(["distribution", "--mechanism", "like", "--budget", "50", str(path)]) == 3


def test_audit_matching_probability(tmp_path, capsys):
    inst = tmp_path / "g.json"
    assert main(["reduce", "matching", str(DATA / "graph_example.json"), "--out", str(inst)]) == 0
    code = main(["audit", "--model", "foodbank", "--mechanism", "balanced-like", "--checks", "ante",
                 "--prob", "s:i2", str(inst)])
    assert code == 0
    captured = capsys.readouterr()
    assert "P(s <- i2) = 1/117" in captured.err
    assert json.loads(captured.out)["probabilities"] == {"s:i2": "1/117"}


def test_audit_foodbank_full(food, tmp_path, capsys):
    figs = tmp_path / "f"
    assert main(["audit", "--model", "foodbank", "--mechanism", "like", "--figures", str(figs), str(food)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["efficiency"]["ex_post_efficient"] is True
    assert report["status"] == "ok"
    assert {p.name for p in figs.iterdir()} == {"ante_matrix.png", "expected_utilities.png"}


def test_audit_foodbank_violation(tmp_path, capsys):
    path = tmp_path / "two.json"
    save_instance(make_instance([[1, 1], [1, 2]]), path)
    assert main(["audit", "--model", "foodbank", "--mechanism", "like", "--checks", "efficiency", str(path)]) == 1
    assert json.loads(capsys.readouterr().out)["efficiency"]["ex_post_efficient"] is False


def test_audit_unknown_check(food, capsys):
    assert main(["audit", "--model", "foodbank", "--mechanism", "like", "--checks", "magic", str(food)]) == 2


def test_audit_hard(organs, tmp_path, capsys):
    out = tmp_path / "hard.json"
    code = main(["audit", "--model", "organs", "--mechanism", "hard", "--checks", "envy",
                 "--out", str(out), str(organs)])
    report = json.loads(out.read_text())
    assert report["blood_type_envy_pairs"] == []
    assert code == (0 if report["index_envy"]["within_bound"] else 1)


def test_audit_soft(organs, tmp_path, capsys):
    figs = tmp_path / "figs"
    main(["audit", "--model", "organs", "--mechanism", "soft", "--figures", str(figs), str(organs)])
    report = json.loads(capsys.readouterr().out)
    assert report["index_envy"]["within_bound"] is True
    assert {p.name for p in figs.iterdir()} == {"match_gaps.png", "blood_mix.png"}
    assert set(report["competitive"]) == {"blood", "index"}


def test_reduce_sat_golden(tmp_path, capsys):
    out = tmp_path / "sat.json"
    assert main(["reduce", "sat", str(DATA / "sat_example.json"), "--out", str(out)]) == 0
    _, _, cells, marks = load_table("sat_example")
    inst = load_instance(out)
    assert [[int(u) for u in row] for row in inst.utilities] == cells
    marked = json.loads((tmp_path / "sat.marked.json").read_text())["assignment"]
    assert [[marked[x] == a for x in inst.items] for a in inst.agents] == marks


def test_reduce_matching_golden(tmp_path):
    out = tmp_path / "g.json"
    assert main(["reduce", "matching", str(DATA / "graph_example.json"), "--out", str(out)]) == 0
    _, _, cells, _ = load_table("matching_example")
    assert [[int(u) for u in row] for row in load_instance(out).utilities] == cells


def test_reduce_rejects_irregular_graph(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"u": 2, "v": 2, "edges": [[0, 0], [1, 1]]}))
    assert main(["reduce", "matching", str(path)]) == 2
    assert "3-regular" in capsys.readouterr().err


def test_gen_foodbank(capsys):
    assert main(["gen", "foodbank", "--profile", "borda", "--n", "2", "--m", "3", "--seed", "4"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert all(sorted(row) == [1, 2, 3] for row in data["utilities"])


def test_gen_organs(capsys):
    assert main(["gen", "organs", "--patients", "10", "--organs", "5", "--exact-fraction", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert sum('"ev": "organ"' in line for line in lines) == 5


def test_gen_invalid(capsys):
    assert main(["gen", "organs", "--patients", "10", "--organs", "5", "--mix", "1", "1", "0", "0"]) == 2


@pytest.mark.parametrize("argv", [
    ["audit", "--model", "organs", "--mechanism", "soft"],
    ["simulate", "--model", "foodbank", "--mechanism", "like", "--seed", "9"],
])
def test_reports_reproducible(argv, food, organs, tmp_path):
    src = organs if "organs" in argv else food
    first, second = tmp_path / "1.out", tmp_path / "2.out"
    main(argv + ["--out", str(first), str(src)])
    main(argv + ["--out", str(second), str(src)])
    assert first.read_bytes() == second.read_bytes()
