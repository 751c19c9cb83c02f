import csv
import io
import json

import numpy as np
import pytest

from atbat_mdp.cli import main
from atbat_mdp.mdp import Policy, value_iteration
from atbat_mdp.model import TransitionModel
from atbat_mdp.seeding import SEED_ENV_VAR
from atbat_mdp.synthgen import gapped_spec, generate_season, random_spec

from conftest import close_templates, exploit_scenario, write_season


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# ") and lines[0].endswith(" v1")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    return exploit_scenario(tmp_path_factory.mktemp("scenario"))


def test_ingest_summary(tmp_path, capsys):
    season = write_season(tmp_path / "s.jsonl", generate_season(random_spec("P", 1), 30, 0.5, seed=1))
    assert main(["ingest", str(season)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# ingest_summary v1\n")
    row = list(csv.DictReader(io.StringIO(out.split("\n", 1)[1])))[0]
    assert row["at_bats"] == "30" and row["rejects"] == "0"


def test_ingest_malformed_line(tmp_path, capsys):
    path = write_season(tmp_path / "s.jsonl", generate_season(random_spec("P", 1), 3, 0.5, seed=1))
    path.write_text(path.read_text() + "{not json\n")
    assert main(["ingest", str(path), "--out", str(tmp_path / "out")]) == 1
    err = capsys.readouterr().err
    assert "[ingest]" in err and "line 4" in err
    assert not (tmp_path / "out").exists()


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["pipeline", "a", "b", "--model", "bogus"])
    assert exc.value.code == 2


def test_seed_required(tmp_path, capsys, monkeypatch):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(random_spec("P", 1).to_dict()))
    assert main(["synth", str(spec), "--atbats", "5"]) == 1
    assert SEED_ENV_VAR in capsys.readouterr().err
    monkeypatch.setenv(SEED_ENV_VAR, "3")
    assert main(["synth", str(spec), "--atbats", "5", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "season_2009.jsonl").read_text().splitlines()) == 5


def test_synth_estimate_solve_evaluate(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"pitchers": [gapped_spec("A", 1).to_dict(), gapped_spec("B", 2).to_dict()]}))
    out = tmp_path / "out"
    assert main(["synth", str(spec), "--atbats", "200", "--seed", "5", "--batters", "X,Y",
                 "--no-trajectories", "--out", str(out)]) == 0
    season = out / "season_2009.jsonl"
    lines = season.read_text().splitlines()
    assert len(lines) == 400
    assert {json.loads(x)["batter_id"] for x in lines} == {"X", "Y"}

    assert main(["estimate", str(season), "--model", "crlib", "--out", str(out)]) == 0
    model = TransitionModel.load(out / "models" / "A.json")
    assert model.model_kind.value == "crlib"
    assert (out / "models" / "B.csv").read_text().startswith("# transition_model v1\n")

    assert main(["solve", str(out / "models" / "A.json"), str(out / "models" / "B.json"), "--out", str(out)]) == 0
    policy = Policy.from_dict(json.loads((out / "policies" / "A.json").read_text()))
    expected, values = value_iteration(model)
    np.testing.assert_array_equal(policy.actions, expected.actions)
    root = json.loads((out / "values" / "A.json").read_text())["root_value"]

    assert main(["evaluate", str(out / "policies" / "A.json"), str(out / "models" / "A.json"),
                 "--model", "crlib", "--out", str(out)]) == 0
    (row,) = read_csv(out / "evaluation.csv")
    assert float(row["root_value"]) == pytest.approx(root, abs=1e-12)


def test_pipeline_exploitation(tmp_path, scenario):
    train, test = scenario
    out = tmp_path / "out"
    assert main(["pipeline", str(train), str(test), "--seed", "7", "--pools", "10", "--out", str(out)]) == 0
    rows = {r["pitcher_id"]: r for r in read_csv(out / "exploit.csv")}
    assert rows["A"]["exploited_strict"] == "1"
    assert float(rows["A"]["j_specific"]) > float(rows["A"]["j_general"])
    assert len(list((out / "policies").glob("general_*.json"))) == 10
    report = json.loads((out / "hypothesis.json").read_text())
    assert report["n"] == 2 and report["pools"] == 10 and report["model_kind"] == "srlib"


def test_pipeline_is_deterministic(tmp_path, scenario):
    train, test = scenario
    for name in ("a", "b"):
        assert main(["pipeline", str(train), str(test), "--seed", "7", "--pools", "3",
                     "--out", str(tmp_path / name)]) == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")


def test_pipeline_same_season_gives_optimum(tmp_path, scenario):
    train, _ = scenario
    out = tmp_path / "out"
    assert main(["pipeline", str(train), str(train), "--seed", "1", "--pools", "2", "--out", str(out)]) == 0
    for row in read_csv(out / "exploit.csv"):
        pid = row["pitcher_id"]
        _, v = value_iteration(TransitionModel.load(out / "models" / f"{pid}.train.json"))
        assert float(row["j_specific"]) == pytest.approx(v[0], abs=1e-12)
        assert row["exploited_weak"] == "1"


def test_pipeline_empty_test_season(tmp_path, scenario, capsys):
    train, _ = scenario
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    out = tmp_path / "out"
    assert main(["pipeline", str(train), str(empty), "--seed", "1", "--out", str(out)]) == 1
    assert "[evaluate]" in capsys.readouterr().err
    assert not out.exists()


@pytest.fixture(scope="module")
def sim_inputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    spec = random_spec("P", 1, templates=close_templates(0.02), jitter=0.001)
    train = write_season(root / "train.jsonl", generate_season(spec, 200, 0.5, seed=1, season=2009))
    test = write_season(root / "test.jsonl", generate_season(spec, 40, 0.5, seed=2, season=2010,
                                                             batter_ids=("LOW", "HIGH")))
    profiles = root / "profiles.json"
    profiles.write_text(json.dumps({"batters": [
        {"batter_id": "LOW", "pitcher_id": "P", "strikeouts": 0, "plate_appearances": 100},
        {"batter_id": "HIGH", "pitcher_id": "P", "strikeouts": 50, "plate_appearances": 50},
    ]}))
    return train, test, profiles


def test_simulate_gates_and_reports(tmp_path, sim_inputs):
    out = tmp_path / "out"
    args = ["simulate", *map(str, sim_inputs), "--seed", "4", "--reps", "5"]
    assert main(args + ["--out", str(out)]) == 0
    gate = {r["batter_id"]: r for r in read_csv(out / "gate.csv")}
    assert gate["LOW"]["admitted"] == "1" and gate["HIGH"]["admitted"] == "0"
    assert float(gate["HIGH"]["test_accuracy"]) < float(gate["HIGH"]["chance_threshold"])
    (line,) = read_csv(out / "batting.csv")
    assert line["batter_id"] == "LOW" and line["repetitions"] == "5"
    assert int(line["AB"]) + int(line["BB"]) + int(line["skipped"]) == 5 * int(line["at_bats"])
    assert main(args + ["--out", str(tmp_path / "again")]) == 0
    assert snapshot(out) == snapshot(tmp_path / "again")


def test_simulate_unknown_pitcher(tmp_path, sim_inputs, capsys):
    train, test, _ = sim_inputs
    profiles = tmp_path / "p.json"
    profiles.write_text(json.dumps([{"batter_id": "Z", "pitcher_id": "Q", "strikeouts": 1, "plate_appearances": 9}]))
    assert main(["simulate", str(train), str(test), str(profiles), "--seed", "1"]) == 1
    assert "[simulate]" in capsys.readouterr().err


def test_bad_reps(scenario, capsys):
    train, test = scenario
    assert main(["pipeline", str(train), str(test), "--seed", "1", "--reps", "0"]) == 1
    assert "[config]" in capsys.readouterr().err
