import json

from click.testing import CliRunner

from gridmend.cli import main
from gridmend.fixtures import toy_scenario
from gridmend.netmodel import serialize_scenario


def write_toy(tmp_path):
    path = tmp_path / "toy.json"
    path.write_text(serialize_scenario(toy_scenario()), encoding="utf-8")
    return str(path)


def test_export_lp(tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, ["export-lp", "--scenario", write_toy(tmp_path),
                               "--out", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    text = (tmp_path / "out" / "model.lp").read_text()
    assert text.startswith("minimize")
    assert text.rstrip().endswith("end")


def test_solve_writes_artifacts(tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, ["solve", "--scenario", write_toy(tmp_path),
                               "--solver", "external", "--seed", "1",
                               "--time-limit", "60",
                               "--out", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    out = tmp_path / "out"
    for name in ("solution.sol", "objective_trace.csv", "load_served.csv",
                 "timeline.csv", "events.log", "summary.json"):
        assert (out / name).exists(), name
    summary = json.loads((out / "summary.json").read_text())
    assert summary["objective"] == 7304.0
    assert summary["routes"]["c1"] == ["D", "L2", "D"]
    trace = (out / "objective_trace.csv").read_text().splitlines()
    assert trace[0] == "iteration,sample_size,stall,objective,wall"
    assert len(trace) >= 2


def test_baseline(tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, ["baseline", "--scenario", write_toy(tmp_path),
                               "--solver", "external", "--time-limit", "60",
                               "--out", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["objective"] == 7304.0


def test_simulate(tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, ["simulate", "--scenario", write_toy(tmp_path),
                               "--solver", "external", "--seed", "3",
                               "--time-limit", "60",
                               "--out", str(tmp_path / "out")])
    assert res.exit_code == 0, res.output
    episode = json.loads((tmp_path / "out" / "episode.json").read_text())
    assert set(episode["actual_hours"]) == {"L2"}
    timeline = (tmp_path / "out" / "timeline.csv").read_text().splitlines()
    assert timeline[0] == "step,repaired,opened,closed,pct_served"
    assert timeline[-1].endswith("100.00")


def test_missing_scenario_file_fails():
    runner = CliRunner()
    res = runner.invoke(main, ["solve", "--scenario", "/nonexistent.json"])
    assert res.exit_code != 0
