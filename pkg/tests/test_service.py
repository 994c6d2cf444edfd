import time

import pytest
from fastapi.testclient import TestClient

from gridmend.engine import SearchParams
from gridmend.fixtures import toy_scenario
from gridmend.netmodel import scenario_to_dict
from gridmend.service import create_app
from gridmend.solver import SolveParams


def wait_idle(client, rid, timeout=180.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        st = client.get(f"/runs/{rid}").json()
        if st["phase"] in ("done", "dispatched", "failed") \
                and st["pending_updates"] == 0:
            return st
        time.sleep(0.2)
    raise TimeoutError("run did not settle")


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def toy_run(client):
    doc = scenario_to_dict(toy_scenario())
    sid = client.post("/scenario", json=doc).json()["id"]
    rid = client.post("/runs", json={"scenario": sid, "seed": 1,
                                     "solver": "external",
                                     "time_limit": 60}).json()["id"]
    st = wait_idle(client, rid)
    assert st["phase"] == "done", st
    return rid


def test_unknown_run_is_404(client):
    assert client.get("/runs/ghost").status_code == 404
    assert client.get("/runs/ghost/incumbent").status_code == 404
    assert client.get("/runs/ghost/timeline").status_code == 404
    assert client.get("/runs/ghost/metrics").status_code == 404
    assert client.post("/runs/ghost/updates",
                       json={"line": "L2", "hours": 2.0}).status_code == 404


def test_unknown_scenario_is_404(client):
    r = client.post("/runs", json={"scenario": "ghost"})
    assert r.status_code == 404


def test_bad_scenario_document_is_422(client):
    doc = scenario_to_dict(toy_scenario())
    doc["network"]["lines"][0]["to"] = "nope"
    assert client.post("/scenario", json=doc).status_code == 422


def test_run_completes_with_optimal_incumbent(client, toy_run):
    inc = client.get(f"/runs/{toy_run}/incumbent").json()
    assert inc["objective"] == pytest.approx(7304.0)
    assert inc["routes"]["c1"] == ["D", "L2", "D"]
    assert inc["repairs"] == [{"line": "L2", "step": 3}]
    assert inc["itineraries"]["c1"][0]["node"] == "L2"


def test_timeline_and_metrics(client, toy_run):
    tl = client.get(f"/runs/{toy_run}/timeline").json()
    assert tl["csv"].startswith("step,repaired,opened,closed,pct_served\n")
    assert len(tl["rows"]) == 6
    met = client.get(f"/runs/{toy_run}/metrics").json()
    assert met["objective"] == pytest.approx(7304.0)
    assert met["kwh_served"] > 0
    assert met["restoration_hours"] is not None
    assert met["objective_csv"].splitlines()[0] == \
        "iteration,sample_size,stall,objective,wall"
    assert met["load_served_csv"].splitlines()[0] == "step,pct_served,kw_served"


def test_update_flow(client):
    doc = scenario_to_dict(toy_scenario())
    sid = client.post("/scenario", json=doc).json()["id"]
    rid = client.post("/runs", json={"scenario": sid, "seed": 2,
                                     "solver": "external",
                                     "time_limit": 60}).json()["id"]
    wait_idle(client, rid)
    before = client.get(f"/runs/{rid}/incumbent").json()["objective"]

    r = client.post(f"/runs/{rid}/updates", json={"line": "L2", "hours": 2.5})
    assert r.status_code == 200 and r.json()["status"] == "queued"
    # idempotent per (run, line, value)
    r = client.post(f"/runs/{rid}/updates", json={"line": "L2", "hours": 2.5})
    assert r.status_code == 200 and r.json()["status"] == "duplicate"
    # schema violations
    assert client.post(f"/runs/{rid}/updates",
                       json={"line": "CB", "hours": 2.0}).status_code == 422
    assert client.post(f"/runs/{rid}/updates",
                       json={"line": "L2", "hours": -1.0}).status_code == 422
    assert client.post(f"/runs/{rid}/updates",
                       json={"hours": 2.0}).status_code == 422

    wait_idle(client, rid)
    after = client.get(f"/runs/{rid}/incumbent").json()["objective"]
    assert after >= before  # a longer repair cannot cost less
    events = client.get(f"/runs/{rid}/metrics").json()["event_log"]
    assert "event=restart" in events


def test_dispatch_ack_and_repaired_conflict(client):
    doc = scenario_to_dict(toy_scenario())
    sid = client.post("/scenario", json=doc).json()["id"]
    rid = client.post("/runs", json={"scenario": sid, "seed": 3,
                                     "solver": "external",
                                     "time_limit": 60}).json()["id"]
    wait_idle(client, rid)
    r = client.post(f"/runs/{rid}/dispatch",
                    json={"crew": "c1", "completed": ["L2"]})
    assert r.status_code == 200
    assert client.get(f"/runs/{rid}").json()["phase"] == "dispatched"
    # updating a repaired damage is a conflict
    r = client.post(f"/runs/{rid}/updates", json={"line": "L2", "hours": 3.0})
    assert r.status_code == 409


def test_api_episode_matches_library(client, external):
    from gridmend.fieldsim import run_episode
    actual = {"L2": 2.5}
    lib = run_episode(toy_scenario(), seed=2,
                      search=SearchParams(seed=2),
                      params=SolveParams(time_limit=60), adapter=external,
                      actual_hours=actual)

    doc = scenario_to_dict(toy_scenario())
    sid = client.post("/scenario", json=doc).json()["id"]
    rid = client.post("/runs", json={"scenario": sid, "seed": 2,
                                     "solver": "external",
                                     "time_limit": 60}).json()["id"]
    wait_idle(client, rid)
    for _, line in lib.reveals:   # replay the revealed times through the API
        client.post(f"/runs/{rid}/updates",
                    json={"line": line, "hours": actual[line]})
    wait_idle(client, rid)
    met = client.get(f"/runs/{rid}/metrics").json()
    assert met["objective"] == pytest.approx(lib.objective, abs=1e-6)
    tl = client.get(f"/runs/{rid}/timeline").json()
    assert tl["rows"][-1]["pct_served"] == pytest.approx(100.0)
