import pytest

import gridmend.engine as engine
from gridmend.builder import build_dsrrp
from gridmend.engine import (DispatchState, IncumbentStore, SearchParams,
                             assign_crews, dynamic_step, format_event,
                             neighborhood_search, priority_baseline,
                             run_pipeline)
from gridmend.milp import Assignment
from gridmend.netmodel import parse_scenario
from gridmend.solver import SolveParams

TOY_OPT = 7304.0


def stall_scenario():
    """Four damages plus one depot: five sampleable nodes, so the sample can
    grow past the default size of three before the search terminates."""
    buses = [{"id": "S", "phases": [True, False, False],
              "is_substation": True}]
    lines = [{"id": "CB", "from": "S", "to": "b1",
              "phases": [True, False, False], "kind": "substation-breaker"}]
    z = [[[0.0008, 0.0016], [0.0001, 0.0002], [0.0001, 0.0002]],
         [[0.0001, 0.0002], [0.0008, 0.0016], [0.0001, 0.0002]],
         [[0.0001, 0.0002], [0.0001, 0.0002], [0.0008, 0.0016]]]
    for i in range(1, 6):
        buses.append({"id": f"b{i}", "phases": [True, False, False],
                      "demand_p": [10, 0, 0], "demand_q": [5, 0, 0]})
        if i < 5:
            lines.append({"id": f"l{i}", "from": f"b{i}", "to": f"b{i + 1}",
                          "phases": [True, False, False], "z": z})
    damaged = ["l1", "l2", "l3", "l4"]
    doc = {
        "network": {"buses": buses, "lines": lines},
        "damage": [{"line": m, "repair_hours": 1.0,
                    "resources": {"kit": 1}} for m in damaged],
        "crews": [{"id": "c1", "kind": "line", "depot": "D",
                   "capacity": 10.0},
                  {"id": "c2", "kind": "line", "depot": "D",
                   "capacity": 10.0}],
        "depots": [{"id": "D", "stock": {"kit": 8}}],
        "travel": {"nodes": damaged + ["D"],
                   "hours": [[0.0 if i == j else 0.3 for j in range(5)]
                             for i in range(5)]},
        "params": {"dt_hours": 1.0, "horizon_steps": 10,
                   "clpu_lag_steps": 1, "carry_weights": {"kit": 1.0}},
    }
    return parse_scenario(doc)


class ScriptedSolver:
    """Monkeypatch stand-in for engine.solve with a scripted objective per
    call; lets the search mechanics be tested without any real solving."""

    def __init__(self, objectives):
        self.objectives = list(objectives)
        self.calls = 0

    def __call__(self, model, params=None, adapter=None, stop=None):
        obj = self.objectives[min(self.calls, len(self.objectives) - 1)]
        self.calls += 1
        return Assignment(values={}, objective=obj, status="optimal")


def seeded_store(objective=1000.0):
    store = IncumbentStore()
    store.offer(Assignment(values={}, objective=objective, status="optimal"),
                0, 0.0)
    return store


def test_search_params_validation():
    with pytest.raises(ValueError):
        SearchParams(sample_size=0)
    with pytest.raises(ValueError):
        SearchParams(grow_after=0)


def test_incumbent_store_strict_improvement():
    store = IncumbentStore()
    a = Assignment(values={}, objective=10.0, status="optimal")
    assert store.offer(a, 0, 0.0)
    assert not store.offer(Assignment(values={}, objective=10.0,
                                      status="optimal"), 1, 0.0)
    assert store.offer(Assignment(values={}, objective=9.0,
                                  status="optimal"), 2, 0.0)
    assert store.best().objective == 9.0
    store.reset()
    assert store.best() is None


def test_format_event_is_stable():
    line = format_event({"iteration": 3, "sample_size": 4, "stall": 1,
                         "objective": 12.5, "wall": 0.25})
    assert line == "iteration=3 sample_size=4 stall=1 objective=12.5000 wall=0.2500"


def test_stall_growth_and_termination(monkeypatch):
    sc = stall_scenario()
    base = build_dsrrp(sc)
    store = seeded_store()
    # never improves: pure stall run
    monkeypatch.setattr(engine, "solve", ScriptedSolver([2000.0]))
    neighborhood_search(sc, store, base,
                        SearchParams(seed=7, iter_time_limit=1.0))
    events = [e for e in store.events() if "iteration" in e]
    assert [e["stall"] for e in events] == [1, 2, 3, 4, 5, 6]
    # growth exactly when the stall count hits 3, then stop at 6
    assert [e["sample_size"] for e in events] == [3, 3, 4, 4, 4, 4]


def test_improvement_resets_stall_count(monkeypatch):
    sc = stall_scenario()
    base = build_dsrrp(sc)
    store = seeded_store()
    script = [2000.0, 900.0] + [2000.0] * 10  # improvement on iteration 2
    monkeypatch.setattr(engine, "solve", ScriptedSolver(script))
    neighborhood_search(sc, store, base,
                        SearchParams(seed=7, iter_time_limit=1.0))
    events = [e for e in store.events() if "iteration" in e]
    assert [e["stall"] for e in events] == [1, 0, 1, 2, 3, 4, 5, 6]
    assert store.best().objective == 900.0


def test_sample_covering_all_nodes_stops_after_one_iteration(toy,
                                                             monkeypatch):
    base = build_dsrrp(toy)
    store = seeded_store()
    monkeypatch.setattr(engine, "solve", ScriptedSolver([2000.0]))
    # toy has only two sampleable nodes (the damage and the depot)
    neighborhood_search(toy, store, base, SearchParams(seed=0))
    events = [e for e in store.events() if "iteration" in e]
    assert len(events) == 1


def test_search_requires_incumbent(toy):
    with pytest.raises(engine.EngineError):
        neighborhood_search(toy, IncumbentStore())


def test_assign_crews_toy(toy, external):
    out = assign_crews(toy, SolveParams(time_limit=60), external)
    assert out == {"c1": {"L2"}, "t1": {"L2"}}


def test_run_pipeline_toy(toy, external):
    store = IncumbentStore()
    inc = run_pipeline(toy, store, SearchParams(seed=1),
                       SolveParams(time_limit=60), external)
    assert inc.objective == pytest.approx(TOY_OPT)
    events = store.events()
    assert events[0]["iteration"] == 0
    assert len(events) >= 2


def test_dynamic_step_honors_frozen_arcs(toy, external):
    store = IncumbentStore()
    run_pipeline(toy, store, SearchParams(seed=1), SolveParams(time_limit=60),
                 external)
    dispatch = DispatchState(frozen_arcs={("D", "L2", "c1"): 1})
    inc = dynamic_step(toy, dispatch, {"L2": 2.5}, store,
                       SearchParams(seed=1), SolveParams(time_limit=60),
                       external)
    assert inc.assignment.value("x[D,L2,c1]") == pytest.approx(1.0)
    # a longer repair can only cost more
    assert inc.objective >= TOY_OPT - 1e-6


def test_priority_baseline_toy(toy, external):
    inc = priority_baseline(toy, params=SolveParams(time_limit=60),
                            adapter=external)
    assert inc.objective == pytest.approx(TOY_OPT)
