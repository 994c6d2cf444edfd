import networkx as nx
import pytest

from gridmend.builder import (BigMPolicy, BuildError, RouteFixings,
                              build_assignment, build_dsrrp, build_priority,
                              classify_priority_sets, fix_route_subset,
                              restrict_to_assignment)
from gridmend.fixtures import ieee123_scenario, toy_scenario
from gridmend.milp import evaluate
from gridmend.netmodel import parse_scenario, scenario_to_dict
from gridmend.scipy_backend import solve_with_scipy

TOY_OPT = 7304.0  # cross-checked against the embedded solver


@pytest.fixture(scope="module")
def toy_model():
    return build_dsrrp(toy_scenario())


@pytest.fixture(scope="module")
def toy_solution(toy_model):
    res = solve_with_scipy(toy_model, time_limit=120)
    assert res.status == "optimal"
    return res


def test_variable_families(toy_model):
    names = toy_model.var_names
    for prefix in ("y[", "u[", "gamma[", "X[", "U[", "PK[", "QK[", "PG[",
                   "QG[", "PL[", "QL[", "x[", "alpha[", "f[", "E[", "ResC["):
        assert any(n.startswith(prefix) for n in names), prefix


def test_no_damage_drops_routing(toy):
    doc = scenario_to_dict(toy)
    doc["damage"] = []
    sc = parse_scenario(doc)
    model = build_dsrrp(sc)
    assert not any(n.startswith("x[") for n in model.var_names)
    assert any(n.startswith("y[") for n in model.var_names)


def test_short_horizon_rejected(toy):
    with pytest.raises(BuildError):
        build_dsrrp(toy, horizon=1)


def test_fixings_validation(toy):
    with pytest.raises(BuildError):
        RouteFixings(fixed_arcs={("L2", "D", "ghost"): 1}).validate(toy)
    with pytest.raises(BuildError):
        RouteFixings(fixed_arcs={("L2", "D", "c1"): 0.5}).validate(toy)
    with pytest.raises(BuildError):
        RouteFixings(fixed_arcs={("L2", "Z", "c1"): 1}).validate(toy)


def test_bigm_policy_scales_with_scenario(toy):
    bigm = BigMPolicy.from_scenario(toy, toy.horizon_steps)
    assert bigm.m_time >= toy.horizon_steps
    assert bigm.m_volt > 0 and bigm.m_res > 0 and bigm.m_dist > 0


def test_toy_optimal_objective(toy_solution):
    assert toy_solution.objective == pytest.approx(TOY_OPT)


def test_solution_passes_evaluate(toy_model, toy_solution):
    assert evaluate(toy_model, toy_solution).feasible


def test_service_is_monotone(toy, toy_solution):
    for b in toy.buses:
        prev = 0.0
        for t in range(1, toy.horizon_steps + 1):
            y = toy_solution.value(f"y[{b},{t}]")
            assert y >= prev - 1e-6
            prev = y


def test_damaged_line_closed_only_after_repair(toy, toy_solution):
    repaired = 0.0
    for t in range(1, toy.horizon_steps + 1):
        repaired += toy_solution.value(f"f[L2,{t}]")
        assert toy_solution.value(f"u[L2,{t}]") <= repaired + 1e-6


def test_radiality_no_cycles_in_any_step(toy, toy_solution):
    for t in range(1, toy.horizon_steps + 1):
        g = nx.Graph()
        g.add_nodes_from(toy.buses)
        for k, ln in toy.lines.items():
            if toy_solution.value(f"u[{k},{t}]") > 0.5:
                g.add_edge(ln.from_bus, ln.to_bus)
        assert nx.number_of_edges(g) == len(g.nodes) - nx.number_connected_components(g)


def test_tree_clearing_precedes_repair(toy, toy_solution):
    arrive_tree = toy_solution.value("alpha[L2,t1]")
    arrive_line = toy_solution.value("alpha[L2,c1]")
    clear_hours = toy.damage_record("L2").tree_time("t1")
    assert arrive_line >= arrive_tree + clear_hours / toy.dt_hours - 1e-6


def test_assignment_model_toy(toy):
    model = build_assignment(toy)
    res = solve_with_scipy(model, time_limit=60)
    assert res.status == "optimal"
    assert res.value("AL[L2,c1]") == pytest.approx(1.0)
    assert res.value("AT[L2,t1]") == pytest.approx(1.0)


def test_assignment_rejects_unmeetable_resource_demand(toy):
    doc = scenario_to_dict(toy)
    doc["depots"][0]["stock"] = {"kit": 0}
    sc = parse_scenario(doc)
    with pytest.raises(BuildError):
        build_assignment(sc)


def test_priority_weights_validated(toy):
    with pytest.raises(BuildError):
        build_priority(toy, weights=(1.0, 5.0, 10.0))


def test_classify_priority_sets_toy(toy):
    l1, l2, l3 = classify_priority_sets(toy)
    # B3 is critical but restorable through the tie switch, and the toy is
    # single-phase, so the damage falls in the catch-all group
    assert l1 == set()
    assert l2 == set()
    assert l3 == {"L2"}


def test_classify_priority_sets_ieee123():
    sc = ieee123_scenario()
    l1, l2, l3 = classify_priority_sets(sc)
    assert "76-86" in l1
    assert l1 | l2 | l3 == set(sc.damaged_ids)
    assert not (l1 & l2 or l1 & l3 or l2 & l3)


def test_restrict_to_assignment_blocks_foreign_arcs(toy):
    base = build_dsrrp(toy)
    restricted = restrict_to_assignment(base, toy, {"c1": set(), "t1": {"L2"}})
    i = restricted.var_index("x[D,L2,c1]")
    assert restricted.var_ub[i] == 0.0  # c1 may not visit L2 anymore
    j = restricted.var_index("x[D,L2,t1]")
    assert restricted.var_ub[j] == 1.0
    # the base model is untouched
    assert base.var_ub[base.var_index("x[D,L2,c1]")] == 1.0


def test_fix_route_subset_pins_outside_sample(toy):
    base = build_dsrrp(toy)
    incumbent = {"x[D,L2,c1]": 1.0, "x[L2,D,c1]": 1.0,
                 "x[D,L2,t1]": 1.0, "x[L2,D,t1]": 1.0}
    # nothing sampled: every arc between unsampled nodes is pinned
    pinned = fix_route_subset(base, toy, incumbent, set())
    i = pinned.var_index("x[D,L2,c1]")
    assert pinned.var_lb[i] == pinned.var_ub[i] == 1.0
    assert pinned.warm_start == incumbent
    # sampling every node frees the whole route
    free = fix_route_subset(base, toy, incumbent, {"L2", "D"})
    i = free.var_index("x[D,L2,c1]")
    assert (free.var_lb[i], free.var_ub[i]) == (0.0, 1.0)


def test_ieee123_model_families():
    sc = ieee123_scenario(horizon=16)
    model = build_dsrrp(sc)
    assert model.num_vars > 30000
    for prefix in ("y[", "u[", "gamma[", "X[", "U[", "PK[", "PG[", "PL[",
                   "x[", "alpha[", "f[", "E[", "ResC["):
        assert any(n.startswith(prefix) for n in model.var_names), prefix
