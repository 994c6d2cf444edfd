import json

import pytest

from gridmend.fixtures import ieee123_scenario, random_toy, toy_scenario
from gridmend.netmodel import (LINE_CREW, TREE_CREW, ScenarioError,
                               energized_islands, enumerate_loops,
                               parse_scenario, scenario_to_dict,
                               serialize_scenario)


def test_toy_roundtrip_is_byte_identical(toy):
    text = serialize_scenario(toy)
    again = serialize_scenario(parse_scenario(json.loads(text)))
    assert text == again


@pytest.mark.parametrize("seed", range(8))
def test_random_toy_roundtrip(seed):
    sc = random_toy(seed)
    text = serialize_scenario(sc)
    assert serialize_scenario(parse_scenario(json.loads(text))) == text


def test_derived_sets(toy):
    assert toy.damaged_ids == ["L2"]
    assert toy.tree_blocked_ids == ["L2"]
    assert [c.id for c in toy.line_crews] == ["c1"]
    assert [c.id for c in toy.tree_crews] == ["t1"]
    assert toy.switch_ids == ["CB", "SW"]
    assert toy.resource_types == ["kit"]
    assert toy.source_bus_ids() == ["S", "B4"]


def test_initial_line_status(toy):
    assert toy.initial_line_status("L2") == 0      # damaged
    assert toy.initial_line_status("SW") == 1      # closed unless listed open
    assert toy.initial_line_status("L1") == 1


def test_crew_kinds(toy):
    kinds = {c.id: c.kind for c in toy.crews}
    assert kinds == {"c1": LINE_CREW, "t1": TREE_CREW}


def test_travel_lookup(toy):
    assert toy.travel.time("L2", "D") == 0.5
    assert toy.travel.time("D", "D") == 0.0
    assert toy.travel.dist("L2", "D") == pytest.approx(0.5 * 40.0)


def test_with_repair_times(toy):
    sc2 = toy.with_repair_times({"L2": 2.5})
    assert sc2.damage_record("L2").repair_time("c1") == 2.5
    assert toy.damage_record("L2").repair_time("c1") == 1.5  # original intact
    assert sc2.damage_record("L2").tree_time("t1") == 1.0    # trees unchanged


def test_horizon_default_covers_serial_schedule(toy):
    derived = toy.default_horizon()
    # travel out (0.5) + clearing (1.0) + repair (1.5) fit with slack
    assert derived >= 4
    assert toy.horizon_steps == 6  # explicit value wins


def test_enumerate_loops_toy(toy):
    loops = enumerate_loops(toy)
    assert loops == [{"L2", "SW", "L3"}]


def test_enumerate_loops_prefers_switch_chords(toy):
    # the only loop must be closable by the tie switch, so the switch (or the
    # damaged line) has to sit on it
    (loop,) = enumerate_loops(toy)
    assert "SW" in loop


def test_energized_islands(toy):
    status = {k: toy.initial_line_status(k) for k in toy.lines}
    islands = energized_islands(toy, status)
    merged = [s for s in islands if "S" in s]
    assert merged and {"S", "B1", "B2", "B4", "B3"} >= merged[0]
    status["SW"] = 0  # with both L2 and SW out, B3 is stranded
    islands = energized_islands(toy, status)
    assert {"B3"} in islands


def test_parse_rejects_unknown_bus(toy):
    doc = scenario_to_dict(toy)
    doc["network"]["lines"][1]["to"] = "nope"
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


def test_parse_rejects_damage_on_unknown_line(toy):
    doc = scenario_to_dict(toy)
    doc["damage"][0]["line"] = "nope"
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


def test_parse_rejects_negative_repair_time(toy):
    doc = scenario_to_dict(toy)
    doc["damage"][0]["repair_hours"] = -1.0
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


def test_parse_rejects_crew_with_unknown_depot(toy):
    doc = scenario_to_dict(toy)
    doc["crews"][0]["depot"] = "nowhere"
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


def test_parse_rejects_asymmetric_travel(toy):
    doc = scenario_to_dict(toy)
    doc["travel"]["hours"][0][1] = 9.0
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


def test_ieee123_shape():
    sc = ieee123_scenario()
    assert len(sc.buses) == 130
    assert len(sc.lines) == 131
    assert len(sc.damage) == 14
    assert len(sc.line_crews) == 6
    assert len(sc.tree_crews) == 4
    assert len(sc.depots) == 3
    assert sc.clpu_lag == 2


def test_ieee123_loops():
    sc = ieee123_scenario()
    loops = enumerate_loops(sc)
    # two tie switches close the only two independent loops
    assert len(loops) == len(sc.lines) - len(sc.buses) + 1 == 2
    chords = {"151-300", "54-94"}
    assert all(loop & chords for loop in loops)


def test_ieee123_damage_data():
    sc = ieee123_scenario()
    rec = sc.damage_record("76-86")
    assert rec.repair_time("c1") == 6.0
    assert rec.tree_time("t1") == 2.0
    assert len(sc.tree_blocked_ids) == 6
    weights = {r: sc.carry_weight(r) for r in "ABCDEF"}
    assert weights == {"A": 3.0, "B": 2.5, "C": 2.0, "D": 1.0,
                       "E": 4.0, "F": 1.0}
    assert all(c.capacity == 30.0 for c in sc.line_crews)
