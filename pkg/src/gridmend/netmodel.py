"""Typed model of the damaged feeder: network, damage set, crews, logistics.

A Scenario is immutable after parsing; everything downstream (model builders,
search, simulation) treats it as a shared read-only value. Mutation means
constructing a new Scenario (see `with_repair_times`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

PLAIN = "plain"
SWITCH = "switch"
REGULATOR = "regulator"
BREAKER = "substation-breaker"

LINE_KINDS = (PLAIN, SWITCH, REGULATOR, BREAKER)

LINE_CREW = "line"
TREE_CREW = "tree"


class ScenarioError(ValueError):
    """Schema violation, dangling reference, or inconsistent entity."""


def _require(cond, msg):
    if not cond:
        raise ScenarioError(msg)


@dataclass(frozen=True)
class Bus:
    id: str
    phases: tuple[bool, bool, bool]
    demand_p: tuple[float, float, float]      # diversified, kW per phase
    demand_q: tuple[float, float, float]
    surge_p: tuple[float, float, float]       # undiversified (CLPU block), kW
    surge_q: tuple[float, float, float]
    priority: float = 1.0
    is_critical: bool = False
    is_substation: bool = False
    dg_p_max: tuple[float, float, float] = (0.0, 0.0, 0.0)
    dg_q_max: tuple[float, float, float] = (0.0, 0.0, 0.0)
    u_min: float = 0.9025                      # squared p.u. (0.95^2)
    u_max: float = 1.1025                      # squared p.u. (1.05^2)
    profile: tuple[float, ...] = ()            # per-step demand multipliers

    @property
    def has_dg(self) -> bool:
        return any(v > 0 for v in self.dg_p_max) or self.is_substation

    def validate(self):
        _require(any(self.phases), f"bus {self.id}: no phases")
        for name, vec in (("demand_p", self.demand_p), ("demand_q", self.demand_q),
                          ("surge_p", self.surge_p), ("surge_q", self.surge_q)):
            for ph in range(3):
                _require(vec[ph] >= 0, f"bus {self.id}: negative {name}")
                _require(self.phases[ph] or vec[ph] == 0,
                         f"bus {self.id}: {name} nonzero on absent phase {ph}")
        _require(self.u_min < self.u_max,
                 f"bus {self.id}: u_min must be below u_max")


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    phases: tuple[bool, bool, bool]
    z: tuple = ()                  # 3x3 complex impedance, () for switchgear
    p_max: float = 1e4             # kW per phase
    p_min: float | None = None     # reverse-flow limit, defaults to p_max
    q_max: float = 1e4             # kVAr per phase
    q_min: float | None = None
    kind: str = PLAIN
    reg_ratio: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @property
    def reverse_p(self) -> float:
        return self.p_max if self.p_min is None else self.p_min

    @property
    def reverse_q(self) -> float:
        return self.q_max if self.q_min is None else self.q_min

    @property
    def is_switch(self) -> bool:
        return self.kind in (SWITCH, BREAKER)

    def validate(self, buses: dict[str, Bus]):
        _require(self.kind in LINE_KINDS, f"line {self.id}: bad kind {self.kind}")
        for end in (self.from_bus, self.to_bus):
            _require(end in buses,
                     f"line {self.id}: references nonexistent bus {end}")
        for ph in range(3):
            if self.phases[ph]:
                _require(buses[self.from_bus].phases[ph]
                         and buses[self.to_bus].phases[ph],
                         f"line {self.id}: phase {ph} absent at an endpoint")
        _require(any(self.phases), f"line {self.id}: no phases")
        if self.kind == REGULATOR:
            _require(all(r > 0 for r in self.reg_ratio),
                     f"line {self.id}: regulator ratios must be positive")


@dataclass(frozen=True)
class DamageRecord:
    line_id: str
    repair_hours: dict          # line crew id -> hours (or "*" default)
    tree_hours: dict | None = None   # tree crew id -> hours, None if clear
    resources: dict = field(default_factory=dict)  # resource type -> units

    @property
    def tree_blocked(self) -> bool:
        return self.tree_hours is not None

    def repair_time(self, crew_id: str) -> float:
        return self.repair_hours.get(crew_id, self.repair_hours.get("*", 0.0))

    def tree_time(self, crew_id: str) -> float:
        if self.tree_hours is None:
            return 0.0
        return self.tree_hours.get(crew_id, self.tree_hours.get("*", 0.0))

    def validate(self, lines, crews):
        _require(self.line_id in lines,
                 f"damage {self.line_id}: references nonexistent line")
        for hours in self.repair_hours.values():
            _require(hours > 0, f"damage {self.line_id}: repair time must be > 0")
        if self.tree_hours is not None:
            for hours in self.tree_hours.values():
                _require(hours > 0,
                         f"damage {self.line_id}: clearing time must be > 0")
        for rtype, units in self.resources.items():
            _require(units >= 0 and units == int(units),
                     f"damage {self.line_id}: resource {rtype} demand must be "
                     f"a nonnegative integer")
        _require(not lines[self.line_id].is_switch,
                 f"damage {self.line_id}: damaged operable switches are not "
                 f"supported")


@dataclass(frozen=True)
class Crew:
    id: str
    kind: str                   # line | tree
    depot: str
    start: str = ""             # node of N (defaults to home depot)
    end: str = ""
    capacity: float = 0.0       # carrying capacity, line crews only

    def validate(self, depots):
        _require(self.kind in (LINE_CREW, TREE_CREW),
                 f"crew {self.id}: bad kind {self.kind}")
        _require(self.depot in depots,
                 f"crew {self.id}: references nonexistent depot {self.depot}")


@dataclass(frozen=True)
class Depot:
    id: str
    stock: dict = field(default_factory=dict)   # resource type -> units


@dataclass(frozen=True)
class TravelMatrix:
    nodes: tuple[str, ...]      # damaged line ids + depot ids
    hours: tuple                # symmetric, zero diagonal
    km: tuple

    def index(self, node: str) -> int:
        return self.nodes.index(node)

    def time(self, a: str, b: str) -> float:
        return self.hours[self.index(a)][self.index(b)]

    def dist(self, a: str, b: str) -> float:
        return self.km[self.index(a)][self.index(b)]

    def validate(self):
        n = len(self.nodes)
        for mat, name in ((self.hours, "hours"), (self.km, "km")):
            _require(len(mat) == n and all(len(r) == n for r in mat),
                     f"travel {name}: matrix shape must match node count")
            for i in range(n):
                _require(mat[i][i] == 0, f"travel {name}: nonzero diagonal "
                                         f"at {self.nodes[i]}")
                for j in range(n):
                    _require(mat[i][j] >= 0,
                             f"travel {name}: negative entry")
                    _require(abs(mat[i][j] - mat[j][i]) < 1e-9,
                             f"travel {name}: asymmetric at "
                             f"({self.nodes[i]},{self.nodes[j]})")


@dataclass(frozen=True)
class Scenario:
    buses: dict                 # id -> Bus, insertion ordered
    lines: dict                 # id -> Line
    damage: tuple               # DamageRecord, ordered
    crews: tuple                # Crew
    depots: dict                # id -> Depot
    travel: TravelMatrix
    dt_hours: float = 1.0
    horizon: int = 0            # steps; 0 = derive default
    clpu_lag: int = 1           # steps
    switch_cost: float = 8.0            # $ per operation
    shed_cost_per_kwh: float = 14.0     # base, scaled by bus priority
    carry_weights: dict = field(default_factory=dict)  # resource -> capacity units
    impedance_unit: str = "pu"          # pu | ohm
    s_base_kva: float = 1000.0
    v_base_kv: float = 4.16
    nominal_speed_kmh: float = 40.0
    initial_open_switches: tuple = ()   # switch line ids open before the event

    # -- derived sets -------------------------------------------------------

    @property
    def damaged_ids(self) -> list[str]:
        return [d.line_id for d in self.damage]

    @property
    def tree_blocked_ids(self) -> list[str]:
        return [d.line_id for d in self.damage if d.tree_blocked]

    @property
    def line_crews(self) -> list[Crew]:
        return [c for c in self.crews if c.kind == LINE_CREW]

    @property
    def tree_crews(self) -> list[Crew]:
        return [c for c in self.crews if c.kind == TREE_CREW]

    @property
    def switch_ids(self) -> list[str]:
        return [k for k, ln in self.lines.items() if ln.is_switch]

    @property
    def resource_types(self) -> list[str]:
        types = set()
        for d in self.damage:
            types.update(d.resources)
        for dep in self.depots.values():
            types.update(dep.stock)
        types.update(self.carry_weights)
        return sorted(types)

    def damage_record(self, line_id: str) -> DamageRecord:
        for d in self.damage:
            if d.line_id == line_id:
                return d
        raise KeyError(line_id)

    def demand_p(self, bus_id: str, phase: int, t: int) -> float:
        bus = self.buses[bus_id]
        mult = bus.profile[t % len(bus.profile)] if bus.profile else 1.0
        return bus.demand_p[phase] * mult

    def demand_q(self, bus_id: str, phase: int, t: int) -> float:
        bus = self.buses[bus_id]
        mult = bus.profile[t % len(bus.profile)] if bus.profile else 1.0
        return bus.demand_q[phase] * mult

    def initial_line_status(self, line_id: str) -> int:
        """Line status just before the repair horizon (u at t=0)."""
        if line_id in self.damaged_ids:
            return 0
        if line_id in self.initial_open_switches:
            return 0
        return 1

    def carry_weight(self, rtype: str) -> float:
        return self.carry_weights.get(rtype, 1.0)

    def source_bus_ids(self) -> list[str]:
        return [b.id for b in self.buses.values() if b.has_dg]

    def with_repair_times(self, times: dict[str, float]) -> "Scenario":
        """New Scenario with line-crew repair times replaced per damage id."""
        new_damage = []
        for d in self.damage:
            if d.line_id in times:
                new_damage.append(replace(d, repair_hours={"*": times[d.line_id]}))
            else:
                new_damage.append(d)
        return replace(self, damage=tuple(new_damage))

    def default_horizon(self) -> int:
        """Serial worst case: all repairs plus longest legs, then slack."""
        total = 0.0
        n = len(self.travel.nodes)
        for d in self.damage:
            times = [d.repair_time(c.id) for c in self.line_crews]
            total += max(times) if times else 0.0
            if d.tree_blocked:
                total += max(d.tree_time(c.id) for c in self.tree_crews)
            i = self.travel.index(d.line_id)
            total += max(self.travel.hours[i][j] for j in range(n))
        return int(math.ceil(total / self.dt_hours)) + 2

    @property
    def horizon_steps(self) -> int:
        return self.horizon if self.horizon > 0 else self.default_horizon()


# -- parsing / serialization ------------------------------------------------


def _tuple3(raw, name, cast=float, default=None):
    if raw is None:
        if default is not None:
            return default
        raise ScenarioError(f"{name}: missing")
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise ScenarioError(f"{name}: expected a 3-vector")
    return tuple(cast(v) for v in raw)


def _z_matrix(raw, line_id):
    if raw is None:
        return ()
    if len(raw) != 3 or any(len(row) != 3 for row in raw):
        raise ScenarioError(f"line {line_id}: impedance must be 3x3")
    out = []
    for row in raw:
        orow = []
        for cell in row:
            if not isinstance(cell, (list, tuple)) or len(cell) != 2:
                raise ScenarioError(
                    f"line {line_id}: impedance entries are [re, im] pairs")
            orow.append(complex(float(cell[0]), float(cell[1])))
        out.append(tuple(orow))
    return tuple(out)


def _hours_map(raw, name):
    if isinstance(raw, (int, float)):
        return {"*": float(raw)}
    if isinstance(raw, dict):
        return {str(k): float(v) for k, v in raw.items()}
    raise ScenarioError(f"{name}: expected hours or per-crew map")


def parse_scenario(document) -> Scenario:
    """Parse and fully validate a scenario document (JSON text or dict)."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"not valid JSON: {exc}")
    else:
        doc = document
    for section in ("network", "damage", "crews", "depots", "travel", "params"):
        _require(section in doc, f"missing section: {section}")
    params = doc["params"]

    buses: dict[str, Bus] = {}
    for raw in doc["network"].get("buses", []):
        bid = str(raw["id"])
        _require(bid not in buses, f"duplicate bus id {bid}")
        phases = _tuple3(raw.get("phases"), f"bus {bid} phases", bool,
                         (True, True, True))
        zero = (0.0, 0.0, 0.0)
        demand_p = _tuple3(raw.get("demand_p"), f"bus {bid}", float, zero)
        demand_q = _tuple3(raw.get("demand_q"), f"bus {bid}", float, zero)
        bus = Bus(
            id=bid, phases=phases, demand_p=demand_p, demand_q=demand_q,
            surge_p=_tuple3(raw.get("surge_p"), f"bus {bid}", float, demand_p),
            surge_q=_tuple3(raw.get("surge_q"), f"bus {bid}", float, demand_q),
            priority=float(raw.get("priority", 1.0)),
            is_critical=bool(raw.get("is_critical", False)),
            is_substation=bool(raw.get("is_substation", False)),
            dg_p_max=_tuple3(raw.get("dg_p_max"), f"bus {bid}", float, zero),
            dg_q_max=_tuple3(raw.get("dg_q_max"), f"bus {bid}", float, zero),
            u_min=float(raw.get("u_min", 0.9025)),
            u_max=float(raw.get("u_max", 1.1025)),
            profile=tuple(float(v) for v in raw.get("profile", [])),
        )
        bus.validate()
        buses[bid] = bus

    lines: dict[str, Line] = {}
    for raw in doc["network"].get("lines", []):
        lid = str(raw["id"])
        _require(lid not in lines, f"duplicate line id {lid}")
        line = Line(
            id=lid, from_bus=str(raw["from"]), to_bus=str(raw["to"]),
            phases=_tuple3(raw.get("phases"), f"line {lid} phases", bool,
                           (True, True, True)),
            z=_z_matrix(raw.get("z"), lid),
            p_max=float(raw.get("p_max", 1e4)),
            p_min=float(raw["p_min"]) if "p_min" in raw else None,
            q_max=float(raw.get("q_max", 1e4)),
            q_min=float(raw["q_min"]) if "q_min" in raw else None,
            kind=str(raw.get("kind", PLAIN)),
            reg_ratio=_tuple3(raw.get("reg_ratio"), f"line {lid}", float,
                              (1.0, 1.0, 1.0)),
        )
        line.validate(buses)
        lines[lid] = line

    depots: dict[str, Depot] = {}
    for raw in doc["depots"]:
        did = str(raw["id"])
        _require(did not in depots, f"duplicate depot id {did}")
        stock = {str(k): float(v) for k, v in raw.get("stock", {}).items()}
        for rtype, units in stock.items():
            _require(units >= 0, f"depot {did}: negative stock of {rtype}")
        depots[did] = Depot(id=did, stock=stock)

    crews = []
    crew_ids = set()
    for raw in doc["crews"]:
        cid = str(raw["id"])
        _require(cid not in crew_ids, f"duplicate crew id {cid}")
        crew_ids.add(cid)
        crew = Crew(
            id=cid, kind=str(raw.get("kind", LINE_CREW)),
            depot=str(raw["depot"]),
            start=str(raw.get("start", raw["depot"])),
            end=str(raw.get("end", raw["depot"])),
            capacity=float(raw.get("capacity", 0.0)),
        )
        crew.validate(depots)
        crews.append(crew)

    damage = []
    seen = set()
    for raw in doc["damage"]:
        lid = str(raw["line"])
        _require(lid not in seen, f"duplicate damage record for line {lid}")
        seen.add(lid)
        tree_hours = None
        if "tree_hours" in raw and raw["tree_hours"] is not None:
            tree_hours = _hours_map(raw["tree_hours"], f"damage {lid} tree_hours")
        rec = DamageRecord(
            line_id=lid,
            repair_hours=_hours_map(raw["repair_hours"],
                                    f"damage {lid} repair_hours"),
            tree_hours=tree_hours,
            resources={str(k): float(v)
                       for k, v in raw.get("resources", {}).items()},
        )
        rec.validate(lines, crews)
        damage.append(rec)

    traw = doc["travel"]
    nodes = tuple(str(n) for n in traw["nodes"])
    hours = tuple(tuple(float(v) for v in row) for row in traw["hours"])
    if "km" in traw:
        km = tuple(tuple(float(v) for v in row) for row in traw["km"])
    else:
        speed = float(params.get("nominal_speed_kmh", 40.0))
        km = tuple(tuple(v * speed for v in row) for row in hours)
    travel = TravelMatrix(nodes=nodes, hours=hours, km=km)
    travel.validate()
    node_set = set(nodes)
    for d in damage:
        _require(d.line_id in node_set,
                 f"damage {d.line_id}: missing from travel matrix")
    for did in depots:
        _require(did in node_set, f"depot {did}: missing from travel matrix")
    for crew in crews:
        for loc, what in ((crew.start, "start"), (crew.end, "end")):
            _require(loc in node_set,
                     f"crew {crew.id}: {what} location {loc} not a travel node")

    initial_open = tuple(str(k) for k in params.get("initial_open_switches", []))
    scenario = Scenario(
        buses=buses, lines=lines, damage=tuple(damage), crews=tuple(crews),
        depots=depots, travel=travel,
        dt_hours=float(params.get("dt_hours", 1.0)),
        horizon=int(params.get("horizon_steps", 0)),
        clpu_lag=int(params.get("clpu_lag_steps", 1)),
        switch_cost=float(params.get("switch_cost", 8.0)),
        shed_cost_per_kwh=float(params.get("shed_cost_per_kwh", 14.0)),
        carry_weights={str(k): float(v)
                       for k, v in params.get("carry_weights", {}).items()},
        impedance_unit=str(params.get("impedance_unit", "pu")),
        s_base_kva=float(params.get("s_base_kva", 1000.0)),
        v_base_kv=float(params.get("v_base_kv", 4.16)),
        nominal_speed_kmh=float(params.get("nominal_speed_kmh", 40.0)),
        initial_open_switches=initial_open,
    )
    _require(scenario.clpu_lag >= 1, "params: clpu_lag_steps must be >= 1")
    _require(scenario.dt_hours > 0, "params: dt_hours must be positive")
    for k in initial_open:
        _require(k in lines, f"initial open switch {k}: nonexistent line")
        _require(lines[k].is_switch,
                 f"initial open switch {k}: not an operable switch")
    for crew in scenario.tree_crews:
        _require(crew.capacity == 0.0,
                 f"crew {crew.id}: tree crews carry no resources")
    for d in damage:
        if d.tree_blocked:
            _require(scenario.tree_crews,
                     f"damage {d.line_id}: tree-blocked but no tree crews")
    return scenario


def _r6(v: float) -> float:
    return round(float(v), 6)


def scenario_to_dict(sc: Scenario) -> dict:
    def vec(t):
        return [_r6(v) for v in t]

    buses = []
    for b in sc.buses.values():
        raw = {"id": b.id, "phases": list(b.phases),
               "demand_p": vec(b.demand_p), "demand_q": vec(b.demand_q),
               "surge_p": vec(b.surge_p), "surge_q": vec(b.surge_q),
               "priority": _r6(b.priority), "is_critical": b.is_critical,
               "is_substation": b.is_substation,
               "dg_p_max": vec(b.dg_p_max), "dg_q_max": vec(b.dg_q_max),
               "u_min": _r6(b.u_min), "u_max": _r6(b.u_max)}
        if b.profile:
            raw["profile"] = vec(b.profile)
        buses.append(raw)
    lines = []
    for ln in sc.lines.values():
        raw = {"id": ln.id, "from": ln.from_bus, "to": ln.to_bus,
               "phases": list(ln.phases), "kind": ln.kind,
               "p_max": _r6(ln.p_max), "q_max": _r6(ln.q_max)}
        if ln.p_min is not None:
            raw["p_min"] = _r6(ln.p_min)
        if ln.q_min is not None:
            raw["q_min"] = _r6(ln.q_min)
        if ln.z:
            raw["z"] = [[[_r6(c.real), _r6(c.imag)] for c in row]
                        for row in ln.z]
        if ln.kind == REGULATOR:
            raw["reg_ratio"] = vec(ln.reg_ratio)
        lines.append(raw)
    damage = []
    for d in sc.damage:
        raw = {"line": d.line_id,
               "repair_hours": {k: _r6(v) for k, v in d.repair_hours.items()},
               "resources": {k: _r6(v) for k, v in d.resources.items()}}
        if d.tree_hours is not None:
            raw["tree_hours"] = {k: _r6(v) for k, v in d.tree_hours.items()}
        damage.append(raw)
    crews = [{"id": c.id, "kind": c.kind, "depot": c.depot, "start": c.start,
              "end": c.end, "capacity": _r6(c.capacity)} for c in sc.crews]
    depots = [{"id": d.id, "stock": {k: _r6(v) for k, v in d.stock.items()}}
              for d in sc.depots.values()]
    return {
        "network": {"buses": buses, "lines": lines},
        "damage": damage,
        "crews": crews,
        "depots": depots,
        "travel": {"nodes": list(sc.travel.nodes),
                   "hours": [[_r6(v) for v in row] for row in sc.travel.hours],
                   "km": [[_r6(v) for v in row] for row in sc.travel.km]},
        "params": {
            "dt_hours": _r6(sc.dt_hours),
            "horizon_steps": sc.horizon,
            "clpu_lag_steps": sc.clpu_lag,
            "switch_cost": _r6(sc.switch_cost),
            "shed_cost_per_kwh": _r6(sc.shed_cost_per_kwh),
            "carry_weights": {k: _r6(v) for k, v in sc.carry_weights.items()},
            "impedance_unit": sc.impedance_unit,
            "s_base_kva": _r6(sc.s_base_kva),
            "v_base_kv": _r6(sc.v_base_kv),
            "nominal_speed_kmh": _r6(sc.nominal_speed_kmh),
            "initial_open_switches": list(sc.initial_open_switches),
        },
    }


def serialize_scenario(sc: Scenario) -> str:
    """Canonical form: sorted keys, 6-decimal floats, LF newline at end."""
    return json.dumps(scenario_to_dict(sc), sort_keys=True,
                      separators=(",", ":")) + "\n"


# -- topology ---------------------------------------------------------------


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def enumerate_loops(sc: Scenario) -> list[set[str]]:
    """Fundamental cycles of the all-closed graph, one per independent cycle.

    The spanning tree prefers non-switch lines, so tie switches end up as
    chords and each loop contains at least one operable switch whenever the
    meshing is switch-made.
    """
    uf = _UnionFind(sc.buses.keys())
    tree_adj: dict[str, list[tuple[str, str]]] = {b: [] for b in sc.buses}
    chords: list[Line] = []
    ordered = sorted(sc.lines.values(), key=lambda ln: (ln.is_switch, ln.id))
    for ln in ordered:
        if uf.union(ln.from_bus, ln.to_bus):
            tree_adj[ln.from_bus].append((ln.to_bus, ln.id))
            tree_adj[ln.to_bus].append((ln.from_bus, ln.id))
        else:
            chords.append(ln)
    loops = []
    for chord in sorted(chords, key=lambda ln: ln.id):
        path = _tree_path(tree_adj, chord.from_bus, chord.to_bus)
        loops.append(set(path) | {chord.id})
    return loops


def _tree_path(adj, src, dst) -> list[str]:
    # BFS in the spanning tree; returns line ids along the unique path
    prev = {src: (None, None)}
    queue = [src]
    while queue:
        nxt = []
        for node in queue:
            if node == dst:
                queue = []
                break
            for nbr, lid in adj[node]:
                if nbr not in prev:
                    prev[nbr] = (node, lid)
                    nxt.append(nbr)
        else:
            queue = nxt
            continue
        break
    if dst not in prev:
        raise ScenarioError(f"no tree path between {src} and {dst}")
    path = []
    node = dst
    while prev[node][0] is not None:
        node, lid = prev[node]
        path.append(lid)
    return path


def energized_islands(sc: Scenario, line_status: dict[str, int]) -> list[set[str]]:
    """Partition buses into connected components of the closed-line graph."""
    for k in sc.lines:
        if k not in line_status:
            raise ScenarioError(f"line status missing for line {k}")
    uf = _UnionFind(sc.buses.keys())
    for k, ln in sc.lines.items():
        if line_status[k]:
            uf.union(ln.from_bus, ln.to_bus)
    groups: dict[str, set[str]] = {}
    for b in sc.buses:
        groups.setdefault(uf.find(b), set()).add(b)
    return sorted(groups.values(), key=lambda s: min(s))
