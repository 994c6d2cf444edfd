"""Build the restoration MILPs from a Scenario.

Three builders share the same variable naming convention so that solution
files and warm starts survive model rebuilds:

  y[i,t] u[k,t] gamma[k,t] X[i,t] U[i,p,t] PK/QK[k,p,t] PG/QG[i,p,t]
  PL/QL[i,p,t] f[m,t] x[m,n,c] alpha[m,c] E[c,m,r] ResC[c,w,r]

All times inside the models are expressed in timestep units (hours / dt), so
arrival times, repair durations, and the repair-step coupling stay in one
unit system.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .milp import BINARY, EQ, GE, LE, MilpModel
from .netmodel import (LINE_CREW, REGULATOR, BREAKER, Scenario,
                       enumerate_loops)

# phase-rotation constant used to fold the 3-phase impedance into real
# coefficients; isolated here so the approximation can be swapped in one place
PHASE_ROT = cmath.exp(-2j * cmath.pi / 3)


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class RouteFixings:
    """Arc-level constants and per-crew visit restrictions for the builders."""

    fixed_arcs: dict = field(default_factory=dict)   # (m, n, crew) -> 0 or 1
    allowed_nodes: dict = field(default_factory=dict)  # crew -> set of damages

    def validate(self, sc: Scenario):
        nodes = set(sc.travel.nodes)
        crew_ids = {c.id for c in sc.crews}
        for (m, n, c), val in self.fixed_arcs.items():
            if c not in crew_ids:
                raise BuildError(f"fixing references unknown crew {c}")
            if m not in nodes or n not in nodes:
                raise BuildError(f"fixing references unknown node on arc "
                                 f"({m},{n})")
            if val not in (0, 1):
                raise BuildError(f"arc ({m},{n},{c}) fixed to non-binary {val}")


@dataclass(frozen=True)
class BigMPolicy:
    m_time: float   # steps
    m_volt: float   # squared p.u.
    m_res: float    # resource units
    m_dist: float   # km

    @classmethod
    def from_scenario(cls, sc: Scenario, horizon: int | None = None):
        T = horizon or sc.horizon_steps
        steps = 1.0 / sc.dt_hours
        max_travel = max((v for row in sc.travel.hours for v in row),
                         default=0.0) * steps
        max_repair = 0.0
        max_need = 0.0
        for d in sc.damage:
            for c in sc.crews:
                tm = d.repair_time(c.id) if c.kind == LINE_CREW \
                    else d.tree_time(c.id)
                max_repair = max(max_repair, tm * steps)
            max_need = max(max_need, max(d.resources.values(), default=0.0))
        u_max = max((b.u_max for b in sc.buses.values()), default=1.1)
        m_volt = 2.0 * u_max + _max_voltage_drop(sc)
        min_w = min([w for w in sc.carry_weights.values() if w > 0] or [1.0])
        max_cap = max((c.capacity for c in sc.line_crews), default=0.0)
        m_res = max_cap / min_w + max_need + 1.0
        max_d = max((v for row in sc.travel.km for v in row), default=0.0)
        return cls(m_time=T + max_travel + max_repair,
                   m_volt=m_volt, m_res=m_res, m_dist=2.0 * max_d + 1.0)


def _zbar(sc: Scenario, line) -> list[list[complex]]:
    """Phase-shifted impedance in p.u. (rows/cols over the 3 phases)."""
    if not line.z:
        return [[0j] * 3 for _ in range(3)]
    if sc.impedance_unit == "ohm":
        zbase = (sc.v_base_kv ** 2) * 1000.0 / sc.s_base_kva
    else:
        zbase = 1.0
    out = []
    for p in range(3):
        row = []
        for q in range(3):
            rot = PHASE_ROT ** ((p - q) % 3)
            row.append(rot * line.z[p][q] / zbase)
        out.append(row)
    return out


def _max_voltage_drop(sc: Scenario) -> float:
    worst = 0.0
    for ln in sc.lines.values():
        zb = _zbar(sc, ln)
        drop = 0.0
        for p in range(3):
            for q in range(3):
                if ln.phases[q]:
                    smax = max(ln.p_max, ln.reverse_p) / sc.s_base_kva
                    qmax = max(ln.q_max, ln.reverse_q) / sc.s_base_kva
                    drop += 2 * (abs(zb[p][q].real) * smax
                                 + abs(zb[p][q].imag) * qmax)
        worst = max(worst, drop)
    return worst


def _phases(mask):
    return [p for p in range(3) if mask[p]]


def _crew_nodes(sc: Scenario, crew) -> list[str]:
    if crew.kind == LINE_CREW:
        work = list(sc.damaged_ids)
    else:
        work = list(sc.tree_blocked_ids)
    return work + list(sc.depots.keys())


def _crew_arcs(sc: Scenario, crew):
    nodes = _crew_nodes(sc, crew)
    arcs = [(m, n) for m in nodes for n in nodes if m != n]
    if crew.start == crew.end:
        arcs.append((crew.start, crew.end))  # empty-route self arc
    return nodes, arcs


def _check_horizon(sc: Scenario, T: int):
    steps = 1.0 / sc.dt_hours
    for d in sc.damage:
        best = math.inf
        for c in sc.line_crews:
            t = sc.travel.time(c.start, d.line_id) + d.repair_time(c.id)
            best = min(best, t * steps)
        if d.tree_blocked:
            tree = min(sc.travel.time(c.start, d.line_id) + d.tree_time(c.id)
                       for c in sc.tree_crews) * steps
            best = max(best, tree) if best < math.inf else tree
        if best > T:
            raise BuildError(
                f"horizon of {T} steps is too short: damage {d.line_id} "
                f"cannot be repaired before step {math.ceil(best)}")


# -- operation block (Eqs for power, reconfiguration, isolation) ------------


def _add_operation(model: MilpModel, sc: Scenario, T: int, bigm: BigMPolicy,
                   repairs_possible: bool):
    damaged = set(sc.damaged_ids)
    lag = sc.clpu_lag
    sbase = sc.s_base_kva
    shed = sc.shed_cost_per_kwh * sc.dt_hours

    v = {}

    def add(name, kind=BINARY, lb=0.0, ub=math.inf):
        v[name] = model.add_var(name, kind, lb, ub)
        return v[name]

    sub_cap = 2.0 * sum(sum(b.demand_p) + sum(b.surge_p)
                        for b in sc.buses.values()) + 1.0
    sub_cap_q = 2.0 * sum(sum(b.demand_q) + sum(b.surge_q)
                          for b in sc.buses.values()) + 1.0

    for b in sc.buses.values():
        for t in range(1, T + 1):
            add(f"y[{b.id},{t}]")
            add(f"X[{b.id},{t}]")
            for p in _phases(b.phases):
                add(f"U[{b.id},{p},{t}]", "continuous", 0.0, b.u_max)
    for k, ln in sc.lines.items():
        for t in range(1, T + 1):
            add(f"u[{k},{t}]")
            if ln.is_switch:
                add(f"gamma[{k},{t}]")
            for p in _phases(ln.phases):
                add(f"PK[{k},{p},{t}]", "continuous",
                    -ln.reverse_p, ln.p_max)
                add(f"QK[{k},{p},{t}]", "continuous",
                    -ln.reverse_q, ln.q_max)
    for b in sc.buses.values():
        for t in range(1, T + 1):
            for p in _phases(b.phases):
                pcap = sub_cap if b.is_substation else b.dg_p_max[p]
                qcap = sub_cap_q if b.is_substation else b.dg_q_max[p]
                if b.has_dg:
                    add(f"PG[{b.id},{p},{t}]", "continuous", 0.0, pcap)
                    add(f"QG[{b.id},{p},{t}]", "continuous", 0.0, qcap)
                add(f"PL[{b.id},{p},{t}]", "continuous", 0.0, math.inf)
                add(f"QL[{b.id},{p},{t}]", "continuous", 0.0, math.inf)

    # objective: shed cost + switching cost
    const = 0.0
    for b in sc.buses.values():
        rho = shed * b.priority
        for t in range(1, T + 1):
            coef = 0.0
            for p in _phases(b.phases):
                coef += rho * sc.demand_p(b.id, p, t)
            const += coef
            if coef:
                model.add_obj_term(v[f"y[{b.id},{t}]"], -coef)
    for k in sc.switch_ids:
        for t in range(1, T + 1):
            model.add_obj_term(v[f"gamma[{k},{t}]"], sc.switch_cost)
    model.obj_constant += const

    # substation buses are the voltage reference and can never be shed off
    for b in sc.buses.values():
        if not b.is_substation:
            continue
        for d in sc.damage:
            ln = sc.lines[d.line_id]
            if b.id in (ln.from_bus, ln.to_bus):
                raise BuildError(
                    f"damage {d.line_id}: adjacent to substation bus {b.id}")
        for t in range(1, T + 1):
            model.fix_var(v[f"X[{b.id},{t}]"], 1.0)
            for p in _phases(b.phases):
                model.fix_var(v[f"U[{b.id},{p},{t}]"], 1.0)

    for b in sc.buses.values():
        for t in range(1, T + 1):
            y = v[f"y[{b.id},{t}]"]
            ylag_idx = None
            if t - lag >= 1:
                ylag_idx = v[f"y[{b.id},{t - lag}]"]
            # cold load pickup (undiversified block until the lag expires)
            for p in _phases(b.phases):
                pd = sc.demand_p(b.id, p, t)
                qd = sc.demand_q(b.id, p, t)
                pu_, qu_ = b.surge_p[p], b.surge_q[p]
                terms = [(v[f"PL[{b.id},{p},{t}]"], 1.0), (y, -(pd + pu_))]
                if ylag_idx is not None:
                    terms.append((ylag_idx, pu_))
                model.add_con(f"clpu_p[{b.id},{p},{t}]", terms, EQ, 0.0)
                terms = [(v[f"QL[{b.id},{p},{t}]"], 1.0), (y, -(qd + qu_))]
                if ylag_idx is not None:
                    terms.append((ylag_idx, qu_))
                model.add_con(f"clpu_q[{b.id},{p},{t}]", terms, EQ, 0.0)
            # once served, stays served
            if t < T:
                model.add_con(f"serve_mono[{b.id},{t}]",
                              [(v[f"y[{b.id},{t + 1}]"], 1.0), (y, -1.0)],
                              GE, 0.0)
            # outage areas shed their load and sit inside voltage limits
            model.add_con(f"energized[{b.id},{t}]",
                          [(v[f"X[{b.id},{t}]"], 1.0), (y, -1.0)], GE, 0.0)
            for p in _phases(b.phases):
                if b.is_substation:
                    continue
                model.add_con(f"vmin[{b.id},{p},{t}]",
                              [(v[f"U[{b.id},{p},{t}]"], 1.0),
                               (v[f"X[{b.id},{t}]"], -b.u_min)], GE, 0.0)
                model.add_con(f"vmax[{b.id},{p},{t}]",
                              [(v[f"U[{b.id},{p},{t}]"], 1.0),
                               (v[f"X[{b.id},{t}]"], -b.u_max)], LE, 0.0)

    # node balance per phase
    inflow: dict[tuple[str, int], list] = {}
    outflow: dict[tuple[str, int], list] = {}
    for k, ln in sc.lines.items():
        for p in _phases(ln.phases):
            outflow.setdefault((ln.from_bus, p), []).append(k)
            inflow.setdefault((ln.to_bus, p), []).append(k)
    for b in sc.buses.values():
        for p in _phases(b.phases):
            for t in range(1, T + 1):
                terms_p = [(v[f"PK[{k},{p},{t}]"], 1.0)
                           for k in inflow.get((b.id, p), [])]
                terms_p += [(v[f"PK[{k},{p},{t}]"], -1.0)
                            for k in outflow.get((b.id, p), [])]
                terms_q = [(v[f"QK[{k},{p},{t}]"], 1.0)
                           for k in inflow.get((b.id, p), [])]
                terms_q += [(v[f"QK[{k},{p},{t}]"], -1.0)
                            for k in outflow.get((b.id, p), [])]
                if b.has_dg:
                    terms_p.append((v[f"PG[{b.id},{p},{t}]"], 1.0))
                    terms_q.append((v[f"QG[{b.id},{p},{t}]"], 1.0))
                terms_p.append((v[f"PL[{b.id},{p},{t}]"], -1.0))
                terms_q.append((v[f"QL[{b.id},{p},{t}]"], -1.0))
                model.add_con(f"bal_p[{b.id},{p},{t}]", terms_p, EQ, 0.0)
                model.add_con(f"bal_q[{b.id},{p},{t}]", terms_q, EQ, 0.0)

    # line status defaults, flow gating, voltage physics
    for k, ln in sc.lines.items():
        is_damaged = k in damaged
        zb = _zbar(sc, ln)
        for t in range(1, T + 1):
            uvar = v[f"u[{k},{t}]"]
            if not ln.is_switch and not is_damaged:
                model.fix_var(uvar, 1.0)
            if is_damaged and not repairs_possible:
                model.fix_var(uvar, 0.0)
            for p in _phases(ln.phases):
                model.add_con(f"flow_p_hi[{k},{p},{t}]",
                              [(v[f"PK[{k},{p},{t}]"], 1.0),
                               (uvar, -ln.p_max)], LE, 0.0)
                model.add_con(f"flow_p_lo[{k},{p},{t}]",
                              [(v[f"PK[{k},{p},{t}]"], 1.0),
                               (uvar, ln.reverse_p)], GE, 0.0)
                model.add_con(f"flow_q_hi[{k},{p},{t}]",
                              [(v[f"QK[{k},{p},{t}]"], 1.0),
                               (uvar, -ln.q_max)], LE, 0.0)
                model.add_con(f"flow_q_lo[{k},{p},{t}]",
                              [(v[f"QK[{k},{p},{t}]"], 1.0),
                               (uvar, ln.reverse_q)], GE, 0.0)
            if ln.kind in (REGULATOR, BREAKER):
                for p in _phases(ln.phases):
                    terms = [(v[f"U[{ln.to_bus},{p},{t}]"],
                              ln.reg_ratio[p] ** 2),
                             (v[f"U[{ln.from_bus},{p},{t}]"], -1.0),
                             (uvar, bigm.m_volt)]
                    model.add_con(f"reg_hi[{k},{p},{t}]", terms, LE,
                                  bigm.m_volt)
                    terms = [(v[f"U[{ln.to_bus},{p},{t}]"],
                              ln.reg_ratio[p] ** 2),
                             (v[f"U[{ln.from_bus},{p},{t}]"], -1.0),
                             (uvar, -bigm.m_volt)]
                    model.add_con(f"reg_lo[{k},{p},{t}]", terms, GE,
                                  -bigm.m_volt)
            else:
                # the row is scaled by s_base so the impedance coefficients
                # stay well above solver drop tolerances
                for p in _phases(ln.phases):
                    terms = [(v[f"U[{ln.to_bus},{p},{t}]"], sbase),
                             (v[f"U[{ln.from_bus},{p},{t}]"], -sbase)]
                    for q in _phases(ln.phases):
                        terms.append((v[f"PK[{k},{q},{t}]"],
                                      2 * zb[p][q].real))
                        terms.append((v[f"QK[{k},{q},{t}]"],
                                      2 * zb[p][q].imag))
                    big = bigm.m_volt * sbase
                    hi = terms + [(uvar, big)]
                    model.add_con(f"kvl_hi[{k},{p},{t}]", hi, LE, big)
                    lo = terms + [(uvar, -big)]
                    model.add_con(f"kvl_lo[{k},{p},{t}]", lo, GE, -big)
            if is_damaged:
                # damaged span is forced dead until repaired
                for p in range(3):
                    terms = []
                    for bus in (ln.from_bus, ln.to_bus):
                        if sc.buses[bus].phases[p]:
                            terms.append((v[f"U[{bus},{p},{t}]"], 1.0))
                    if terms:
                        model.add_con(f"dead_u[{k},{p},{t}]",
                                      terms + [(uvar, -bigm.m_volt)], LE, 0.0)
                model.add_con(f"dead_x[{k},{t}]",
                              [(uvar, 2.0),
                               (v[f"X[{ln.from_bus},{t}]"], -1.0),
                               (v[f"X[{ln.to_bus},{t}]"], -1.0)], GE, 0.0)
            if ln.is_switch:
                u_prev = ([(v[f"u[{k},{t - 1}]"], 1.0)] if t > 1 else [])
                prev_rhs = 0.0 if t > 1 else float(sc.initial_line_status(k))
                g = v[f"gamma[{k},{t}]"]
                model.add_con(f"sw_on[{k},{t}]",
                              [(g, 1.0), (uvar, -1.0)]
                              + [(i, c) for i, c in u_prev], GE, -prev_rhs)
                model.add_con(f"sw_off[{k},{t}]",
                              [(g, 1.0), (uvar, 1.0)]
                              + [(i, -c) for i, c in u_prev], GE, prev_rhs)

    return v


def _add_radiality(model: MilpModel, sc: Scenario, T: int, loops):
    for li, loop in enumerate(loops):
        for t in range(1, T + 1):
            terms = [(model.var_index(f"u[{k},{t}]"), 1.0)
                     for k in sorted(loop)]
            model.add_con(f"radial[{li},{t}]", terms, LE, len(loop) - 1)


# -- routing / logistics block (Eqs for crews and resources) ----------------


def _add_routing(model: MilpModel, sc: Scenario, T: int, bigm: BigMPolicy,
                 fixings: RouteFixings):
    steps = 1.0 / sc.dt_hours
    v = {}

    def add(name, kind=BINARY, lb=0.0, ub=math.inf):
        v[name] = model.add_var(name, kind, lb, ub)
        return v[name]

    rtypes = sc.resource_types
    depot_ids = list(sc.depots.keys())
    crew_arcs = {}
    crew_nodes = {}
    for crew in sc.crews:
        nodes, arcs = _crew_arcs(sc, crew)
        crew_nodes[crew.id] = nodes
        crew_arcs[crew.id] = arcs
        allowed = fixings.allowed_nodes.get(crew.id)
        for (m, n) in arcs:
            idx = add(f"x[{m},{n},{crew.id}]")
            if allowed is not None:
                blocked = ((m not in allowed and m not in sc.depots)
                           or (n not in allowed and n not in sc.depots))
                if blocked:
                    model.fix_var(idx, 0.0)
        for m in nodes:
            idx = add(f"alpha[{m},{crew.id}]", "continuous", 0.0, bigm.m_time)
            if m == crew.start:
                model.fix_var(idx, 0.0)
        if crew.kind == LINE_CREW:
            for m in nodes:
                for r in rtypes:
                    add(f"E[{crew.id},{m},{r}]", "continuous", 0.0, bigm.m_res)
            for w in depot_ids:
                for r in rtypes:
                    add(f"ResC[{crew.id},{w},{r}]", "continuous", 0.0,
                        bigm.m_res)
    for (m, n, c), val in fixings.fixed_arcs.items():
        name = f"x[{m},{n},{c}]"
        if not model.has_var(name):
            if val == 1:
                raise BuildError(f"cannot fix absent arc ({m},{n},{c}) to 1")
            continue
        idx = model.var_index(name)
        if model.var_lb[idx] > val or model.var_ub[idx] < val:
            raise BuildError(f"contradictory fixing for arc ({m},{n},{c})")
        model.fix_var(idx, float(val))

    for m in sc.damaged_ids:
        for t in range(1, T + 1):
            add(f"f[{m},{t}]")

    for crew in sc.crews:
        c = crew.id
        nodes = crew_nodes[c]
        arcs = set(crew_arcs[c])
        # leave the start, return to the end
        model.add_con(
            f"route_start[{c}]",
            [(v[f"x[{crew.start},{n},{c}]"], 1.0)
             for n in nodes if (crew.start, n) in arcs], EQ, 1.0)
        model.add_con(
            f"route_end[{c}]",
            [(v[f"x[{m},{crew.end},{c}]"], 1.0)
             for m in nodes if (m, crew.end) in arcs], EQ, 1.0)
        for m in nodes:
            if m in (crew.start, crew.end):
                continue
            terms = [(v[f"x[{m},{n},{c}]"], 1.0)
                     for n in nodes if (m, n) in arcs]
            terms += [(v[f"x[{n},{m},{c}]"], -1.0)
                      for n in nodes if (n, m) in arcs]
            model.add_con(f"route_flow[{m},{c}]", terms, EQ, 0.0)
        # arrival-time chaining
        for (m, n) in arcs:
            if m == crew.end or n == crew.start or m == n:
                continue
            tmc = _service_steps(sc, crew, m) * 1.0
            tr = sc.travel.time(m, n) * steps
            model.add_con(
                f"arrive[{m},{n},{c}]",
                [(v[f"alpha[{n},{c}]"], 1.0), (v[f"alpha[{m},{c}]"], -1.0),
                 (v[f"x[{m},{n},{c}]"], -bigm.m_time)],
                GE, tmc + tr - bigm.m_time)
        for m in nodes:
            if m in (crew.start, crew.end):
                continue
            terms = [(v[f"alpha[{m},{c}]"], 1.0)]
            terms += [(v[f"x[{n},{m},{c}]"], -bigm.m_time)
                      for n in nodes if (n, m) in arcs]
            model.add_con(f"visit_time[{m},{c}]", terms, LE, 0.0)

    # every damage repaired by exactly one line crew, cleared by one tree crew
    for m in sc.damaged_ids:
        terms = []
        for crew in sc.line_crews:
            terms += [(v[f"x[{n},{m},{crew.id}]"], 1.0)
                      for n in crew_nodes[crew.id]
                      if (n, m) in set(crew_arcs[crew.id])]
        model.add_con(f"repair_once[{m}]", terms, EQ, 1.0)
    for m in sc.tree_blocked_ids:
        terms = []
        for crew in sc.tree_crews:
            terms += [(v[f"x[{n},{m},{crew.id}]"], 1.0)
                      for n in crew_nodes[crew.id]
                      if (n, m) in set(crew_arcs[crew.id])]
        model.add_con(f"clear_once[{m}]", terms, EQ, 1.0)

    # obstacles are cleared before the repair starts
    for m in sc.tree_blocked_ids:
        terms = [(v[f"alpha[{m},{c.id}]"], 1.0) for c in sc.line_crews]
        for crew in sc.tree_crews:
            terms.append((v[f"alpha[{m},{crew.id}]"], -1.0))
            clear = sc.damage_record(m).tree_time(crew.id) * steps
            terms += [(v[f"x[{m},{n},{crew.id}]"], -clear)
                      for n in crew_nodes[crew.id]
                      if (m, n) in set(crew_arcs[crew.id])]
        model.add_con(f"clear_first[{m}]", terms, GE, 0.0)

    # resource logistics (line crews only)
    for w in depot_ids:
        stock = sc.depots[w].stock
        for r in rtypes:
            terms = [(v[f"ResC[{c.id},{w},{r}]"], 1.0) for c in sc.line_crews]
            terms += [(v[f"ResC[{c.id},{w},{r}]"], 1.0)
                      for c in sc.line_crews if c.start == w]
            model.add_con(f"stock[{w},{r}]", terms, LE, stock.get(r, 0.0))
    for crew in sc.line_crews:
        c = crew.id
        nodes = crew_nodes[c]
        arcs = set(crew_arcs[c])
        for m in nodes:
            terms = [(v[f"E[{c},{m},{r}]"], sc.carry_weight(r))
                     for r in rtypes]
            if terms:
                model.add_con(f"carry_cap[{c},{m}]", terms, LE, crew.capacity)
        for m in sc.damaged_ids:
            rec = sc.damage_record(m)
            for r in rtypes:
                need = rec.resources.get(r, 0.0)
                terms = [(v[f"E[{c},{m},{r}]"], 1.0)]
                terms += [(v[f"x[{n},{m},{c}]"], -need)
                          for n in nodes if (n, m) in arcs]
                model.add_con(f"res_enough[{c},{m},{r}]", terms, GE, 0.0)
        for (m, n) in arcs:
            if n == crew.start or m == n:
                continue
            xvar = v[f"x[{m},{n},{c}]"]
            if m == crew.start:
                if n == crew.start:
                    continue
                for r in rtypes:
                    terms = [(v[f"ResC[{c},{m},{r}]"], 1.0),
                             (v[f"E[{c},{n},{r}]"], -1.0)]
                    model.add_con(f"res_load[{c},{n},{r}]",
                                  terms + [(xvar, bigm.m_res)], LE, bigm.m_res)
                    model.add_con(f"res_load_lo[{c},{n},{r}]",
                                  terms + [(xvar, -bigm.m_res)], GE,
                                  -bigm.m_res)
            elif m in sc.depots:
                if n == crew.end:
                    continue
                for r in rtypes:
                    terms = [(v[f"E[{c},{m},{r}]"], 1.0),
                             (v[f"ResC[{c},{m},{r}]"], 1.0),
                             (v[f"E[{c},{n},{r}]"], -1.0)]
                    model.add_con(f"res_pickup[{c},{m},{n},{r}]",
                                  terms + [(xvar, bigm.m_res)], LE, bigm.m_res)
                    model.add_con(f"res_pickup_lo[{c},{m},{n},{r}]",
                                  terms + [(xvar, -bigm.m_res)], GE,
                                  -bigm.m_res)
            else:
                rec = sc.damage_record(m)
                for r in rtypes:
                    need = rec.resources.get(r, 0.0)
                    terms = [(v[f"E[{c},{m},{r}]"], 1.0),
                             (v[f"E[{c},{n},{r}]"], -1.0)]
                    model.add_con(f"res_use[{c},{m},{n},{r}]",
                                  terms + [(xvar, bigm.m_res)], LE,
                                  bigm.m_res + need)
                    model.add_con(f"res_use_lo[{c},{m},{n},{r}]",
                                  terms + [(xvar, -bigm.m_res)], GE,
                                  need - bigm.m_res)

    # repair-step coupling
    for m in sc.damaged_ids:
        model.add_con(f"repair_step[{m}]",
                      [(v[f"f[{m},{t}]"], 1.0) for t in range(1, T + 1)],
                      EQ, 1.0)
        terms = [(v[f"f[{m},{t}]"], float(t)) for t in range(1, T + 1)]
        for crew in sc.line_crews:
            c = crew.id
            terms.append((v[f"alpha[{m},{c}]"], -1.0))
            tmc = sc.damage_record(m).repair_time(c) * steps
            terms += [(v[f"x[{m},{n},{c}]"], -tmc)
                      for n in crew_nodes[c] if (m, n) in set(crew_arcs[c])]
        model.add_con(f"repair_done[{m}]", terms, GE, 0.0)

    return v


def _service_steps(sc: Scenario, crew, node: str) -> float:
    if node in sc.depots:
        return 0.0
    rec = sc.damage_record(node)
    if crew.kind == LINE_CREW:
        return rec.repair_time(crew.id) / sc.dt_hours
    return rec.tree_time(crew.id) / sc.dt_hours


def _couple(model: MilpModel, sc: Scenario, T: int):
    # a repaired line becomes and stays available
    for m in sc.damaged_ids:
        for t in range(1, T + 1):
            terms = [(model.var_index(f"u[{m},{t}]"), 1.0)]
            terms += [(model.var_index(f"f[{m},{tau}]"), -1.0)
                      for tau in range(1, t + 1)]
            model.add_con(f"avail[{m},{t}]", terms, EQ, 0.0)


def build_dsrrp(sc: Scenario, fixings: RouteFixings | None = None,
                bigm: BigMPolicy | None = None, loops=None,
                horizon: int | None = None,
                include_routing: bool = True) -> MilpModel:
    """Full repair-and-restoration MILP over the scenario's horizon.

    With ``include_routing=False`` (or an empty damage set) only the network
    operation block is built and damaged lines stay out of service.
    """
    fixings = fixings or RouteFixings()
    fixings.validate(sc)
    T = horizon or sc.horizon_steps
    if T < 1:
        raise BuildError("horizon must be at least one step")
    if loops is None:
        loops = enumerate_loops(sc)
    bigm = bigm or BigMPolicy.from_scenario(sc, T)
    if not sc.damage:
        include_routing = False
    if include_routing:
        _check_horizon(sc, T)
    model = MilpModel("dsrrp")
    _add_operation(model, sc, T, bigm, repairs_possible=include_routing)
    _add_radiality(model, sc, T, loops)
    if include_routing:
        _add_routing(model, sc, T, bigm, fixings)
        _couple(model, sc, T)
    return model


def build_priority(sc: Scenario, weights=(10.0, 5.0, 1.0),
                   fixings: RouteFixings | None = None,
                   bigm: BigMPolicy | None = None,
                   horizon: int | None = None) -> MilpModel:
    """Routing-only model minimizing weighted line-crew arrival times."""
    w1, w2, w3 = weights
    if not (w1 > w2 > w3 > 0):
        raise BuildError("priority weights must satisfy w1 > w2 > w3 > 0")
    fixings = fixings or RouteFixings()
    fixings.validate(sc)
    T = horizon or sc.horizon_steps
    _check_horizon(sc, T)
    bigm = bigm or BigMPolicy.from_scenario(sc, T)
    model = MilpModel("priority-routing")
    v = _add_routing(model, sc, T, bigm, fixings)
    l1, l2, l3 = classify_priority_sets(sc)
    for weight, group in ((w1, l1), (w2, l2), (w3, l3)):
        for m in sorted(group):
            for crew in sc.line_crews:
                model.add_obj_term(v[f"alpha[{m},{crew.id}]"], weight)
    return model


def classify_priority_sets(sc: Scenario):
    """Partition damaged lines into critical-path / three-phase / rest.

    A damaged line lands in the first group when it sits on the shortest
    restoration path of a critical bus that has no source (substation or DG)
    left on its island while all damage is out of service.
    """
    sources = set(sc.source_bus_ids())
    damaged = set(sc.damaged_ids)
    healthy_adj: dict[str, list] = {b: [] for b in sc.buses}
    full_adj: dict[str, list] = {b: [] for b in sc.buses}
    for k, ln in sorted(sc.lines.items()):
        full_adj[ln.from_bus].append((ln.to_bus, k))
        full_adj[ln.to_bus].append((ln.from_bus, k))
        if k not in damaged:
            healthy_adj[ln.from_bus].append((ln.to_bus, k))
            healthy_adj[ln.to_bus].append((ln.from_bus, k))
    alive = _bfs_reachable(healthy_adj, sources)
    l1 = set()
    for b in sorted(sc.buses):
        if sc.buses[b].is_critical and b not in alive:
            l1.update(_path_damage(full_adj, sources, b, damaged))
    l2 = {m for m in damaged - l1 if all(sc.lines[m].phases)}
    l3 = damaged - l1 - l2
    return l1, l2, l3


def _bfs_reachable(adj, sources) -> set:
    seen = set(sources)
    stack = sorted(sources)
    while stack:
        node = stack.pop()
        for nbr, _ in adj[node]:
            if nbr not in seen:
                seen.add(nbr)
                stack.append(nbr)
    return seen


def _path_damage(adj, sources, target, damaged) -> set:
    """Damaged lines along a shortest source->target path (BFS, sorted order)."""
    prev = {s: None for s in sorted(sources)}
    queue = sorted(sources)
    while queue and target not in prev:
        nxt = []
        for node in queue:
            for nbr, lid in adj[node]:
                if nbr not in prev:
                    prev[nbr] = (node, lid)
                    nxt.append(nbr)
        queue = nxt
    hits = set()
    node = target
    while node in prev and prev[node] is not None:
        node, lid = prev[node]
        if lid in damaged:
            hits.add(lid)
    return hits


# -- assignment stage -------------------------------------------------------


def build_assignment(sc: Scenario, bigm: BigMPolicy | None = None) -> MilpModel:
    """Distance-based crew assignment with resource capacity and penalties."""
    bigm = bigm or BigMPolicy.from_scenario(sc)
    rtypes = sc.resource_types
    for r in rtypes:
        needed = sum(d.resources.get(r, 0.0) for d in sc.damage)
        stocked = sum(dep.stock.get(r, 0.0) for dep in sc.depots.values())
        if needed > stocked:
            raise BuildError(
                f"resource {r}: total demand {needed} exceeds total depot "
                f"stock {stocked}")
    model = MilpModel("assignment")
    v = {}

    def add(name, kind=BINARY, lb=0.0, ub=math.inf):
        v[name] = model.add_var(name, kind, lb, ub)
        return v[name]

    depot_ids = list(sc.depots.keys())
    dk = sc.damaged_ids
    dt = sc.tree_blocked_ids
    groups = [(crew, dk if crew.kind == LINE_CREW else dt)
              for crew in sc.crews]

    for crew, work in groups:
        c = crew.id
        tag = "AL" if crew.kind == LINE_CREW else "AT"
        for m in work:
            add(f"{tag}[{m},{c}]")
        for m in work:
            for n in work:
                if m != n:
                    add(f"d[{m},{n},{c}]", "continuous", 0.0, bigm.m_dist)
            for w in depot_ids:
                add(f"d[{w},{m},{c}]", "continuous", 0.0, bigm.m_dist)
        if crew.kind == LINE_CREW:
            for w in depot_ids:
                add(f"z[{w},{c}]")
                add(f"pen[{c},{w}]", "continuous", 0.0, math.inf)
                for r in rtypes:
                    add(f"ResC[{c},{w},{r}]", "continuous", 0.0, bigm.m_res)

    # objective: half-weighted pair distances + depot distances + penalties
    npairs = max(len(dk), 1)
    for crew, work in groups:
        c = crew.id
        for m in work:
            for n in work:
                if m != n:
                    model.add_obj_term(v[f"d[{m},{n},{c}]"], 0.5)
            for w in depot_ids:
                model.add_obj_term(v[f"d[{w},{m},{c}]"], 1.0)
        if crew.kind == LINE_CREW:
            for w in depot_ids:
                model.add_obj_term(v[f"pen[{c},{w}]"], float(npairs))

    for m in dk:
        model.add_con(f"assign_line[{m}]",
                      [(v[f"AL[{m},{c.id}]"], 1.0) for c in sc.line_crews],
                      EQ, 1.0)
    for m in dt:
        model.add_con(f"assign_tree[{m}]",
                      [(v[f"AT[{m},{c.id}]"], 1.0) for c in sc.tree_crews],
                      EQ, 1.0)

    for crew in sc.line_crews:
        c = crew.id
        for w in depot_ids:
            delta = 1.0 if crew.depot == w else 0.0
            terms = [(v[f"ResC[{c},{w},{r}]"], sc.carry_weight(r))
                     for r in rtypes]
            terms.append((v[f"z[{w},{c}]"], -crew.capacity))
            model.add_con(f"cap[{w},{c}]", terms, LE, delta * crew.capacity)
            model.add_con(f"return_home[{w},{c}]",
                          [(v[f"z[{w},{c}]"], 1.0)], LE, delta)
            for m in dk:
                model.add_con(f"penalty[{w},{m},{c}]",
                              [(v[f"pen[{c},{w}]"], 1.0),
                               (v[f"d[{w},{m},{c}]"], -2.0),
                               (v[f"z[{w},{c}]"], -bigm.m_dist)],
                              GE, -bigm.m_dist)
        for r in rtypes:
            terms = [(v[f"ResC[{c},{w},{r}]"], 1.0) for w in depot_ids]
            for m in dk:
                need = sc.damage_record(m).resources.get(r, 0.0)
                terms.append((v[f"AL[{m},{c}]"], -need))
            model.add_con(f"res_cover[{c},{r}]", terms, GE, 0.0)
    for w in depot_ids:
        for r in rtypes:
            model.add_con(f"depot_stock[{w},{r}]",
                          [(v[f"ResC[{c.id},{w},{r}]"], 1.0)
                           for c in sc.line_crews],
                          LE, sc.depots[w].stock.get(r, 0.0))

    for crew, work in groups:
        c = crew.id
        tag = "AL" if crew.kind == LINE_CREW else "AT"
        for m in work:
            for n in work:
                if m == n:
                    continue
                dist = sc.travel.dist(m, n)
                model.add_con(f"pair_dist[{m},{n},{c}]",
                              [(v[f"d[{m},{n},{c}]"], 1.0),
                               (v[f"{tag}[{m},{c}]"], -dist),
                               (v[f"{tag}[{n},{c}]"], -dist)],
                              GE, -dist)
            for w in depot_ids:
                delta = 1.0 if crew.depot == w else 0.0
                dist = sc.travel.dist(w, m)
                model.add_con(f"depot_dist[{w},{m},{c}]",
                              [(v[f"d[{w},{m},{c}]"], 1.0),
                               (v[f"{tag}[{m},{c}]"], -dist)],
                              GE, dist * (delta - 1.0))
    return model


# -- route restriction operators (used by the search) -----------------------


def _copy_model(model: MilpModel) -> MilpModel:
    clone = MilpModel(model.name)
    clone.var_names = list(model.var_names)
    clone.var_kinds = list(model.var_kinds)
    clone.var_lb = list(model.var_lb)
    clone.var_ub = list(model.var_ub)
    clone._var_index = dict(model._var_index)
    clone.con_names = list(model.con_names)
    clone.con_terms = list(model.con_terms)
    clone.con_senses = list(model.con_senses)
    clone.con_rhs = list(model.con_rhs)
    clone._con_names_set = set(model._con_names_set)
    clone.obj = dict(model.obj)
    clone.obj_constant = model.obj_constant
    clone.warm_start = dict(model.warm_start)
    return clone


def _arc_vars(model: MilpModel):
    for i, name in enumerate(model.var_names):
        if name.startswith("x["):
            m, n, c = name[2:-1].split(",")
            yield i, m, n, c


def restrict_to_assignment(model: MilpModel, sc: Scenario,
                           assignment: dict) -> MilpModel:
    """Limit each crew to its assigned damages (depots always allowed)."""
    clone = _copy_model(model)
    for i, m, n, c in _arc_vars(clone):
        allowed = assignment.get(c)
        if allowed is None:
            continue
        blocked = ((m not in allowed and m not in sc.depots)
                   or (n not in allowed and n not in sc.depots))
        if blocked:
            if clone.var_lb[i] > 0.5:
                raise BuildError(f"contradictory fixing: arc {clone.var_names[i]} "
                                 f"pinned to 1 but outside the assignment")
            clone.fix_var(i, 0.0)
    return clone


def fix_route_subset(model: MilpModel, sc: Scenario, incumbent: dict,
                     kept: set) -> MilpModel:
    """Pin all arcs whose endpoints both lie outside `kept` to the incumbent.

    `incumbent` maps variable names to values (the stored best point); it is
    also installed as the warm-start hint.
    """
    clone = _copy_model(model)
    for i, m, n, c in _arc_vars(clone):
        if m in kept or n in kept:
            continue
        val = round(incumbent.get(clone.var_names[i], 0.0))
        if clone.var_lb[i] > val or clone.var_ub[i] < val:
            raise BuildError(f"contradictory fixing for {clone.var_names[i]}")
        clone.fix_var(i, float(val))
    clone.warm_start = dict(incumbent)
    return clone
