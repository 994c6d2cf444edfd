"""Field simulation: dispatch the incumbent plan, reveal actual repair times
on crew arrival, and re-optimize with the executed route prefix frozen.

The simulated clock advances from arrival event to arrival event rather than
on a fixed cadence; every reveal triggers one dynamic re-solve.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from .engine import (DispatchState, EngineError, IncumbentStore, SearchParams,
                     dynamic_step, run_pipeline)
from .netmodel import LINE_CREW, Scenario
from .solver import SolveParams, SolverAdapter

MIN_REPAIR_HOURS = 0.25


def perturb_repair_times(sc: Scenario, seed: int,
                         spread: float = 2.0) -> dict:
    """Actual repair hours: estimate plus uniform noise on [-spread, spread],
    floored at a quarter hour."""
    rng = random.Random(seed)
    out = {}
    for d in sc.damage:
        est = max(d.repair_time(c.id) for c in sc.line_crews)
        out[d.line_id] = round(max(MIN_REPAIR_HOURS,
                                   est + rng.uniform(-spread, spread)), 2)
    return out


def extract_routes(sc: Scenario, values: dict) -> dict:
    """Crew id -> ordered node list (start to end) from the arc variables."""
    routes = {}
    for crew in sc.crews:
        arcs = {}
        for name, val in values.items():
            if not name.startswith("x[") or val < 0.5:
                continue
            m, n, c = name[2:-1].split(",")
            if c == crew.id:
                arcs[m] = n
        route = [crew.start]
        seen = {crew.start}
        node = crew.start
        while node in arcs:
            node = arcs.pop(node)
            route.append(node)
            if node in seen and node != crew.end:
                raise EngineError(f"crew {crew.id}: route revisits {node}")
            seen.add(node)
        routes[crew.id] = route
    return routes


def _arrivals(sc: Scenario, values: dict, routes: dict) -> dict:
    """(crew, node) -> arrival time in steps, read off the alpha variables."""
    out = {}
    for crew in sc.crews:
        for node in routes[crew.id][1:]:
            out[(crew.id, node)] = values.get(f"alpha[{node},{crew.id}]", 0.0)
    return out


@dataclass
class EpisodeResult:
    incumbent: object               # final Incumbent
    actual_hours: dict              # damage id -> revealed repair hours
    reveals: list = field(default_factory=list)  # (clock_steps, damage)
    timeline: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.incumbent.objective


def run_episode(sc: Scenario, seed: int = 0,
                search: SearchParams | None = None,
                params: SolveParams | None = None,
                adapter: SolverAdapter | None = None,
                actual_hours: dict | None = None) -> EpisodeResult:
    """Plan, dispatch, reveal actual repair times on arrival, re-plan.

    The actual times default to a seeded perturbation of the estimates. The
    final incumbent is the executed schedule under fully revealed times.
    """
    search = search or SearchParams(seed=seed)
    if actual_hours is None:
        actual_hours = perturb_repair_times(sc, seed)
    # widen the horizon enough that every reveal can still be scheduled
    extra = 0.0
    for d in sc.damage:
        est = max(d.repair_time(c.id) for c in sc.line_crews)
        extra += max(0.0, actual_hours[d.line_id] - est)
    sc = replace(sc, horizon=sc.horizon_steps
                 + math.ceil(extra / sc.dt_hours))
    store = IncumbentStore()
    inc = run_pipeline(sc, store, search, params, adapter)
    revealed: dict[str, float] = {}
    dispatch = DispatchState()
    reveals = []
    current_sc = sc
    while len(revealed) < len(sc.damage):
        values = inc.assignment.values
        routes = extract_routes(current_sc, values)
        arrivals = _arrivals(current_sc, values, routes)
        pending = [(t, node, c) for (c, node), t in arrivals.items()
                   if node in {d.line_id for d in sc.damage}
                   and node not in revealed
                   and _is_line_crew(current_sc, c)]
        if not pending:
            raise EngineError("no pending arrivals but damages unrevealed")
        pending.sort(key=lambda x: (x[0], x[1], x[2]))
        t_star, node, crew = pending[0]
        revealed[node] = actual_hours[node]
        reveals.append((t_star, node))
        dispatch = _freeze_prefix(current_sc, dispatch, routes, arrivals,
                                  t_star)
        current_sc = sc.with_repair_times(revealed)
        inc = dynamic_step(sc, dispatch, revealed, store, search, params,
                           adapter)
    result = EpisodeResult(incumbent=inc, actual_hours=dict(actual_hours),
                           reveals=reveals)
    result.timeline = build_timeline(current_sc, inc.assignment.values)
    return result


def _is_line_crew(sc: Scenario, crew_id: str) -> bool:
    for c in sc.crews:
        if c.id == crew_id:
            return c.kind == LINE_CREW
    return False


def _freeze_prefix(sc: Scenario, dispatch: DispatchState, routes: dict,
                   arrivals: dict, t_star: float) -> DispatchState:
    """Freeze every arc whose traversal has begun by t_star (inclusive of the
    arc arriving exactly then)."""
    steps = 1.0 / sc.dt_hours
    arcs = dict(dispatch.frozen_arcs)
    for crew in sc.crews:
        route = routes[crew.id]
        for m, n in zip(route, route[1:]):
            if m == crew.start:
                departed = 0.0
            else:
                rec = None
                if m in {d.line_id for d in sc.damage}:
                    rec = sc.damage_record(m)
                service = 0.0
                if rec is not None:
                    service = (rec.repair_time(crew.id)
                               if crew.kind == LINE_CREW
                               else rec.tree_time(crew.id)) * steps
                departed = arrivals[(crew.id, m)] + service
            arrived = arrivals.get((crew.id, n), float("inf"))
            if departed <= t_star + 1e-9 or arrived <= t_star + 1e-9:
                arcs[(m, n, crew.id)] = 1
            else:
                break  # later arcs of this route stay re-optimizable
    return DispatchState(frozen_arcs=arcs, completed=dispatch.completed,
                         clock_steps=t_star)


def build_timeline(sc: Scenario, values: dict) -> list:
    """Per-step record of repairs, switching, and percent of load served."""
    T = sc.horizon_steps

    def served_pct(t):
        total = 0.0
        on = 0.0
        for b in sc.buses.values():
            for p in range(3):
                if not b.phases[p]:
                    continue
                d = sc.demand_p(b.id, p, t)
                total += d
                if values.get(f"y[{b.id},{t}]", 0.0) > 0.5:
                    on += d
        return 100.0 * on / total if total else 100.0

    rows = []
    prev_u = {k: sc.initial_line_status(k) for k in sc.lines}
    for t in range(1, T + 1):
        repaired = sorted(m for m in sc.damaged_ids
                          if values.get(f"f[{m},{t}]", 0.0) > 0.5)
        opened, closed = [], []
        for k in sc.switch_ids:
            now = 1 if values.get(f"u[{k},{t}]", 0.0) > 0.5 else 0
            if now != prev_u[k]:
                (closed if now else opened).append(k)
            prev_u[k] = now
        for m in sc.damaged_ids:
            prev_u[m] = 1 if values.get(f"u[{m},{t}]", 0.0) > 0.5 else 0
        rows.append({"step": t, "repaired": repaired,
                     "opened": sorted(opened), "closed": sorted(closed),
                     "pct_served": round(served_pct(t), 2)})
    return rows


def timeline_csv(rows: list) -> str:
    out = ["step,repaired,opened,closed,pct_served"]
    for r in rows:
        out.append(",".join([
            str(r["step"]),
            ";".join(r["repaired"]),
            ";".join(r["opened"]),
            ";".join(r["closed"]),
            f"{r['pct_served']:.2f}",
        ]))
    return "\n".join(out) + "\n"
