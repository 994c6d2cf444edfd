"""Two-stage solve and neighborhood search over crew routes.

The flow: assign damages to crews (small MILP), solve the restricted
restoration problem for a first incumbent, then repeatedly re-optimize a
random subset of route nodes while the rest of the incumbent's arcs stay
pinned. A dynamic step re-runs the search after repair-time updates with the
already-dispatched arc prefix frozen.
"""

from __future__ import annotations

import math
import random
import threading
import time
from dataclasses import dataclass, field, replace

from .builder import (RouteFixings, _copy_model, build_assignment,
                      build_dsrrp, build_priority, fix_route_subset,
                      restrict_to_assignment)
from .milp import Assignment
from .netmodel import LINE_CREW, Scenario
from .solver import SolveParams, SolverAdapter, SolverError, solve

OBJ_TOL = 1e-6


class EngineError(RuntimeError):
    pass


@dataclass
class SearchParams:
    sample_size: int = 3        # initial neighborhood size
    grow_after: int = 3         # non-improving iterations before growing
    stop_after: int = 3         # further non-improving iterations before stop
    seed: int = 0
    iter_time_limit: float = 60.0   # per re-optimization solve, seconds
    max_iterations: int = 1000
    clock: object = time.monotonic  # injectable for reproducible logs

    def __post_init__(self):
        if self.sample_size < 1:
            raise ValueError("sample size must be at least 1")
        if self.grow_after < 1 or self.stop_after < 1:
            raise ValueError("stall thresholds must be at least 1")


@dataclass(frozen=True)
class Incumbent:
    assignment: Assignment
    objective: float
    iteration: int
    wall_time: float


class IncumbentStore:
    """Thread-safe best-solution holder with strict-improvement updates."""

    def __init__(self):
        self._lock = threading.Lock()
        self._best: Incumbent | None = None
        self._events: list[dict] = []

    def offer(self, assignment: Assignment, iteration: int,
              wall_time: float) -> bool:
        """Install the candidate if it strictly improves; returns True if so."""
        with self._lock:
            if (self._best is not None
                    and assignment.objective >= self._best.objective - OBJ_TOL):
                return False
            self._best = Incumbent(assignment=assignment,
                                   objective=assignment.objective,
                                   iteration=iteration, wall_time=wall_time)
            return True

    def best(self) -> Incumbent | None:
        with self._lock:
            return self._best

    def reset(self):
        with self._lock:
            self._best = None

    def log(self, **record):
        with self._lock:
            self._events.append(dict(record))

    def events(self) -> list[dict]:
        with self._lock:
            return list(self._events)


@dataclass(frozen=True)
class DispatchState:
    """Route decisions already executed in the field and therefore frozen."""

    frozen_arcs: dict = field(default_factory=dict)  # (m, n, crew) -> 1
    completed: tuple = ()       # damage ids already repaired
    clock_steps: float = 0.0

    def extend(self, arc) -> "DispatchState":
        arcs = dict(self.frozen_arcs)
        arcs[arc] = 1
        return replace(self, frozen_arcs=arcs)


def format_event(record: dict) -> str:
    parts = []
    for key, val in record.items():
        if isinstance(val, float):
            parts.append(f"{key}={val:.4f}")
        else:
            parts.append(f"{key}={val}")
    return " ".join(parts)


def assign_crews(sc: Scenario, params: SolveParams | None = None,
                 adapter: SolverAdapter | None = None) -> dict:
    """Solve the assignment stage; crew id -> set of assigned damage nodes."""
    model = build_assignment(sc)
    res = solve(model, params or SolveParams(time_limit=120.0), adapter)
    if res.status not in ("optimal", "feasible"):
        raise EngineError(f"assignment stage failed: {res.status}")
    out: dict[str, set] = {c.id: set() for c in sc.crews}
    for name, val in res.values.items():
        if val > 0.5 and (name.startswith("AL[") or name.startswith("AT[")):
            m, c = name[3:-1].split(",")
            out[c].add(m)
    return out


def initial_solution(sc: Scenario, assignment: dict,
                     params: SolveParams | None = None,
                     adapter: SolverAdapter | None = None,
                     fixings: RouteFixings | None = None):
    """Solve the assignment-restricted problem; returns (model, result).

    The returned model is the unrestricted base model, reused by the
    neighborhood search for arc pinning.
    """
    base = build_dsrrp(sc, fixings=fixings)
    restricted = restrict_to_assignment(base, sc, assignment)
    res = solve(restricted, params or SolveParams(), adapter)
    if res.status not in ("optimal", "feasible"):
        raise EngineError(
            f"assignment-restricted solve failed: {res.status}")
    return base, res


def neighborhood_search(sc: Scenario, store: IncumbentStore,
                        base_model=None,
                        search: SearchParams | None = None,
                        adapter: SolverAdapter | None = None,
                        stop=None) -> Incumbent:
    """Improve the stored incumbent by re-optimizing sampled route subsets.

    Sampling is uniform without replacement over damage nodes plus depots.
    The sample grows by one after `grow_after` consecutive non-improving
    iterations and the search stops after `grow_after + stop_after` of them,
    or when the sample covers every node.
    """
    search = search or SearchParams()
    if store.best() is None:
        raise EngineError("neighborhood search needs an initial incumbent")
    if base_model is None:
        base_model = build_dsrrp(sc)
    rng = random.Random(search.seed)
    nodes = sorted(set(sc.damaged_ids) | set(sc.depots))
    ss = min(search.sample_size, len(nodes))
    count = 0
    t0 = search.clock()
    iteration = 0
    while iteration < search.max_iterations:
        if stop is not None and stop():
            break
        iteration += 1
        sample = set(rng.sample(nodes, ss))
        best = store.best()
        model = fix_route_subset(base_model, sc, best.assignment.values,
                                 sample)
        try:
            res = solve(model, SolveParams(time_limit=search.iter_time_limit),
                        adapter)
        except SolverError:
            res = Assignment(values={}, objective=math.inf, status="error")
        improved = (res.status in ("optimal", "feasible")
                    and store.offer(res, iteration, search.clock() - t0))
        if improved:
            count = 0
        else:
            count += 1
            if count == search.grow_after and ss < len(nodes):
                ss += 1
        store.log(iteration=iteration, sample_size=ss, stall=count,
                  objective=store.best().objective,
                  wall=search.clock() - t0)
        if count >= search.grow_after + search.stop_after or ss >= len(nodes):
            break
    return store.best()


def run_pipeline(sc: Scenario, store: IncumbentStore | None = None,
                 search: SearchParams | None = None,
                 params: SolveParams | None = None,
                 adapter: SolverAdapter | None = None,
                 fixings: RouteFixings | None = None,
                 stop=None) -> Incumbent:
    """Assignment stage, restricted solve, then neighborhood search."""
    store = store if store is not None else IncumbentStore()
    search = search or SearchParams()
    t0 = search.clock()
    assignment = assign_crews(sc, params, adapter)
    base, first = initial_solution(sc, assignment, params, adapter, fixings)
    store.offer(first, 0, search.clock() - t0)
    store.log(iteration=0, sample_size=0, stall=0,
              objective=first.objective, wall=search.clock() - t0)
    if sc.damage:
        return neighborhood_search(sc, store, base, search, adapter, stop)
    return store.best()


def dynamic_step(sc: Scenario, dispatch: DispatchState,
                 actual_hours: dict, store: IncumbentStore,
                 search: SearchParams | None = None,
                 params: SolveParams | None = None,
                 adapter: SolverAdapter | None = None) -> Incumbent:
    """Re-optimize after repair-time updates, keeping dispatched arcs fixed.

    `actual_hours` maps damage ids to revealed repair durations. The store is
    reset because objectives under different repair times are not comparable.
    """
    sc2 = sc.with_repair_times(actual_hours)
    fixings = RouteFixings(fixed_arcs=dict(dispatch.frozen_arcs))
    prev = store.best()
    store.reset()
    base = build_dsrrp(sc2, fixings=fixings)
    warm = dict(prev.assignment.values) if prev is not None else {}
    solve_params = params or SolveParams()
    search = search or SearchParams()
    t0 = search.clock()
    model = base
    if warm:
        model = _with_warm_start(base, warm)
    res = solve(model, solve_params, adapter)
    if res.status not in ("optimal", "feasible"):
        raise EngineError(f"dynamic re-solve failed: {res.status}")
    store.offer(res, 0, search.clock() - t0)
    if sc2.damage:
        return neighborhood_search(sc2, store, base, search, adapter)
    return store.best()


def _with_warm_start(model, values):
    clone = _copy_model(model)
    clone.warm_start = dict(values)
    return clone


def priority_baseline(sc: Scenario, weights=(10.0, 5.0, 1.0),
                      params: SolveParams | None = None,
                      adapter: SolverAdapter | None = None) -> Incumbent:
    """Route by weighted arrival times, then solve operations with the route
    fixed."""
    params = params or SolveParams()
    t0 = time.monotonic()
    pm = build_priority(sc, weights=weights)
    route = solve(pm, params, adapter)
    if route.status not in ("optimal", "feasible"):
        raise EngineError(f"priority routing failed: {route.status}")
    fixed = {}
    for name in pm.var_names:
        if name.startswith("x["):
            m, n, c = name[2:-1].split(",")
            fixed[(m, n, c)] = int(round(route.value(name)))
    full = build_dsrrp(sc, fixings=RouteFixings(fixed_arcs=fixed))
    res = solve(full, params, adapter)
    if res.status not in ("optimal", "feasible"):
        raise EngineError(f"priority operation solve failed: {res.status}")
    return Incumbent(assignment=res, objective=res.objective, iteration=0,
                     wall_time=time.monotonic() - t0)
