"""HTTP service around the restoration engine.

Scenario upload, run control, incumbent/timeline/metrics queries, and
field-update injection. One background search session per run; updates queue
up and are applied at iteration boundaries so the search loop semantics stay
intact.
"""

from __future__ import annotations

import math
import threading
from dataclasses import replace

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .engine import (DispatchState, IncumbentStore, SearchParams,
                     assign_crews, dynamic_step, format_event,
                     initial_solution, neighborhood_search)
from .fieldsim import build_timeline, extract_routes, timeline_csv
from .netmodel import Scenario, ScenarioError, parse_scenario
from .solver import SolveParams, adapter_from_spec

PHASES = ("assigning", "initial", "searching", "dispatched", "done", "failed")


class RunRequest(BaseModel):
    scenario: str
    seed: int = 0
    time_limit: float = Field(default=60.0, gt=0)
    solver: str = "embedded"
    sample_size: int = Field(default=3, ge=1)
    grow_after: int = Field(default=3, ge=1)
    stop_after: int = Field(default=3, ge=1)
    max_iterations: int = Field(default=1000, ge=1)


class UpdateRequest(BaseModel):
    line: str
    hours: float = Field(gt=0)


class DispatchAck(BaseModel):
    crew: str = ""
    completed: list[str] = Field(default_factory=list)


class Run:
    """State of one run: scenario, search session, queued field updates."""

    def __init__(self, run_id: str, scenario_id: str, sc: Scenario,
                 req: RunRequest):
        self.id = run_id
        self.scenario_id = scenario_id
        self.scenario = sc
        self.phase = "assigning"
        self.error: str | None = None
        self.store = IncumbentStore()
        self.search = SearchParams(sample_size=req.sample_size,
                                   grow_after=req.grow_after,
                                   stop_after=req.stop_after,
                                   seed=req.seed,
                                   iter_time_limit=req.time_limit,
                                   max_iterations=req.max_iterations)
        self.params = SolveParams(time_limit=req.time_limit)
        self.adapter = adapter_from_spec(req.solver)
        self.lock = threading.Lock()
        self.pending: list[tuple[str, float]] = []
        self.applied: set[tuple[str, float]] = set()
        self.revealed: dict[str, float] = {}
        self.completed: set[str] = set()
        self.dispatch = DispatchState()
        self.acked = False
        self.thread: threading.Thread | None = None
        self._active = False        # a session thread owns the queue

    # -- scenario under the currently revealed repair times ----------------

    def current_scenario(self) -> Scenario:
        with self.lock:
            revealed = dict(self.revealed)
        sc = self.scenario
        if not revealed:
            return sc
        extra = 0.0
        for d in sc.damage:
            if d.line_id in revealed:
                est = max(d.repair_time(c.id) for c in sc.line_crews)
                extra += max(0.0, revealed[d.line_id] - est)
        sc = replace(sc, horizon=sc.horizon_steps
                     + int(math.ceil(extra / sc.dt_hours)))
        return sc.with_repair_times(revealed)

    def has_pending(self) -> bool:
        with self.lock:
            return bool(self.pending)

    def _final_phase(self) -> str:
        return "dispatched" if self.acked else "done"

    # -- background session ------------------------------------------------

    def start(self):
        with self.lock:
            self._active = True
        self.thread = threading.Thread(target=self._initial_session,
                                       daemon=True)
        self.thread.start()

    def _initial_session(self):
        sc = self.scenario
        try:
            self.phase = "assigning"
            assignment = assign_crews(sc, self.params, self.adapter)
            self.phase = "initial"
            base, first = initial_solution(sc, assignment, self.params,
                                           self.adapter)
            self.store.offer(first, 0, 0.0)
            self.store.log(iteration=0, sample_size=0, stall=0,
                           objective=first.objective, wall=0.0)
            self.phase = "searching"
            if sc.damage:
                neighborhood_search(sc, self.store, base, self.search,
                                    self.adapter, stop=self.has_pending)
            self._drain_and_finish()
        except Exception as exc:           # surface anything to get_status
            self.error = str(exc)
            self.phase = "failed"
            with self.lock:
                self._active = False

    def _update_session(self):
        try:
            self.phase = "searching"
            self._drain_and_finish()
        except Exception as exc:
            self.error = str(exc)
            self.phase = "failed"
            with self.lock:
                self._active = False

    def _drain_and_finish(self):
        while True:
            with self.lock:
                if not self.pending:
                    self.phase = self._final_phase()
                    self._active = False
                    return
                batch, self.pending = self.pending, []
                for line, hours in batch:
                    self.revealed[line] = hours
            for line, hours in batch:
                self.store.log(event="restart", line=line, hours=hours)
            sc2 = self.current_scenario()
            # the repair-time replacement happens inside dynamic_step
            dynamic_step(replace(self.scenario, horizon=sc2.horizon_steps),
                         self.dispatch, dict(self.revealed), self.store,
                         self.search, self.params, self.adapter)

    def enqueue(self, line: str, hours: float) -> str:
        """Queue an update; one session at a time owns the queue."""
        key = (line, hours)
        with self.lock:
            if key in self.applied:
                return "duplicate"
            self.applied.add(key)
            self.pending.append(key)
            need_session = not self._active
            if need_session:
                self._active = True
        if need_session:
            self.thread = threading.Thread(target=self._update_session,
                                           daemon=True)
            self.thread.start()
        return "queued"


def create_app() -> FastAPI:
    app = FastAPI(title="gridmend")
    scenarios: dict[str, Scenario] = {}
    runs: dict[str, Run] = {}
    counters = {"scenario": 0, "run": 0}
    state_lock = threading.Lock()

    def _run(run_id: str) -> Run:
        run = runs.get(run_id)
        if run is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown run: {run_id}")
        return run

    @app.post("/scenario")
    def create_scenario(document: dict):
        try:
            sc = parse_scenario(document)
        except ScenarioError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        with state_lock:
            counters["scenario"] += 1
            sid = f"sc-{counters['scenario']}"
            scenarios[sid] = sc
        return {"id": sid, "buses": len(sc.buses), "lines": len(sc.lines),
                "damages": len(sc.damage)}

    @app.post("/runs")
    def start_run(req: RunRequest):
        sc = scenarios.get(req.scenario)
        if sc is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown scenario: {req.scenario}")
        try:
            adapter_from_spec(req.solver)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        with state_lock:
            counters["run"] += 1
            rid = f"run-{counters['run']}"
            run = Run(rid, req.scenario, sc, req)
            runs[rid] = run
        run.start()
        return {"id": rid, "phase": run.phase}

    @app.get("/runs/{run_id}")
    def get_status(run_id: str):
        run = _run(run_id)
        best = run.store.best()
        return {"id": run.id, "scenario": run.scenario_id,
                "phase": run.phase,
                "objective": None if best is None else best.objective,
                "iterations": len(run.store.events()),
                "pending_updates": len(run.pending),
                "error": run.error}

    @app.get("/runs/{run_id}/incumbent")
    def get_incumbent(run_id: str):
        run = _run(run_id)
        best = run.store.best()
        if best is None:
            raise HTTPException(status_code=404,
                                detail="no incumbent yet")
        sc = run.current_scenario()
        routes = extract_routes(sc, best.assignment.values)
        itineraries = {}
        for crew in sc.crews:
            legs = []
            for node in routes[crew.id][1:]:
                arrive = best.assignment.values.get(
                    f"alpha[{node},{crew.id}]", 0.0)
                legs.append({"node": node, "arrival_step": round(arrive, 4)})
            itineraries[crew.id] = legs
        repairs = []
        for m in sc.damaged_ids:
            for t in range(1, sc.horizon_steps + 1):
                if best.assignment.values.get(f"f[{m},{t}]", 0.0) > 0.5:
                    repairs.append({"line": m, "step": t})
        return {"objective": best.objective, "iteration": best.iteration,
                "wall_time": best.wall_time, "routes": routes,
                "itineraries": itineraries,
                "repairs": sorted(repairs, key=lambda r: (r["step"],
                                                          r["line"]))}

    @app.post("/runs/{run_id}/updates")
    def post_update(run_id: str, update: UpdateRequest):
        run = _run(run_id)
        if update.line not in run.scenario.damaged_ids:
            raise HTTPException(
                status_code=422,
                detail=f"{update.line} is not a damaged line")
        if update.line in run.completed:
            raise HTTPException(
                status_code=409,
                detail=f"{update.line} is already repaired")
        status = run.enqueue(update.line, update.hours)
        return {"status": status, "line": update.line,
                "hours": update.hours}

    @app.post("/runs/{run_id}/dispatch")
    def post_dispatch_ack(run_id: str, ack: DispatchAck):
        run = _run(run_id)
        with run.lock:
            run.acked = True
            run.completed.update(ack.completed)
            done = sorted(run.completed)
        if run.phase == "done":
            run.phase = "dispatched"
        return {"status": "acknowledged", "completed": done}

    @app.get("/runs/{run_id}/timeline")
    def get_timeline(run_id: str):
        run = _run(run_id)
        best = run.store.best()
        if best is None:
            raise HTTPException(status_code=404, detail="no incumbent yet")
        sc = run.current_scenario()
        rows = build_timeline(sc, best.assignment.values)
        return {"rows": rows, "csv": timeline_csv(rows)}

    @app.get("/runs/{run_id}/metrics")
    def get_metrics(run_id: str):
        run = _run(run_id)
        events = run.store.events()
        trace = [e for e in events if "iteration" in e]
        trace_csv = ["iteration,sample_size,stall,objective,wall"]
        for e in trace:
            trace_csv.append(f"{e['iteration']},{e['sample_size']},"
                             f"{e['stall']},{e['objective']:.6f},"
                             f"{e['wall']:.4f}")
        best = run.store.best()
        kwh = None
        restoration_hours = None
        served_csv = ["step,pct_served,kw_served"]
        if best is not None:
            sc = run.current_scenario()
            values = best.assignment.values
            kwh = 0.0
            for t in range(1, sc.horizon_steps + 1):
                kw = 0.0
                total = 0.0
                for b in sc.buses.values():
                    for p in range(3):
                        if not b.phases[p]:
                            continue
                        d = sc.demand_p(b.id, p, t)
                        total += d
                        if values.get(f"y[{b.id},{t}]", 0.0) > 0.5:
                            kw += d
                kwh += kw * sc.dt_hours
                pct = 100.0 * kw / total if total else 100.0
                served_csv.append(f"{t},{pct:.2f},{kw:.3f}")
                if restoration_hours is None and total and kw >= total - 1e-9:
                    restoration_hours = t * sc.dt_hours
        return {"objective": None if best is None else best.objective,
                "kwh_served": kwh,
                "restoration_hours": restoration_hours,
                "objective_trace": trace,
                "objective_csv": "\n".join(trace_csv) + "\n",
                "load_served_csv": "\n".join(served_csv) + "\n",
                "event_log": "\n".join(format_event(e)
                                       for e in events) + "\n"}

    return app


app = create_app()
