"""Command-line front end: batch solves, the baseline, episode simulation,
LP export, and the HTTP service."""

from __future__ import annotations

import json
import pathlib

import click

from .builder import build_dsrrp
from .engine import (IncumbentStore, SearchParams, format_event,
                     priority_baseline, run_pipeline)
from .fieldsim import build_timeline, extract_routes, run_episode, timeline_csv
from .milp import export_lp, export_solution
from .netmodel import Scenario, parse_scenario
from .solver import SolveParams, adapter_from_spec


def _load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(json.load(fh))


def _common(fn):
    fn = click.option("--scenario", "scenario_path", required=True,
                      type=click.Path(exists=True, dir_okay=False),
                      help="Scenario JSON file.")(fn)
    fn = click.option("--time-limit", default=60.0, show_default=True,
                      help="Per-solve time limit in seconds.")(fn)
    fn = click.option("--seed", default=0, show_default=True,
                      help="Search RNG seed.")(fn)
    fn = click.option("--solver", default="embedded", show_default=True,
                      help="embedded, external, or external:CMD with "
                           "{lp}/{sol}/{time_limit} placeholders.")(fn)
    fn = click.option("--out", "out_dir", default=".", show_default=True,
                      type=click.Path(file_okay=False),
                      help="Output directory.")(fn)
    return fn


def _objective_csv(events) -> str:
    lines = ["iteration,sample_size,stall,objective,wall"]
    for e in events:
        if "iteration" not in e:
            continue
        lines.append(f"{e['iteration']},{e['sample_size']},{e['stall']},"
                     f"{e['objective']:.6f},{e['wall']:.4f}")
    return "\n".join(lines) + "\n"


def _load_served_csv(sc: Scenario, values: dict) -> str:
    lines = ["step,pct_served,kw_served"]
    for t in range(1, sc.horizon_steps + 1):
        kw = total = 0.0
        for b in sc.buses.values():
            for p in range(3):
                if not b.phases[p]:
                    continue
                d = sc.demand_p(b.id, p, t)
                total += d
                if values.get(f"y[{b.id},{t}]", 0.0) > 0.5:
                    kw += d
        pct = 100.0 * kw / total if total else 100.0
        lines.append(f"{t},{pct:.2f},{kw:.3f}")
    return "\n".join(lines) + "\n"


def _write_result(out_dir: str, sc: Scenario, incumbent, events):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    values = incumbent.assignment.values
    (out / "solution.sol").write_text(
        export_solution(incumbent.assignment), encoding="utf-8")
    (out / "objective_trace.csv").write_text(
        _objective_csv(events), encoding="utf-8")
    (out / "load_served.csv").write_text(
        _load_served_csv(sc, values), encoding="utf-8")
    (out / "timeline.csv").write_text(
        timeline_csv(build_timeline(sc, values)), encoding="utf-8")
    (out / "events.log").write_text(
        "".join(format_event(e) + "\n" for e in events), encoding="utf-8")
    summary = {"objective": incumbent.objective,
               "iteration": incumbent.iteration,
               "routes": extract_routes(sc, values)}
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    click.echo(f"objective {incumbent.objective:.6f}  ->  {out}")


@click.group()
def main():
    """Co-optimized repair crew routing and feeder restoration."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(), host=host, port=port)


@main.command()
@_common
def solve(scenario_path, time_limit, seed, solver, out_dir):
    """Two-stage solve plus neighborhood search."""
    sc = _load_scenario(scenario_path)
    store = IncumbentStore()
    inc = run_pipeline(sc, store,
                       SearchParams(seed=seed, iter_time_limit=time_limit),
                       SolveParams(time_limit=time_limit),
                       adapter_from_spec(solver))
    _write_result(out_dir, sc, inc, store.events())


@main.command()
@_common
def baseline(scenario_path, time_limit, seed, solver, out_dir):
    """Weighted-arrival-time routing, then operations with the route fixed."""
    sc = _load_scenario(scenario_path)
    inc = priority_baseline(sc, params=SolveParams(time_limit=time_limit),
                            adapter=adapter_from_spec(solver))
    events = [{"iteration": 0, "sample_size": 0, "stall": 0,
               "objective": inc.objective, "wall": inc.wall_time}]
    _write_result(out_dir, sc, inc, events)


@main.command()
@_common
def simulate(scenario_path, time_limit, seed, solver, out_dir):
    """Dispatch, reveal actual repair times on arrival, re-plan."""
    sc = _load_scenario(scenario_path)
    result = run_episode(sc, seed=seed,
                         search=SearchParams(seed=seed,
                                             iter_time_limit=time_limit),
                         params=SolveParams(time_limit=time_limit),
                         adapter=adapter_from_spec(solver))
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "timeline.csv").write_text(timeline_csv(result.timeline),
                                      encoding="utf-8")
    report = {"objective": result.objective,
              "actual_hours": result.actual_hours,
              "reveals": [{"step": t, "line": m} for t, m in result.reveals]}
    (out / "episode.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(f"objective {result.objective:.6f}  ->  {out}")


@main.command("export-lp")
@_common
def export_lp_cmd(scenario_path, time_limit, seed, solver, out_dir):
    """Write the full model in LP form."""
    sc = _load_scenario(scenario_path)
    model = build_dsrrp(sc)
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "model.lp"
    path.write_text(export_lp(model), encoding="utf-8")
    click.echo(f"{model.num_vars} vars, {model.num_cons} cons  ->  {path}")


if __name__ == "__main__":
    main()
