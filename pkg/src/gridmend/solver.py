"""MILP solving: embedded branch-and-bound plus a subprocess adapter.

The embedded solver is exact and deterministic, meant for desk-scale models
and for use as a test oracle. Anything bigger goes through an external solver
command speaking the LP/solution file contract.
"""

from __future__ import annotations

import heapq
import math
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .milp import (Assignment, MilpError, MilpModel, evaluate, export_lp,
                   parse_solution)
from .simplex import PreparedLp

INT_TOL = 1e-6
EMBEDDED_VAR_CEILING = 5000


class SolverError(MilpError):
    pass


@dataclass
class SolveParams:
    time_limit: float = 300.0       # seconds
    mip_gap: float = 0.0            # relative gap at which to stop
    warm_start: bool = True
    node_limit: int = 200000
    seed: int = 0

    def __post_init__(self):
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")
        if not (0.0 <= self.mip_gap < 1.0):
            raise ValueError("mip gap must be in [0, 1)")


@dataclass
class SolverAdapter:
    kind: str = "embedded"          # embedded | external
    command: str = ""               # template with {lp} and {sol} placeholders
    workdir: str | None = None

    def __post_init__(self):
        if self.kind == "external":
            if "{lp}" not in self.command or "{sol}" not in self.command:
                raise ValueError("external command template needs {lp} and "
                                 "{sol} placeholders")
        elif self.kind != "embedded":
            raise ValueError(f"unknown adapter kind: {self.kind}")


SCIPY_BACKEND_COMMAND = ("python3 -m gridmend.scipy_backend "
                         "{lp} {sol} {time_limit}")


def adapter_from_spec(spec: str | None) -> SolverAdapter | None:
    """Adapter from a CLI/API string: 'embedded', 'external', or
    'external:CMD' where CMD uses {lp}/{sol}/{time_limit} placeholders."""
    if spec is None or spec == "embedded":
        return None
    if spec == "external":
        return SolverAdapter(kind="external", command=SCIPY_BACKEND_COMMAND)
    if spec.startswith("external:"):
        return SolverAdapter(kind="external", command=spec[len("external:"):])
    raise ValueError(f"unknown solver spec: {spec!r}")


def _model_arrays(model: MilpModel):
    c = np.zeros(model.num_vars)
    for i, coef in model.obj.items():
        c[i] = coef
    lb = np.array(model.var_lb, dtype=float)
    ub = np.array(model.var_ub, dtype=float)
    return c, lb, ub


def _assignment_from_x(model: MilpModel, x, objective, status) -> Assignment:
    values = {}
    bins = set(model.binary_indices())
    for i, name in enumerate(model.var_names):
        v = float(x[i])
        if i in bins and abs(v - round(v)) <= INT_TOL:
            v = float(round(v))
        if abs(v) < 1e-12:
            v = 0.0
        values[name] = v
    return Assignment(values=values, objective=objective, status=status)


def solve_lp_relaxation(model: MilpModel) -> Assignment:
    """Solve the model with all binaries relaxed to [0, 1]."""
    c, lb, ub = _model_arrays(model)
    prep = PreparedLp(c, model.con_terms, model.con_senses, model.con_rhs)
    res = prep.solve(lb, ub)
    if res.status == "optimal":
        return _assignment_from_x(model, res.x,
                                  res.objective + model.obj_constant, "optimal")
    if res.status in ("infeasible", "unbounded"):
        return Assignment(values={}, objective=math.inf, status=res.status)
    raise SolverError(f"LP relaxation failed: {res.status}")


def _warm_start_incumbent(model: MilpModel):
    if not model.warm_start:
        return None, math.inf
    point = Assignment(values=dict(model.warm_start), objective=0.0,
                       status="feasible")
    report = evaluate(model, point, tolerance=1e-6)
    if not report.feasible:
        return None, math.inf
    point.objective = report.objective
    return point, report.objective


def branch_and_bound(model: MilpModel, params: SolveParams | None = None,
                     stop=None) -> Assignment:
    """Exact best-first branch and bound over the embedded simplex.

    Branches on the most fractional binary, ties broken by lowest variable
    name; fully deterministic for a given model and params.
    """
    params = params or SolveParams()
    if model.num_vars > EMBEDDED_VAR_CEILING:
        raise SolverError(
            f"model has {model.num_vars} variables, above the embedded "
            f"ceiling of {EMBEDDED_VAR_CEILING}; use an external adapter")
    c, lb0, ub0 = _model_arrays(model)
    prep = PreparedLp(c, model.con_terms, model.con_senses, model.con_rhs)
    bins = model.binary_indices()
    bin_names = {i: model.var_names[i] for i in bins}

    incumbent_x = None
    incumbent_obj = math.inf
    if params.warm_start:
        ws_point, ws_obj = _warm_start_incumbent(model)
        if ws_point is not None:
            incumbent_obj = ws_obj
            incumbent_x = np.array([ws_point.value(n) for n in model.var_names])

    deadline = time.monotonic() + params.time_limit
    heap = []
    seq = 0
    heapq.heappush(heap, (-math.inf, seq, lb0, ub0))
    nodes = 0
    timed_out = False
    while heap:
        bound, _, nlb, nub = heapq.heappop(heap)
        if bound >= incumbent_obj - 1e-9:
            continue
        if stop is not None and stop():
            timed_out = True
            break
        if time.monotonic() > deadline or nodes >= params.node_limit:
            timed_out = True
            break
        nodes += 1
        res = prep.solve(nlb, nub)
        if res.status in ("infeasible", "iteration-limit"):
            continue
        if res.status == "unbounded":
            raise SolverError("MILP relaxation is unbounded")
        node_obj = res.objective + model.obj_constant
        if node_obj >= incumbent_obj - 1e-9:
            continue
        if incumbent_obj < math.inf and params.mip_gap > 0:
            if (incumbent_obj - node_obj) <= params.mip_gap * abs(incumbent_obj):
                continue
        x = res.x
        frac = [(i, abs(x[i] - round(x[i]))) for i in bins]
        frac = [(i, f) for i, f in frac if f > INT_TOL]
        if not frac:
            incumbent_obj = node_obj
            incumbent_x = x.copy()
            continue
        best_f = max(f for _, f in frac)
        candidates = sorted(bin_names[i] for i, f in frac if f >= best_f - 1e-12)
        bvar = model.var_index(candidates[0])
        for fix_val in (0.0, 1.0):
            blb, bub = nlb.copy(), nub.copy()
            blb[bvar] = fix_val
            bub[bvar] = fix_val
            seq += 1
            heapq.heappush(heap, (node_obj, seq, blb, bub))

    if incumbent_x is None:
        status = "time-limit" if timed_out else "infeasible"
        return Assignment(values={}, objective=math.inf, status=status)
    status = "feasible" if timed_out else "optimal"
    return _assignment_from_x(model, incumbent_x, incumbent_obj, status)


def _solve_external(model: MilpModel, params: SolveParams,
                    adapter: SolverAdapter) -> Assignment:
    with tempfile.TemporaryDirectory(dir=adapter.workdir) as tmp:
        lp_path = Path(tmp) / "model.lp"
        sol_path = Path(tmp) / "model.sol"
        lp_path.write_text(export_lp(model), encoding="utf-8")
        cmd = [part.format(lp=str(lp_path), sol=str(sol_path),
                           time_limit=params.time_limit)
               for part in shlex.split(adapter.command)]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True,
                                  timeout=params.time_limit + 60)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise SolverError(f"external solver launch failed: {exc}")
        if not sol_path.exists():
            raise SolverError(
                f"external solver produced no output (exit {proc.returncode}): "
                f"{proc.stderr.strip()[:500]}")
        return parse_solution(sol_path.read_text(encoding="utf-8"), model)


def solve(model: MilpModel, params: SolveParams | None = None,
          adapter: SolverAdapter | None = None, stop=None) -> Assignment:
    """Solve a MilpModel; any returned point is re-checked by evaluate()."""
    params = params or SolveParams()
    adapter = adapter or SolverAdapter()
    if adapter.kind == "embedded":
        result = branch_and_bound(model, params, stop=stop)
    else:
        result = _solve_external(model, params, adapter)
    if result.status in ("optimal", "feasible"):
        # 1e-5 absolute: rows with kW-scale coefficients carry simplex noise
        # a touch above the usual 1e-6
        report = evaluate(model, result, tolerance=1e-5)
        if not report.feasible:
            worst = max(report.violations, key=lambda kv: abs(kv[1]))
            raise SolverError(
                f"solver returned an infeasible point: {worst[0]} violated "
                f"by {worst[1]:.3g}")
        result.objective = report.objective
    return result
