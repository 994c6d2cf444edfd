"""Repair crew routing, resource logistics, and restoration scheduling for
unbalanced distribution feeders."""

from .engine import (DispatchState, Incumbent, IncumbentStore, SearchParams,
                     dynamic_step, neighborhood_search, priority_baseline,
                     run_pipeline)
from .fieldsim import run_episode
from .milp import Assignment, MilpModel, evaluate, export_lp, parse_lp
from .netmodel import Scenario, parse_scenario, serialize_scenario
from .solver import SolveParams, SolverAdapter, adapter_from_spec, solve

__version__ = "0.1.0"

__all__ = [
    "Assignment", "DispatchState", "Incumbent", "IncumbentStore",
    "MilpModel", "Scenario", "SearchParams", "SolveParams", "SolverAdapter",
    "adapter_from_spec", "dynamic_step", "evaluate", "export_lp",
    "neighborhood_search", "parse_lp", "parse_scenario", "priority_baseline",
    "run_episode", "run_pipeline", "serialize_scenario", "solve",
    "__version__",
]
