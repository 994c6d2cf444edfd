import itertools
import random

import pytest

from conftest import random_model
from gridmend.milp import BINARY, CONTINUOUS, Assignment, MilpModel, evaluate
from gridmend.scipy_backend import solve_with_scipy
from gridmend.solver import (EMBEDDED_VAR_CEILING, SCIPY_BACKEND_COMMAND,
                             SolveParams, SolverAdapter, SolverError,
                             adapter_from_spec, solve)


def knapsack_model():
    # max 5a + 4b + 3c s.t. 2a + 3b + c <= 4  (min of the negation)
    m = MilpModel("knap")
    for name in "abc":
        m.add_var(name, BINARY)
    m.add_con("cap", [(0, 2.0), (1, 3.0), (2, 1.0)], "<=", 4.0)
    m.set_objective({0: -5.0, 1: -4.0, 2: -3.0})
    return m


def knapsack_brute_force():
    best = 0.0
    for bits in itertools.product((0, 1), repeat=3):
        if 2 * bits[0] + 3 * bits[1] + bits[2] <= 4:
            best = min(best, -5 * bits[0] - 4 * bits[1] - 3 * bits[2])
    return best


def test_embedded_knapsack():
    res = solve(knapsack_model())
    assert res.status == "optimal"
    assert res.objective == pytest.approx(knapsack_brute_force())


def test_mixed_integer_continuous():
    m = MilpModel()
    b = m.add_var("b", BINARY)
    x = m.add_var("x", CONTINUOUS, 0.0, 10.0)
    m.add_con("link", [(x, 1.0), (b, -10.0)], "<=", 0.0)
    m.set_objective({x: -1.0, b: 4.0})
    res = solve(m)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-6.0)  # b=1, x=10


def test_infeasible_milp():
    m = MilpModel()
    b = m.add_var("b", BINARY)
    m.add_con("c1", [(b, 1.0)], ">=", 0.6)
    m.add_con("c2", [(b, 1.0)], "<=", 0.4)
    res = solve(m)
    assert res.status == "infeasible"


def test_warm_start_bounds_the_search():
    m = knapsack_model()
    m.warm_start = {"a": 1.0, "b": 0.0, "c": 1.0}  # feasible, obj -8
    res = solve(m)
    assert res.objective <= -8.0 + 1e-9
    assert res.objective == pytest.approx(knapsack_brute_force())


def test_var_ceiling_guard():
    m = MilpModel()
    for i in range(EMBEDDED_VAR_CEILING + 1):
        m.add_var(f"v{i}")
    with pytest.raises(SolverError):
        solve(m)


def test_solution_recheck_rejects_bad_external_point(tmp_path):
    # an "external solver" that claims an infeasible point is optimal
    script = tmp_path / "liar.py"
    script.write_text(
        "import sys\n"
        "open(sys.argv[2], 'w').write('status optimal\\nobj 0\\n"
        "b 0.5\\n')\n")
    m = MilpModel()
    m.add_var("b", BINARY)
    m.add_con("c", [(0, 1.0)], ">=", 1.0)
    m.set_objective({0: 1.0})
    adapter = SolverAdapter(kind="external",
                            command=f"python3 {script} {{lp}} {{sol}}")
    with pytest.raises(SolverError):
        solve(m, adapter=adapter)


def test_adapter_from_spec():
    assert adapter_from_spec(None) is None
    assert adapter_from_spec("embedded") is None
    ext = adapter_from_spec("external")
    assert ext.kind == "external" and ext.command == SCIPY_BACKEND_COMMAND
    custom = adapter_from_spec("external:mysolver {lp} {sol}")
    assert custom.command == "mysolver {lp} {sol}"
    with pytest.raises(ValueError):
        adapter_from_spec("cplex")
    with pytest.raises(ValueError):
        SolverAdapter(kind="external", command="no-placeholders")


def test_external_scipy_backend_subprocess(external):
    m = knapsack_model()
    res = solve(m, SolveParams(time_limit=30), external)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(knapsack_brute_force())


@pytest.mark.parametrize("seed", range(30))
def test_embedded_matches_scipy_on_random_milps(seed):
    model = random_model(random.Random(1000 + seed))
    ref = solve_with_scipy(model)
    try:
        mine = solve(model, SolveParams(time_limit=60))
    except SolverError as exc:
        pytest.fail(f"embedded solver failed: {exc}")
    if ref.status == "infeasible":
        assert mine.status == "infeasible"
        return
    assert ref.status == "optimal"
    assert mine.status == "optimal"
    assert mine.objective == pytest.approx(ref.objective, abs=1e-6)
    assert evaluate(model, mine).feasible


def test_solve_normalizes_objective_from_values():
    m = knapsack_model()
    res = solve(m)
    rep = evaluate(m, res)
    assert res.objective == pytest.approx(rep.objective)
